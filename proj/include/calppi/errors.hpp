#pragma once

#include <stdexcept>
#include <string>

namespace calppi {

// Base of every error caused by user input, configuration or data. The CLI
// maps these to exit code 2; anything else escaping is an internal error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// A calibrator applied to a design it was not fitted on.
class MisuseError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_scale, double last_shift)
      : Error(what), last_scale_(last_scale), last_shift_(last_shift) {}

  double last_scale() const noexcept { return last_scale_; }
  double last_shift() const noexcept { return last_shift_; }

 private:
  double last_scale_;
  double last_shift_;
};

}  // namespace calppi
