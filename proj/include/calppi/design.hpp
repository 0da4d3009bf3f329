#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "calppi/method.hpp"

namespace calppi {

using Vector = std::vector<double>;
using Matrix = Eigen::MatrixXd;

struct LabeledSample {
  Vector scores;
  Vector outcomes;
  std::optional<Matrix> covariates;

  std::size_t size() const { return scores.size(); }
};

bool operator==(const LabeledSample& a, const LabeledSample& b);

struct UnlabeledSample {
  Vector scores;
  std::optional<Matrix> covariates;

  std::size_t size() const { return scores.size(); }
};

bool operator==(const UnlabeledSample& a, const UnlabeledSample& b);

// Identifies the labeled data a calibrator was fitted on.
struct Fingerprint {
  std::size_t size = 0;
  std::uint64_t checksum = 0;

  bool operator==(const Fingerprint&) const = default;
};

Fingerprint fingerprint(std::span<const double> scores, std::span<const double> outcomes);

// Validated labeled + unlabeled pair. Only validate_design() builds one, so
// rho always equals n / (n + N) for the stored samples.
class TwoSampleDesign {
 public:
  const LabeledSample& labeled() const { return labeled_; }
  const UnlabeledSample& unlabeled() const { return unlabeled_; }

  std::size_t n() const { return labeled_.size(); }
  std::size_t big_n() const { return unlabeled_.size(); }
  std::size_t m_total() const { return n() + big_n(); }
  double rho() const { return rho_; }
  bool has_covariates() const {
    return labeled_.covariates.has_value() && unlabeled_.covariates.has_value();
  }
  Fingerprint labeled_fingerprint() const;

  bool operator==(const TwoSampleDesign&) const = default;

 private:
  friend TwoSampleDesign validate_design(LabeledSample labeled, UnlabeledSample unlabeled);
  TwoSampleDesign(LabeledSample labeled, UnlabeledSample unlabeled);

  LabeledSample labeled_;
  UnlabeledSample unlabeled_;
  double rho_ = 0.0;
};

TwoSampleDesign validate_design(LabeledSample labeled, UnlabeledSample unlabeled);

// rho * mean(f_labeled) + (1 - rho) * mean(f_unlabeled), i.e. the mean over
// the pooled sample.
double pooled_mean(const TwoSampleDesign& design, std::span<const double> f_labeled,
                   std::span<const double> f_unlabeled);

double mean(std::span<const double> values);

struct Diagnostics {
  std::map<std::string, double> values;
  std::map<std::string, std::string> notes;

  bool operator==(const Diagnostics&) const = default;
};

struct EstimateReport {
  double estimate = 0.0;
  double std_error = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  double alpha = 0.05;
  Method method = Method::LabeledOnly;
  std::size_t n = 0;
  std::size_t big_n = 0;
  Diagnostics diagnostics;

  bool operator==(const EstimateReport&) const = default;
};

void require_finite(std::span<const double> values, const char* what);

}  // namespace calppi
