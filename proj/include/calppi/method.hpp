#pragma once

#include <array>
#include <string>
#include <string_view>

namespace calppi {

enum class Method {
  LabeledOnly,
  PPI,
  AIPW,
  PPIpp,
  AipwEM,
  LinearCal,
  LinearCovCal,
  PlattCal,
  IsoCal,
  HistCal,
  VennAbers,
  AutoCal,
};

inline constexpr std::array<Method, 12> kAllMethods = {
    Method::LabeledOnly, Method::PPI,       Method::AIPW,         Method::PPIpp,
    Method::AipwEM,      Method::LinearCal, Method::LinearCovCal, Method::PlattCal,
    Method::IsoCal,      Method::HistCal,   Method::VennAbers,    Method::AutoCal,
};

// Kebab-case tags used on the command line and in every serialized output.
std::string_view to_string(Method method);

// Throws ConfigError listing the valid tags.
Method parse_method(std::string_view tag);

std::string valid_method_tags();

}  // namespace calppi
