#include "calppi/method.hpp"

#include "calppi/errors.hpp"

namespace calppi {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::LabeledOnly: return "labeled-only";
    case Method::PPI: return "ppi";
    case Method::AIPW: return "aipw";
    case Method::PPIpp: return "ppi-pp";
    case Method::AipwEM: return "aipw-em";
    case Method::LinearCal: return "linear-cal";
    case Method::LinearCovCal: return "linear-cov-cal";
    case Method::PlattCal: return "platt-cal";
    case Method::IsoCal: return "iso-cal";
    case Method::HistCal: return "hist-cal";
    case Method::VennAbers: return "venn-abers";
    case Method::AutoCal: return "auto-cal";
  }
  return "unknown";
}

std::string valid_method_tags() {
  std::string out;
  for (Method m : kAllMethods) {
    if (!out.empty()) out += ", ";
    out += to_string(m);
  }
  return out;
}

Method parse_method(std::string_view tag) {
  for (Method m : kAllMethods) {
    if (to_string(m) == tag) return m;
  }
  throw ConfigError("unknown method '" + std::string(tag) + "'; valid methods: " +
                    valid_method_tags());
}

}  // namespace calppi
