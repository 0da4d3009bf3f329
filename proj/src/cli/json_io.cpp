#include <cmath>
#include <limits>
#include <string>
#include <type_traits>

#include "calppi/cli.hpp"
#include "calppi/errors.hpp"

namespace calppi::cli {
namespace {

using nlohmann::json;

// JSON has no literal for inf/nan, so those travel as strings.
json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double to_double(const json& j, const char* what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw DataError(std::string("JSON field '") + what + "' is not a number");
}

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw DataError(std::string("JSON object is missing field '") + key + "'");
  }
  return j.at(key);
}

json vector_json(const Vector& v) {
  json out = json::array();
  for (double x : v) out.push_back(number(x));
  return out;
}

Vector vector_from(const json& j, const char* what) {
  if (!j.is_array()) throw DataError(std::string("JSON field '") + what + "' is not an array");
  Vector out;
  out.reserve(j.size());
  for (const auto& x : j) out.push_back(to_double(x, what));
  return out;
}

json pair_json(const std::pair<double, double>& p) { return json::array({number(p.first), number(p.second)}); }

std::pair<double, double> pair_from(const json& j, const char* what) {
  const Vector v = vector_from(j, what);
  if (v.size() != 2) throw DataError(std::string("JSON field '") + what + "' needs two entries");
  return {v[0], v[1]};
}

json clip_json(const std::optional<std::pair<double, double>>& clip) {
  return clip ? pair_json(*clip) : json(nullptr);
}

std::optional<std::pair<double, double>> clip_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return pair_from(j, "clip_range");
}

json fingerprint_json(const Fingerprint& fp) {
  return {{"size", fp.size}, {"checksum", fp.checksum}};
}

Fingerprint fingerprint_from(const json& j) {
  Fingerprint fp;
  fp.size = field(j, "size").get<std::size_t>();
  fp.checksum = field(j, "checksum").get<std::uint64_t>();
  return fp;
}

}  // namespace

json report_to_json(const EstimateReport& report) {
  json values = json::object();
  for (const auto& [key, value] : report.diagnostics.values) values[key] = number(value);
  json notes = json::object();
  for (const auto& [key, value] : report.diagnostics.notes) notes[key] = value;
  return {{"method", to_string(report.method)},
          {"estimate", number(report.estimate)},
          {"std_error", number(report.std_error)},
          {"ci", json::array({number(report.ci_lower), number(report.ci_upper)})},
          {"alpha", report.alpha},
          {"n", report.n},
          {"N", report.big_n},
          {"diagnostics", {{"values", values}, {"notes", notes}}}};
}

EstimateReport report_from_json(const json& j) {
  EstimateReport r;
  r.method = parse_method(field(j, "method").get<std::string>());
  r.estimate = to_double(field(j, "estimate"), "estimate");
  r.std_error = to_double(field(j, "std_error"), "std_error");
  std::tie(r.ci_lower, r.ci_upper) = pair_from(field(j, "ci"), "ci");
  r.alpha = to_double(field(j, "alpha"), "alpha");
  r.n = field(j, "n").get<std::size_t>();
  r.big_n = field(j, "N").get<std::size_t>();
  const json& diag = field(j, "diagnostics");
  for (const auto& [key, value] : field(diag, "values").items()) {
    r.diagnostics.values[key] = to_double(value, key.c_str());
  }
  for (const auto& [key, value] : field(diag, "notes").items()) {
    r.diagnostics.notes[key] = value.get<std::string>();
  }
  return r;
}

json bootstrap_to_json(Method method, const BootstrapResult& result) {
  return {{"method", to_string(method)},
          {"estimate", number(result.estimate)},
          {"se_boot", number(result.se_boot)},
          {"percentile_ci", pair_json(result.percentile_ci)},
          {"normal_ci", pair_json(result.normal_ci)},
          {"alpha", result.alpha},
          {"b", result.b},
          {"seed", result.seed}};
}

json calibrator_to_json(const Calibrator& calibrator) {
  return std::visit(
      [](const auto& cal) -> json {
        using T = std::decay_t<decltype(cal)>;
        json j;
        if constexpr (std::is_same_v<T, StepCalibrator>) {
          j = {{"type", "isotonic"},
               {"boundaries", vector_json(cal.boundaries)},
               {"lower_edges", vector_json(cal.lower_edges)},
               {"values", vector_json(cal.values)}};
        } else if constexpr (std::is_same_v<T, AffineCalibrator>) {
          j = {{"type", "linear"},
               {"slope", number(cal.slope)},
               {"intercept", number(cal.intercept)},
               {"clip_range", clip_json(cal.clip_range)}};
        } else if constexpr (std::is_same_v<T, SigmoidCalibrator>) {
          j = {{"type", "platt"},
               {"scale", number(cal.scale)},
               {"shift", number(cal.shift)},
               {"logit_eps", number(cal.logit_eps)}};
        } else if constexpr (std::is_same_v<T, BinnedCalibrator>) {
          j = {{"type", "histogram"},
               {"edges", vector_json(cal.edges)},
               {"bin_means", vector_json(cal.bin_means)},
               {"bin_counts", vector_json(cal.bin_counts)},
               {"fallback", number(cal.fallback)}};
        } else {
          j = {{"type", "linear-cov"},
               {"intercept", number(cal.intercept)},
               {"score_coef", number(cal.score_coef)},
               {"cov_coefs", vector_json(cal.cov_coefs)},
               {"clip_range", clip_json(cal.clip_range)}};
        }
        j["fitted_on"] = fingerprint_json(cal.fitted_on);
        return j;
      },
      calibrator);
}

Calibrator calibrator_from_json(const json& j) {
  const std::string type = field(j, "type").get<std::string>();
  const Fingerprint fp = fingerprint_from(field(j, "fitted_on"));
  if (type == "isotonic") {
    StepCalibrator c;
    c.boundaries = vector_from(field(j, "boundaries"), "boundaries");
    c.lower_edges = vector_from(field(j, "lower_edges"), "lower_edges");
    c.values = vector_from(field(j, "values"), "values");
    if (c.boundaries.size() != c.values.size() || c.lower_edges.size() != c.values.size()) {
      throw DataError("isotonic calibrator arrays differ in length");
    }
    c.fitted_on = fp;
    return c;
  }
  if (type == "linear") {
    AffineCalibrator c;
    c.slope = to_double(field(j, "slope"), "slope");
    c.intercept = to_double(field(j, "intercept"), "intercept");
    c.clip_range = clip_from(field(j, "clip_range"));
    c.fitted_on = fp;
    return c;
  }
  if (type == "platt") {
    SigmoidCalibrator c;
    c.scale = to_double(field(j, "scale"), "scale");
    c.shift = to_double(field(j, "shift"), "shift");
    c.logit_eps = to_double(field(j, "logit_eps"), "logit_eps");
    c.fitted_on = fp;
    return c;
  }
  if (type == "histogram") {
    BinnedCalibrator c;
    c.edges = vector_from(field(j, "edges"), "edges");
    c.bin_means = vector_from(field(j, "bin_means"), "bin_means");
    c.bin_counts = vector_from(field(j, "bin_counts"), "bin_counts");
    c.fallback = to_double(field(j, "fallback"), "fallback");
    if (c.edges.size() != c.bin_means.size() + 1 || c.bin_counts.size() != c.bin_means.size()) {
      throw DataError("histogram calibrator arrays have inconsistent lengths");
    }
    c.fitted_on = fp;
    return c;
  }
  if (type == "linear-cov") {
    LinearCovCalibrator c;
    c.intercept = to_double(field(j, "intercept"), "intercept");
    c.score_coef = to_double(field(j, "score_coef"), "score_coef");
    c.cov_coefs = vector_from(field(j, "cov_coefs"), "cov_coefs");
    c.clip_range = clip_from(field(j, "clip_range"));
    c.fitted_on = fp;
    return c;
  }
  throw DataError("unknown calibrator type '" + type + "'");
}

}  // namespace calppi::cli
