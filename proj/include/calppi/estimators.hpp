#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>

#include "calppi/calibrators.hpp"
#include "calppi/design.hpp"

namespace calppi {

// Adjustment values f(X_i), f(X~_j) attached to a design. Holds a reference;
// the design must outlive it.
struct ScoredDesign {
  const TwoSampleDesign& design;
  Vector f_labeled;
  Vector f_unlabeled;
  std::string provenance = "raw";
};

// rho * mean(f_L) + (1 - rho) * mean(f_U) + mean(Y - f_L).
double aipw_general(const ScoredDesign& scored);

EstimateReport labeled_only(const TwoSampleDesign& design, double alpha = 0.05);
EstimateReport ppi(const TwoSampleDesign& design, double alpha = 0.05);
EstimateReport aipw_raw(const TwoSampleDesign& design, double alpha = 0.05);

using ClipRange = std::pair<double, double>;

struct EemLambda {
  double lambda = 0.0;
  double unclipped = 0.0;
  bool clip_active = false;
  bool degenerate = false;
};

// Closed-form empirical-efficiency-maximizing scale for f = lambda * m,
// optionally clamped to `clip`.
EemLambda eem_lambda(const TwoSampleDesign& design, std::optional<ClipRange> clip = std::nullopt);

// The safety interval [0, 1/(1 - rho)] used by PPI++.
ClipRange ppi_plus_plus_clip(const TwoSampleDesign& design);

EstimateReport eem_estimate(const TwoSampleDesign& design, std::optional<ClipRange> clip,
                            double alpha = 0.05);

// Pooled mean of calibrated predictions with the Wald interval built from the
// calibrated influence pair. The calibrator must have been fitted on this
// design's labeled sample.
EstimateReport calibrated_plugin(const TwoSampleDesign& design, const Calibrator& calibrator,
                                 double alpha = 0.05, Method method = Method::IsoCal);

struct InterceptCalibrationCheck {
  double ppi = 0.0;
  double ppi_as_unlabeled_plugin = 0.0;
  double aipw = 0.0;
  double aipw_as_pooled_plugin = 0.0;
};

// PPI and AIPW recomputed as plug-ins of the intercept-only calibrated score
// m + mean(Y - m). Each pair agrees up to rounding.
InterceptCalibrationCheck ppi_as_plugin_check(const TwoSampleDesign& design);

struct AutoCalOptions {
  std::vector<Method> candidates = {Method::AIPW, Method::LinearCal, Method::IsoCal,
                                    Method::HistCal};
  std::optional<std::size_t> folds;  // unset: 20, reduced for small n
  std::size_t unlabeled_cap_factor = 10;
  std::uint64_t seed = 0;
};

struct EstimateOptions {
  double alpha = 0.05;
  // Clip linear maps to the labeled outcome range.
  bool clip_linear = true;
  std::optional<Vector> hist_edges;
  std::size_t hist_bins = 10;
  AutoCalOptions autocal;
};

// Runs one named estimator end to end, refitting any calibration step.
EstimateReport estimate(const TwoSampleDesign& design, Method method,
                        const EstimateOptions& options = {});

// Builds the report for an estimate with adjustment values (fL, fU): the
// adjustment is recentered so its pooled mean equals psi, then the Wald SE
// comes from the resulting influence pair.
EstimateReport report_from_adjustment(const TwoSampleDesign& design, std::span<const double> f_l,
                                      std::span<const double> f_u, double psi, Method method,
                                      double alpha);

}  // namespace calppi
