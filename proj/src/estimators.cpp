#include "calppi/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "calppi/errors.hpp"
#include "calppi/inference.hpp"
#include "calppi/selection.hpp"

namespace calppi {
namespace {

void check_lengths(const TwoSampleDesign& design, std::span<const double> f_l,
                   std::span<const double> f_u, const char* op) {
  if (f_l.size() != design.n() || f_u.size() != design.big_n()) {
    throw DimensionError(std::string(op) + ": adjustment lengths " + std::to_string(f_l.size()) +
                         "/" + std::to_string(f_u.size()) + " do not match n=" +
                         std::to_string(design.n()) + ", N=" + std::to_string(design.big_n()));
  }
}

double mean_residual(std::span<const double> y, std::span<const double> f) {
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) total += y[i] - f[i];
  return total / static_cast<double>(y.size());
}

double labeled_mse(std::span<const double> y, std::span<const double> f) {
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) total += (y[i] - f[i]) * (y[i] - f[i]);
  return total / static_cast<double>(y.size());
}

Vector scaled(std::span<const double> v, double factor) {
  Vector out(v.begin(), v.end());
  for (double& x : out) x *= factor;
  return out;
}

bool relatively_different(double a, double b) {
  return std::abs(a - b) > 1e-10 * std::max({1.0, std::abs(a), std::abs(b)});
}

double centered_sq_mean(std::span<const double> v) {
  const double mu = mean(v);
  double total = 0.0;
  for (double x : v) total += (x - mu) * (x - mu);
  return total / static_cast<double>(v.size());
}

double sq_mean(std::span<const double> v) {
  double total = 0.0;
  for (double x : v) total += x * x;
  return total / static_cast<double>(v.size());
}

EstimateReport venn_abers_estimate(const TwoSampleDesign& design, double alpha) {
  const auto& lab = design.labeled();
  const auto [lo_it, hi_it] = std::minmax_element(lab.outcomes.begin(), lab.outcomes.end());
  double lo = 0.0;
  double width = 1.0;
  const bool rescale = *lo_it < 0.0 || *hi_it > 1.0;
  if (rescale) {
    lo = *lo_it;
    width = *hi_it - *lo_it;
  }
  Vector y01(lab.outcomes);
  for (double& y : y01) y = (y - lo) / width;
  const double target = (aipw_raw(design, alpha).estimate - lo) / width;

  Vector f_l = fit_venn_abers(lab.scores, y01, lab.scores, target);
  Vector f_u = fit_venn_abers(lab.scores, y01, design.unlabeled().scores, target);
  for (double& v : f_l) v = lo + width * v;
  for (double& v : f_u) v = lo + width * v;

  const double psi = pooled_mean(design, f_l, f_u);
  EstimateReport report = report_from_adjustment(design, f_l, f_u, psi, Method::VennAbers, alpha);
  report.diagnostics.values["aipw_form"] = psi + mean_residual(lab.outcomes, f_l);
  report.diagnostics.values["shrink_target"] = lo + width * target;
  if (rescale) {
    report.diagnostics.values["rescale_offset"] = lo;
    report.diagnostics.values["rescale_width"] = width;
  }
  return report;
}

}  // namespace

double aipw_general(const ScoredDesign& scored) {
  const TwoSampleDesign& design = scored.design;
  check_lengths(design, scored.f_labeled, scored.f_unlabeled, "aipw_general");
  require_finite(scored.f_labeled, "aipw_general labeled adjustment");
  require_finite(scored.f_unlabeled, "aipw_general unlabeled adjustment");
  return pooled_mean(design, scored.f_labeled, scored.f_unlabeled) +
         mean_residual(design.labeled().outcomes, scored.f_labeled);
}

EstimateReport report_from_adjustment(const TwoSampleDesign& design, std::span<const double> f_l,
                                      std::span<const double> f_u, double psi, Method method,
                                      double alpha) {
  check_lengths(design, f_l, f_u, "report_from_adjustment");
  const double shift = psi - pooled_mean(design, f_l, f_u);
  Vector a_l(f_l.begin(), f_l.end());
  Vector a_u(f_u.begin(), f_u.end());
  if (shift != 0.0) {
    for (double& v : a_l) v += shift;
    for (double& v : a_u) v += shift;
  }
  const InfluencePair pair = influence_values(design, a_l, a_u, psi);
  EstimateReport report;
  report.estimate = psi;
  report.std_error = wald_se(pair, design);
  std::tie(report.ci_lower, report.ci_upper) = wald_interval(psi, report.std_error, alpha);
  report.alpha = alpha;
  report.method = method;
  report.n = design.n();
  report.big_n = design.big_n();
  return report;
}

EstimateReport labeled_only(const TwoSampleDesign& design, double alpha) {
  const Vector& y = design.labeled().outcomes;
  if (y.size() < 2) throw DataError("labeled-only: variance undefined for n < 2");
  const double mu = mean(y);
  double ss = 0.0;
  for (double v : y) ss += (v - mu) * (v - mu);
  const double sd = std::sqrt(ss / static_cast<double>(y.size() - 1));

  EstimateReport report;
  report.estimate = mu;
  report.std_error = sd / std::sqrt(static_cast<double>(y.size()));
  std::tie(report.ci_lower, report.ci_upper) = wald_interval(mu, report.std_error, alpha);
  report.alpha = alpha;
  report.method = Method::LabeledOnly;
  report.n = design.n();
  report.big_n = design.big_n();
  return report;
}

EstimateReport ppi(const TwoSampleDesign& design, double alpha) {
  const auto& lab = design.labeled();
  const double psi = mean(design.unlabeled().scores) + mean_residual(lab.outcomes, lab.scores);
  // PPI is the AIPW member with f = m / (1 - rho).
  const double factor = 1.0 / (1.0 - design.rho());
  const Vector f_l = scaled(lab.scores, factor);
  const Vector f_u = scaled(design.unlabeled().scores, factor);
  return report_from_adjustment(design, f_l, f_u, psi, Method::PPI, alpha);
}

EstimateReport aipw_raw(const TwoSampleDesign& design, double alpha) {
  const auto& lab = design.labeled();
  const ScoredDesign scored{design, lab.scores, design.unlabeled().scores};
  return report_from_adjustment(design, lab.scores, design.unlabeled().scores,
                                aipw_general(scored), Method::AIPW, alpha);
}

ClipRange ppi_plus_plus_clip(const TwoSampleDesign& design) {
  return {0.0, 1.0 / (1.0 - design.rho())};
}

EemLambda eem_lambda(const TwoSampleDesign& design, std::optional<ClipRange> clip) {
  const auto& lab = design.labeled();
  const Vector& m_u = design.unlabeled().scores;
  const double rho = design.rho();
  const double mean_y = mean(lab.outcomes);
  const double mean_m = mean(lab.scores);
  double cov = 0.0;
  for (std::size_t i = 0; i < lab.size(); ++i) {
    cov += (lab.outcomes[i] - mean_y) * (lab.scores[i] - mean_m);
  }
  cov /= static_cast<double>(lab.size());
  const double denom = (1.0 - rho) * centered_sq_mean(lab.scores) + rho * centered_sq_mean(m_u);
  const double scale = std::max(sq_mean(lab.scores), sq_mean(m_u));

  EemLambda out;
  if (!(denom > 1e-12 * scale) || denom <= 0.0) {
    out.degenerate = true;
    return out;
  }
  out.unclipped = cov / denom;
  out.lambda = out.unclipped;
  if (clip) {
    out.lambda = std::clamp(out.unclipped, clip->first, clip->second);
    out.clip_active = out.lambda != out.unclipped;
  }
  return out;
}

EstimateReport eem_estimate(const TwoSampleDesign& design, std::optional<ClipRange> clip,
                            double alpha) {
  const EemLambda lam = eem_lambda(design, clip);
  const auto& lab = design.labeled();
  const Vector f_l = scaled(lab.scores, lam.lambda);
  const Vector f_u = scaled(design.unlabeled().scores, lam.lambda);
  const ScoredDesign scored{design, f_l, f_u, "scaled"};
  const Method method = clip ? Method::PPIpp : Method::AipwEM;
  EstimateReport report =
      report_from_adjustment(design, f_l, f_u, aipw_general(scored), method, alpha);
  report.diagnostics.values["lambda"] = lam.lambda;
  report.diagnostics.values["lambda_unclipped"] = lam.unclipped;
  report.diagnostics.values["clip_active"] = lam.clip_active ? 1.0 : 0.0;
  if (lam.degenerate) {
    report.diagnostics.notes["warning"] =
        "degenerate score: zero variance in both samples, lambda set to 0 (labeled-only)";
  }
  return report;
}

EstimateReport calibrated_plugin(const TwoSampleDesign& design, const Calibrator& calibrator,
                                 double alpha, Method method) {
  if (fitted_on(calibrator) != design.labeled_fingerprint()) {
    throw MisuseError("calibrated_plugin: calibrator was not fitted on this design's labeled sample");
  }
  const auto& lab = design.labeled();
  const auto& unl = design.unlabeled();
  const bool needs_cov = std::holds_alternative<LinearCovCalibrator>(calibrator);
  if (needs_cov && !design.has_covariates()) {
    throw ConfigError("calibrated_plugin: covariate-adjusted calibrator needs covariates in both samples");
  }
  const Vector f_l = predict(calibrator, lab.scores, needs_cov ? &*lab.covariates : nullptr);
  const Vector f_u = predict(calibrator, unl.scores, needs_cov ? &*unl.covariates : nullptr);
  const double psi = pooled_mean(design, f_l, f_u);

  EstimateReport report = report_from_adjustment(design, f_l, f_u, psi, method, alpha);
  const double aipw_form = psi + mean_residual(lab.outcomes, f_l);
  auto& diag = report.diagnostics;
  diag.values["mse_raw"] = labeled_mse(lab.outcomes, lab.scores);
  diag.values["mse_calibrated"] = labeled_mse(lab.outcomes, f_l);
  if (relatively_different(psi, aipw_form)) {
    diag.values["aipw_form"] = aipw_form;
    diag.notes["warning"] = "calibrated predictions are not mean-calibrated on the labeled sample";
  }
  if (const auto* bins = std::get_if<BinnedCalibrator>(&calibrator); bins && bins->any_empty_bin()) {
    diag.notes["empty_bins"] = "empty bins used the global labeled mean";
  }
  if (const auto* affine = std::get_if<AffineCalibrator>(&calibrator)) {
    diag.values["slope"] = affine->slope;
    diag.values["intercept"] = affine->intercept;
  }
  if (const auto* sig = std::get_if<SigmoidCalibrator>(&calibrator)) {
    diag.values["platt_scale"] = sig->scale;
    diag.values["platt_shift"] = sig->shift;
  }
  if (const auto* step = std::get_if<StepCalibrator>(&calibrator)) {
    diag.values["blocks"] = static_cast<double>(step->values.size());
  }
  return report;
}

InterceptCalibrationCheck ppi_as_plugin_check(const TwoSampleDesign& design) {
  const auto& lab = design.labeled();
  const Vector& m_u = design.unlabeled().scores;
  const double a_const = mean_residual(lab.outcomes, lab.scores);
  Vector cal_l(lab.scores);
  Vector cal_u(m_u);
  for (double& v : cal_l) v += a_const;
  for (double& v : cal_u) v += a_const;

  InterceptCalibrationCheck out;
  out.ppi = mean(m_u) + mean_residual(lab.outcomes, lab.scores);
  out.ppi_as_unlabeled_plugin = mean(cal_u);
  out.aipw = aipw_general(ScoredDesign{design, lab.scores, m_u});
  out.aipw_as_pooled_plugin = pooled_mean(design, cal_l, cal_u);
  return out;
}

EstimateReport estimate(const TwoSampleDesign& design, Method method,
                        const EstimateOptions& options) {
  const double alpha = options.alpha;
  const auto& lab = design.labeled();
  switch (method) {
    case Method::LabeledOnly: return labeled_only(design, alpha);
    case Method::PPI: return ppi(design, alpha);
    case Method::AIPW: return aipw_raw(design, alpha);
    case Method::PPIpp: return eem_estimate(design, ppi_plus_plus_clip(design), alpha);
    case Method::AipwEM: return eem_estimate(design, std::nullopt, alpha);
    case Method::LinearCal:
      return calibrated_plugin(design, fit_linear(lab.scores, lab.outcomes, options.clip_linear),
                               alpha, method);
    case Method::LinearCovCal: {
      if (!design.has_covariates()) {
        throw ConfigError("linear-cov-cal needs covariates in both samples");
      }
      return calibrated_plugin(
          design, fit_linear_cov(lab.scores, lab.outcomes, *lab.covariates, options.clip_linear),
          alpha, method);
    }
    case Method::PlattCal:
      return calibrated_plugin(design, fit_platt(lab.scores, lab.outcomes), alpha, method);
    case Method::IsoCal:
      return calibrated_plugin(design, fit_isotonic(lab.scores, lab.outcomes), alpha, method);
    case Method::HistCal: {
      const Vector edges = options.hist_edges ? *options.hist_edges
                                              : default_histogram_edges(lab.scores, options.hist_bins);
      return calibrated_plugin(design, fit_histogram(lab.scores, lab.outcomes, edges), alpha,
                               method);
    }
    case Method::VennAbers: return venn_abers_estimate(design, alpha);
    case Method::AutoCal: {
      CandidateSet set;
      set.candidates = options.autocal.candidates;
      set.folds = options.autocal.folds;
      set.unlabeled_cap_factor = options.autocal.unlabeled_cap_factor;
      return autocal_select(design, set, options.autocal.seed, options).report;
    }
  }
  throw ConfigError("unsupported method");
}

}  // namespace calppi
