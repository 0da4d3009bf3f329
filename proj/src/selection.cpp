#include "calppi/selection.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "calppi/errors.hpp"
#include "calppi/inference.hpp"
#include "calppi/rng.hpp"

namespace calppi {
namespace {

// Seeded Fisher-Yates; std::shuffle is not portable across standard libraries.
void shuffle(std::vector<std::size_t>& v, Stream& stream) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[stream.index(i)]);
  }
}

double fold_criterion(double rho, std::span<const double> f_l, std::span<const double> y,
                      std::span<const double> f_u) {
  const double mean_l = mean(f_l);
  const double mean_u = mean(f_u);
  double resid = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) resid += y[i] - f_l[i];
  resid /= static_cast<double>(y.size());
  const double pooled = rho * mean_l + (1.0 - rho) * mean_u;
  const double psi = pooled + resid;
  const double shift = psi - pooled;

  double ss_l = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double a = f_l[i] + shift;
    const double d = a - psi + (y[i] - a) / rho;
    ss_l += d * d;
  }
  double ss_u = 0.0;
  for (double f : f_u) {
    const double d = f + shift - psi;
    ss_u += d * d;
  }
  return rho * ss_l / static_cast<double>(y.size()) +
         (1.0 - rho) * ss_u / static_cast<double>(f_u.size());
}

Matrix take_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

}  // namespace

std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("need at least 2 folds");
  if (k > n) {
    throw ConfigError("folds (" + std::to_string(k) + ") exceed labeled sample size (" +
                      std::to_string(n) + ")");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Stream stream{seed, key(StreamPurpose::FoldAssignment)};
  shuffle(order, stream);
  std::vector<std::size_t> fold(n);
  const std::size_t base = n / k;
  const std::size_t extra = n % k;
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    for (std::size_t s = 0; s < size; ++s) fold[order[pos++]] = f;
  }
  return fold;
}

std::size_t effective_folds(std::size_t n, std::optional<std::size_t> requested) {
  if (requested) {
    if (*requested < 2) throw ConfigError("need at least 2 folds");
    if (*requested > n) {
      throw ConfigError("folds (" + std::to_string(*requested) + ") exceed labeled sample size (" +
                        std::to_string(n) + ")");
    }
  }
  if (n < 4) throw ConfigError("auto-cal needs at least 4 labeled points");
  return std::min(requested.value_or(kDefaultFolds), n / 2);
}

Vector FittedAdjustment::apply(std::span<const double> scores) const {
  if (!calibrator) return Vector(scores.begin(), scores.end());
  return predict(*calibrator, scores);
}

FittedAdjustment fit_adjustment(Method method, std::span<const double> scores,
                                std::span<const double> outcomes, const EstimateOptions& options) {
  FittedAdjustment out;
  out.method = method;
  switch (method) {
    case Method::AIPW: break;
    case Method::LinearCal: out.calibrator = fit_linear(scores, outcomes, options.clip_linear); break;
    case Method::IsoCal: out.calibrator = fit_isotonic(scores, outcomes); break;
    case Method::PlattCal: out.calibrator = fit_platt(scores, outcomes); break;
    case Method::HistCal: {
      const Vector edges = options.hist_edges ? *options.hist_edges
                                              : default_histogram_edges(scores, options.hist_bins);
      out.calibrator = fit_histogram(scores, outcomes, edges);
      break;
    }
    default:
      throw ConfigError("'" + std::string(to_string(method)) +
                        "' is not a score calibration method (use aipw, linear-cal, iso-cal, "
                        "hist-cal or platt-cal)");
  }
  return out;
}

AutoCalResult autocal_select(const TwoSampleDesign& design, const CandidateSet& candidates,
                             std::uint64_t seed, const EstimateOptions& options) {
  if (candidates.candidates.empty()) throw ConfigError("auto-cal: empty candidate list");
  for (Method m : candidates.candidates) {
    if (m != Method::AIPW && m != Method::LinearCal && m != Method::IsoCal &&
        m != Method::HistCal && m != Method::PlattCal) {
      throw ConfigError("auto-cal: unsupported candidate '" + std::string(to_string(m)) + "'");
    }
  }
  const std::size_t n = design.n();
  const std::size_t k = effective_folds(n, candidates.folds);
  const auto& lab = design.labeled();
  const auto& unl = design.unlabeled();
  const double rho = design.rho();

  const std::vector<std::size_t> folds = fold_assignment(n, k, seed);

  // One unlabeled subsample shared by every candidate and fold.
  const std::size_t cap = std::min(unl.size(), candidates.unlabeled_cap_factor * n);
  Vector sub_scores;
  if (cap == unl.size()) {
    sub_scores = unl.scores;
  } else {
    std::vector<std::size_t> idx(unl.size());
    std::iota(idx.begin(), idx.end(), 0);
    Stream stream{seed, key(StreamPurpose::UnlabeledSubsample)};
    for (std::size_t i = 0; i < cap; ++i) std::swap(idx[i], idx[i + stream.index(idx.size() - i)]);
    sub_scores.reserve(cap);
    for (std::size_t i = 0; i < cap; ++i) sub_scores.push_back(unl.scores[idx[i]]);
  }

  std::vector<Vector> train_scores(k);
  std::vector<Vector> train_y(k);
  std::vector<Vector> test_scores(k);
  std::vector<Vector> test_y(k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < k; ++f) {
      if (folds[i] == f) {
        test_scores[f].push_back(lab.scores[i]);
        test_y[f].push_back(lab.outcomes[i]);
      } else {
        train_scores[f].push_back(lab.scores[i]);
        train_y[f].push_back(lab.outcomes[i]);
      }
    }
  }

  AutoCalResult result;
  std::size_t best = 0;
  for (std::size_t c = 0; c < candidates.candidates.size(); ++c) {
    const Method method = candidates.candidates[c];
    double total = 0.0;
    for (std::size_t f = 0; f < k; ++f) {
      const FittedAdjustment adj = fit_adjustment(method, train_scores[f], train_y[f], options);
      total += fold_criterion(rho, adj.apply(test_scores[f]), test_y[f], adj.apply(sub_scores));
    }
    result.cv.push_back({method, total / static_cast<double>(k)});
    if (result.cv[c].criterion < result.cv[best].criterion) best = c;
  }

  result.selected = candidates.candidates[best];
  result.report = estimate(design, result.selected, options);
  result.report.method = Method::AutoCal;
  result.report.diagnostics.notes["selected"] = std::string(to_string(result.selected));
  result.report.diagnostics.values["folds"] = static_cast<double>(k);
  for (const CvRow& row : result.cv) {
    result.report.diagnostics.values["cv_" + std::string(to_string(row.method))] = row.criterion;
  }
  return result;
}

Trainer ols_trainer() {
  return [](const Matrix& x, std::span<const double> y) -> ScoreFunction {
    const Eigen::Index n = x.rows();
    Matrix design(n, x.cols() + 1);
    design.col(0).setOnes();
    design.rightCols(x.cols()) = x;
    Eigen::VectorXd target(n);
    for (Eigen::Index i = 0; i < n; ++i) target(i) = y[static_cast<std::size_t>(i)];
    const Eigen::VectorXd coef = design.completeOrthogonalDecomposition().solve(target);
    return [coef](const Matrix& z) {
      Vector out(static_cast<std::size_t>(z.rows()));
      for (Eigen::Index i = 0; i < z.rows(); ++i) {
        out[static_cast<std::size_t>(i)] = coef(0) + z.row(i).dot(coef.tail(z.cols()));
      }
      return out;
    };
  };
}

CrossFitResult crossfit_calibrated(const Matrix& labeled_covariates,
                                   std::span<const double> labeled_outcomes,
                                   const Matrix& unlabeled_covariates, const Trainer& trainer,
                                   Method calibration_method, std::size_t k, std::uint64_t seed,
                                   const EstimateOptions& options) {
  return crossfit_calibrated(labeled_covariates, labeled_outcomes, unlabeled_covariates, trainer,
                             calibration_method, fold_assignment(labeled_outcomes.size(), k, seed),
                             k, options);
}

CrossFitResult crossfit_calibrated(const Matrix& labeled_covariates,
                                   std::span<const double> labeled_outcomes,
                                   const Matrix& unlabeled_covariates, const Trainer& trainer,
                                   Method calibration_method, std::vector<std::size_t> folds,
                                   std::size_t k, const EstimateOptions& options) {
  const std::size_t n = labeled_outcomes.size();
  const auto big_n = static_cast<std::size_t>(unlabeled_covariates.rows());
  if (static_cast<std::size_t>(labeled_covariates.rows()) != n) {
    throw DimensionError("crossfit: labeled covariate rows do not match outcomes");
  }
  if (labeled_covariates.cols() != unlabeled_covariates.cols()) {
    throw DimensionError("crossfit: covariate dimension mismatch");
  }
  if (big_n == 0 || n == 0) throw DataError("crossfit: empty sample");

  if (k < 2 || k > n) throw ConfigError("crossfit: need 2 <= k <= n folds");
  if (folds.size() != n) throw DimensionError("crossfit: one fold id per labeled row required");
  std::vector<std::size_t> fold_sizes(k, 0);
  for (std::size_t f : folds) {
    if (f >= k) throw ConfigError("crossfit: fold id out of range");
    ++fold_sizes[f];
  }
  if (std::find(fold_sizes.begin(), fold_sizes.end(), 0) != fold_sizes.end()) {
    throw ConfigError("crossfit: every fold needs at least one labeled row");
  }

  CrossFitResult result;
  result.folds = std::move(folds);

  Vector oof(n, 0.0);
  std::vector<Vector> unlabeled_preds(k);
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
    for (std::size_t i = 0; i < n; ++i) (result.folds[i] == f ? test_rows : train_rows).push_back(i);
    Vector train_y;
    train_y.reserve(train_rows.size());
    for (std::size_t i : train_rows) train_y.push_back(labeled_outcomes[i]);
    try {
      const ScoreFunction model = trainer(take_rows(labeled_covariates, train_rows), train_y);
      const Vector test_pred = model(take_rows(labeled_covariates, test_rows));
      if (test_pred.size() != test_rows.size()) {
        throw DimensionError("trainer returned " + std::to_string(test_pred.size()) +
                             " predictions for " + std::to_string(test_rows.size()) + " rows");
      }
      for (std::size_t t = 0; t < test_rows.size(); ++t) oof[test_rows[t]] = test_pred[t];
      unlabeled_preds[f] = model(unlabeled_covariates);
      if (unlabeled_preds[f].size() != big_n) {
        throw DimensionError("trainer returned the wrong number of unlabeled predictions");
      }
    } catch (const std::exception& e) {
      throw DataError("crossfit: trainer failed on fold " + std::to_string(f) + ": " + e.what());
    }
  }

  const FittedAdjustment adj = fit_adjustment(calibration_method, oof, labeled_outcomes, options);
  result.labeled_calibrated = adj.apply(oof);
  result.unlabeled_calibrated.assign(big_n, 0.0);
  Vector raw_unlabeled(big_n, 0.0);
  for (std::size_t f = 0; f < k; ++f) {
    const Vector cal = adj.apply(unlabeled_preds[f]);
    for (std::size_t j = 0; j < big_n; ++j) {
      result.unlabeled_calibrated[j] += cal[j];
      raw_unlabeled[j] += unlabeled_preds[f][j];
    }
  }
  for (std::size_t j = 0; j < big_n; ++j) {
    result.unlabeled_calibrated[j] /= static_cast<double>(k);
    raw_unlabeled[j] /= static_cast<double>(k);
  }

  LabeledSample lab{oof, Vector(labeled_outcomes.begin(), labeled_outcomes.end()), std::nullopt};
  const TwoSampleDesign design =
      validate_design(std::move(lab), UnlabeledSample{raw_unlabeled, std::nullopt});
  const double plugin =
      pooled_mean(design, result.labeled_calibrated, result.unlabeled_calibrated);
  double resid = 0.0;
  for (std::size_t i = 0; i < n; ++i) resid += labeled_outcomes[i] - result.labeled_calibrated[i];
  resid /= static_cast<double>(n);
  const double aipw_form = plugin + resid;
  // Uncalibrated scores use the AIPW form; calibrated ones the pooled plug-in.
  const double psi = calibration_method == Method::AIPW ? aipw_form : plugin;

  result.report = report_from_adjustment(design, result.labeled_calibrated,
                                         result.unlabeled_calibrated, psi, calibration_method,
                                         options.alpha);
  result.report.diagnostics.values["folds"] = static_cast<double>(k);
  result.report.diagnostics.values["plugin"] = plugin;
  result.report.diagnostics.values["aipw_form"] = aipw_form;
  result.report.diagnostics.notes["crossfit"] = "true";
  return result;
}

}  // namespace calppi
