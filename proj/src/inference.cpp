#include "calppi/inference.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "calppi/errors.hpp"
#include "calppi/rng.hpp"
#include "parallel.hpp"

namespace calppi {
namespace {

Matrix take_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

TwoSampleDesign resample(const TwoSampleDesign& design, const std::vector<std::size_t>& lab_idx,
                         const std::vector<std::size_t>& unl_idx) {
  const auto& lab = design.labeled();
  const auto& unl = design.unlabeled();
  LabeledSample l;
  l.scores.reserve(lab_idx.size());
  l.outcomes.reserve(lab_idx.size());
  for (std::size_t i : lab_idx) {
    l.scores.push_back(lab.scores[i]);
    l.outcomes.push_back(lab.outcomes[i]);
  }
  if (lab.covariates) l.covariates = take_rows(*lab.covariates, lab_idx);
  UnlabeledSample u;
  u.scores.reserve(unl_idx.size());
  for (std::size_t j : unl_idx) u.scores.push_back(unl.scores[j]);
  if (unl.covariates) u.covariates = take_rows(*unl.covariates, unl_idx);
  return validate_design(std::move(l), std::move(u));
}

}  // namespace

InfluencePair influence_values(const TwoSampleDesign& design, std::span<const double> adj_labeled,
                               std::span<const double> adj_unlabeled, double psi_hat) {
  if (adj_labeled.size() != design.n() || adj_unlabeled.size() != design.big_n()) {
    throw DimensionError("influence_values: adjustment lengths do not match the design");
  }
  const double rho = design.rho();
  if (!(rho > 0.0 && rho < 1.0)) throw DataError("influence_values: rho must lie in (0, 1)");
  const Vector& y = design.labeled().outcomes;
  InfluencePair pair;
  pair.labeled_vals.resize(adj_labeled.size());
  pair.unlabeled_vals.resize(adj_unlabeled.size());
  for (std::size_t i = 0; i < adj_labeled.size(); ++i) {
    pair.labeled_vals[i] = adj_labeled[i] - psi_hat + (y[i] - adj_labeled[i]) / rho;
  }
  for (std::size_t j = 0; j < adj_unlabeled.size(); ++j) {
    pair.unlabeled_vals[j] = adj_unlabeled[j] - psi_hat;
  }
  return pair;
}

double wald_se(const InfluencePair& pair, const TwoSampleDesign& design) {
  double ss = 0.0;
  for (double d : pair.labeled_vals) ss += d * d;
  for (double d : pair.unlabeled_vals) ss += d * d;
  return std::sqrt(ss) / static_cast<double>(design.m_total());
}

double influence_variance(const InfluencePair& pair, double rho) {
  double ss_l = 0.0;
  double ss_u = 0.0;
  for (double d : pair.labeled_vals) ss_l += d * d;
  for (double d : pair.unlabeled_vals) ss_u += d * d;
  return rho * ss_l / static_cast<double>(pair.labeled_vals.size()) +
         (1.0 - rho) * ss_u / static_cast<double>(pair.unlabeled_vals.size());
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("normal_quantile: p must lie in (0, 1)");
  static const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, p);
}

std::pair<double, double> wald_interval(double estimate, double se, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ConfigError("alpha must lie in (0, 1), got " + std::to_string(alpha));
  }
  if (!(se >= 0.0)) throw DataError("standard error must be non-negative");
  const double half = normal_quantile(1.0 - alpha / 2.0) * se;
  return {estimate - half, estimate + half};
}

double empirical_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw DataError("empirical_quantile: empty sample");
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> bootstrap_indices(
    std::size_t n, std::size_t big_n, std::uint64_t seed, std::size_t replicate) {
  Stream lab_stream{seed, key(StreamPurpose::BootstrapLabeled), replicate};
  Stream unl_stream{seed, key(StreamPurpose::BootstrapUnlabeled), replicate};
  std::vector<std::size_t> lab(n);
  std::vector<std::size_t> unl(big_n);
  for (auto& i : lab) i = lab_stream.index(n);
  for (auto& j : unl) j = unl_stream.index(big_n);
  return {std::move(lab), std::move(unl)};
}

BootstrapResult bootstrap(const TwoSampleDesign& design, Method method, std::size_t b,
                          std::uint64_t seed, const EstimateOptions& options) {
  if (b < 2) throw ConfigError("bootstrap needs at least 2 replicates, got " + std::to_string(b));
  if (method == Method::LinearCovCal && !design.has_covariates()) {
    throw ConfigError("linear-cov-cal needs covariates in both samples");
  }
  BootstrapResult result;
  result.estimate = estimate(design, method, options).estimate;
  result.alpha = options.alpha;
  result.seed = seed;
  result.b = b;
  result.replicates.resize(b);

  detail::parallel_for(b, [&](std::size_t r) {
    const auto [lab_idx, unl_idx] = bootstrap_indices(design.n(), design.big_n(), seed, r);
    const TwoSampleDesign star = resample(design, lab_idx, unl_idx);
    result.replicates[r] = estimate(star, method, options).estimate;
  });

  const auto& reps = result.replicates;
  if (std::all_of(reps.begin(), reps.end(), [&](double v) { return v == reps.front(); })) {
    result.se_boot = 0.0;
  } else {
    const double mu = mean(reps);
    double ss = 0.0;
    for (double v : reps) ss += (v - mu) * (v - mu);
    result.se_boot = std::sqrt(ss / static_cast<double>(b - 1));
  }

  Vector sorted = result.replicates;
  std::sort(sorted.begin(), sorted.end());
  result.percentile_ci = {empirical_quantile(sorted, options.alpha / 2.0),
                          empirical_quantile(sorted, 1.0 - options.alpha / 2.0)};
  result.normal_ci = wald_interval(result.estimate, result.se_boot, options.alpha);
  return result;
}

}  // namespace calppi
