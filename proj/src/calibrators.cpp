#include "calppi/calibrators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_map>

#include "calppi/errors.hpp"

namespace calppi {
namespace {

void require_same_length(std::span<const double> a, std::span<const double> b, const char* op) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(op) + ": " + std::to_string(a.size()) + " scores but " +
                         std::to_string(b.size()) + " outcomes");
  }
}

// Distinct score values in increasing order with their weighted outcome sums.
struct TieGroups {
  Vector score;
  Vector weighted_sum;
  Vector weight;
};

TieGroups group_ties(std::span<const double> scores, std::span<const double> outcomes,
                     std::span<const double> weights) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  TieGroups g;
  for (std::size_t idx : order) {
    const double w = weights.empty() ? 1.0 : weights[idx];
    if (!g.score.empty() && g.score.back() == scores[idx]) {
      g.weighted_sum.back() += w * outcomes[idx];
      g.weight.back() += w;
    } else {
      g.score.push_back(scores[idx]);
      g.weighted_sum.push_back(w * outcomes[idx]);
      g.weight.push_back(w);
    }
  }
  return g;
}

struct Block {
  double weighted_sum;
  double weight;
  std::size_t first;
  std::size_t last;
  double level() const { return weighted_sum / weight; }
};

// Pool-adjacent-violators on tie-pooled groups.
std::vector<Block> pava(const TieGroups& g) {
  std::vector<Block> blocks;
  blocks.reserve(g.score.size());
  for (std::size_t i = 0; i < g.score.size(); ++i) {
    blocks.push_back({g.weighted_sum[i], g.weight[i], i, i});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].level() > blocks.back().level()) {
      Block top = blocks.back();
      blocks.pop_back();
      Block& prev = blocks.back();
      prev.weighted_sum += top.weighted_sum;
      prev.weight += top.weight;
      prev.last = top.last;
    }
  }
  return blocks;
}

StepCalibrator to_step(const TieGroups& g, const std::vector<Block>& blocks) {
  StepCalibrator cal;
  cal.boundaries.reserve(blocks.size());
  cal.lower_edges.reserve(blocks.size());
  cal.values.reserve(blocks.size());
  for (const Block& b : blocks) {
    cal.lower_edges.push_back(g.score[b.first]);
    cal.boundaries.push_back(g.score[b.last]);
    cal.values.push_back(b.level());
  }
  return cal;
}

double logit_clamped(double m, double eps) {
  const double p = std::clamp(m, eps, 1.0 - eps);
  return std::log(p) - std::log1p(-p);
}

double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// Keeps calibrated probabilities strictly inside (0, 1) after rounding.
double open_unit(double p) {
  return std::clamp(p, std::numeric_limits<double>::denorm_min(), std::nextafter(1.0, 0.0));
}

// log(1 + exp(u)) without overflow.
double softplus(double u) { return u > 0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u)); }

double platt_objective_on_logits(std::span<const double> x, std::span<const double> y,
                                 double a, double b, double ridge) {
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = a * x[i] + b;
    total += y[i] > 0.5 ? softplus(-t) : softplus(t);
  }
  return total + 0.5 * ridge * (a * a + b * b);
}

bool separable_logits(std::span<const double> x, std::span<const double> y) {
  double max0 = -std::numeric_limits<double>::infinity();
  double min0 = std::numeric_limits<double>::infinity();
  double max1 = max0;
  double min1 = min0;
  std::size_t ones = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (y[i] > 0.5) {
      ++ones;
      max1 = std::max(max1, x[i]);
      min1 = std::min(min1, x[i]);
    } else {
      max0 = std::max(max0, x[i]);
      min0 = std::min(min0, x[i]);
    }
  }
  if (ones == 0 || ones == x.size()) return true;
  return max0 <= min1 || max1 <= min0;
}

Vector platt_logits(std::span<const double> scores, std::span<const double> outcomes,
                    double logit_eps) {
  require_same_length(scores, outcomes, "fit_platt");
  require_finite(scores, "fit_platt scores");
  Vector x(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] < 0.0 || scores[i] > 1.0) {
      throw DataError("fit_platt: score at index " + std::to_string(i) + " is outside [0, 1]");
    }
    if (outcomes[i] != 0.0 && outcomes[i] != 1.0) {
      throw DataError("fit_platt: outcome at index " + std::to_string(i) + " is not binary");
    }
    x[i] = logit_clamped(scores[i], logit_eps);
  }
  return x;
}

std::size_t bin_index(const Vector& edges, double t) {
  const std::size_t bins = edges.size() - 1;
  auto it = std::upper_bound(edges.begin(), edges.end(), t);
  if (it == edges.begin()) return 0;
  const auto idx = static_cast<std::size_t>(it - edges.begin()) - 1;
  return std::min(idx, bins - 1);
}

double apply_clip(double v, const std::optional<std::pair<double, double>>& clip) {
  return clip ? std::clamp(v, clip->first, clip->second) : v;
}

std::pair<double, double> outcome_range(std::span<const double> outcomes) {
  auto [lo, hi] = std::minmax_element(outcomes.begin(), outcomes.end());
  return {*lo, *hi};
}

// Isotonic fit on `base` augmented with one extra unit-weight point, evaluated
// at that point's score.
double augmented_fit_at(const TieGroups& base, double t, double y) {
  TieGroups g;
  const std::size_t k = base.score.size();
  g.score.reserve(k + 1);
  g.weighted_sum.reserve(k + 1);
  g.weight.reserve(k + 1);
  bool placed = false;
  std::size_t target = 0;
  for (std::size_t i = 0; i <= k; ++i) {
    if (!placed && (i == k || t <= base.score[i])) {
      placed = true;
      target = g.score.size();
      if (i < k && base.score[i] == t) {
        g.score.push_back(t);
        g.weighted_sum.push_back(base.weighted_sum[i] + y);
        g.weight.push_back(base.weight[i] + 1.0);
        continue;
      }
      g.score.push_back(t);
      g.weighted_sum.push_back(y);
      g.weight.push_back(1.0);
    }
    if (i < k) {
      g.score.push_back(base.score[i]);
      g.weighted_sum.push_back(base.weighted_sum[i]);
      g.weight.push_back(base.weight[i]);
    }
  }
  for (const Block& b : pava(g)) {
    if (b.first <= target && target <= b.last) return b.level();
  }
  return std::numeric_limits<double>::quiet_NaN();
}

void check_unit_outcomes(std::span<const double> outcomes) {
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (!(outcomes[i] >= 0.0 && outcomes[i] <= 1.0)) {
      throw DataError("venn-abers: outcome at index " + std::to_string(i) +
                      " is outside [0, 1]; rescale first");
    }
  }
}

}  // namespace

StepCalibrator fit_isotonic(std::span<const double> scores, std::span<const double> outcomes,
                            std::span<const double> weights) {
  require_same_length(scores, outcomes, "fit_isotonic");
  if (scores.empty()) throw DataError("fit_isotonic: empty sample");
  if (!weights.empty()) {
    if (weights.size() != scores.size()) {
      throw DimensionError("fit_isotonic: weights length does not match scores");
    }
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (!(weights[i] > 0.0) || !std::isfinite(weights[i])) {
        throw DataError("fit_isotonic: weight at index " + std::to_string(i) +
                        " is not positive");
      }
    }
  }
  require_finite(scores, "fit_isotonic scores");
  require_finite(outcomes, "fit_isotonic outcomes");
  const TieGroups groups = group_ties(scores, outcomes, weights);
  StepCalibrator cal = to_step(groups, pava(groups));
  cal.fitted_on = fingerprint(scores, outcomes);
  return cal;
}

AffineCalibrator fit_linear(std::span<const double> scores, std::span<const double> outcomes,
                            bool clip) {
  require_same_length(scores, outcomes, "fit_linear");
  if (scores.size() < 2) throw DataError("fit_linear: needs at least 2 labeled points");
  require_finite(scores, "fit_linear scores");
  require_finite(outcomes, "fit_linear outcomes");
  const double mx = mean(scores);
  const double my = mean(outcomes);
  auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());

  AffineCalibrator cal;
  if (*lo == *hi) {
    cal.slope = 0.0;
    cal.intercept = my;
  } else {
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const double dx = scores[i] - mx;
      sxx += dx * dx;
      sxy += dx * (outcomes[i] - my);
    }
    cal.slope = sxy / sxx;
    cal.intercept = my - cal.slope * mx;
  }
  if (clip) cal.clip_range = outcome_range(outcomes);
  cal.fitted_on = fingerprint(scores, outcomes);
  return cal;
}

double platt_objective(std::span<const double> scores, std::span<const double> outcomes,
                       double scale, double shift, double ridge, double logit_eps) {
  const Vector x = platt_logits(scores, outcomes, logit_eps);
  return platt_objective_on_logits(x, outcomes, scale, shift, ridge);
}

bool platt_separable(std::span<const double> scores, std::span<const double> outcomes) {
  const Vector x = platt_logits(scores, outcomes, 1e-6);
  return separable_logits(x, outcomes);
}

SigmoidCalibrator fit_platt(std::span<const double> scores, std::span<const double> outcomes,
                            const PlattOptions& options) {
  if (scores.size() < 2) throw DataError("fit_platt: needs at least 2 labeled points");
  const Vector x = platt_logits(scores, outcomes, options.logit_eps);

  double ridge = separable_logits(x, outcomes) ? options.ridge : 0.0;
  double a = 1.0;
  double b = 0.0;
  double objective = platt_objective_on_logits(x, outcomes, a, b, ridge);

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    double ga = ridge * a;
    double gb = ridge * b;
    double haa = ridge;
    double hab = 0.0;
    double hbb = ridge;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double p = sigmoid(a * x[i] + b);
      const double r = p - outcomes[i];
      const double w = p * (1.0 - p);
      ga += r * x[i];
      gb += r;
      haa += w * x[i] * x[i];
      hab += w * x[i];
      hbb += w;
    }
    if (std::max(std::abs(ga), std::abs(gb)) <= options.gradient_tolerance) {
      SigmoidCalibrator cal{a, b, options.logit_eps, fingerprint(scores, outcomes)};
      return cal;
    }
    const double det = haa * hbb - hab * hab;
    if (!(det > 1e-14 * std::max(1.0, haa * hbb))) {
      if (ridge == 0.0) {
        ridge = options.ridge;
        objective = platt_objective_on_logits(x, outcomes, a, b, ridge);
        continue;
      }
    }
    const double da = (hbb * ga - hab * gb) / det;
    const double db = (haa * gb - hab * ga) / det;

    double step = 1.0;
    bool improved = false;
    for (int halving = 0; halving < 60; ++halving) {
      const double na = a - step * da;
      const double nb = b - step * db;
      const double candidate = platt_objective_on_logits(x, outcomes, na, nb, ridge);
      if (candidate <= objective) {
        a = na;
        b = nb;
        improved = candidate < objective;
        objective = candidate;
        if (options.trace) options.trace->push_back(objective);
        break;
      }
      step *= 0.5;
    }
    if (!improved) {
      // The objective is flat to machine precision along the Newton direction.
      SigmoidCalibrator cal{a, b, options.logit_eps, fingerprint(scores, outcomes)};
      return cal;
    }
  }
  throw ConvergenceError("fit_platt: Newton iterations did not converge within " +
                             std::to_string(options.max_iterations) + " iterations",
                         a, b);
}

bool BinnedCalibrator::any_empty_bin() const {
  return std::any_of(bin_counts.begin(), bin_counts.end(), [](double c) { return c == 0.0; });
}

Vector default_histogram_edges(std::span<const double> scores, std::size_t bins) {
  if (scores.empty()) throw DataError("default_histogram_edges: empty sample");
  if (bins == 0) throw ConfigError("histogram needs at least one bin");
  auto [lo_it, hi_it] = std::minmax_element(scores.begin(), scores.end());
  double lo = *lo_it;
  double hi = *hi_it;
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  Vector edges(bins + 1);
  for (std::size_t k = 0; k <= bins; ++k) {
    edges[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(bins);
  }
  edges.back() = hi;
  return edges;
}

BinnedCalibrator fit_histogram(std::span<const double> scores, std::span<const double> outcomes,
                               std::span<const double> edges) {
  require_same_length(scores, outcomes, "fit_histogram");
  if (scores.empty()) throw DataError("fit_histogram: empty sample");
  if (edges.size() < 2) throw ConfigError("fit_histogram: need at least 2 edges");
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    if (!(edges[k] < edges[k + 1])) {
      throw ConfigError("fit_histogram: edges must be strictly increasing");
    }
  }
  require_finite(scores, "fit_histogram scores");
  require_finite(outcomes, "fit_histogram outcomes");

  BinnedCalibrator cal;
  cal.edges.assign(edges.begin(), edges.end());
  const std::size_t bins = edges.size() - 1;
  Vector sums(bins, 0.0);
  cal.bin_counts.assign(bins, 0.0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const std::size_t k = bin_index(cal.edges, scores[i]);
    sums[k] += outcomes[i];
    cal.bin_counts[k] += 1.0;
  }
  cal.fallback = mean(outcomes);
  cal.bin_means.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    cal.bin_means[k] = cal.bin_counts[k] > 0 ? sums[k] / cal.bin_counts[k] : cal.fallback;
  }
  cal.fitted_on = fingerprint(scores, outcomes);
  return cal;
}

LinearCovCalibrator fit_linear_cov(std::span<const double> scores,
                                   std::span<const double> outcomes, const Matrix& covariates,
                                   bool clip) {
  require_same_length(scores, outcomes, "fit_linear_cov");
  const auto n = static_cast<Eigen::Index>(scores.size());
  const Eigen::Index d = covariates.cols();
  if (covariates.rows() != n) {
    throw DimensionError("fit_linear_cov: covariate rows do not match the labeled sample");
  }
  if (n <= d + 2) {
    throw DataError("fit_linear_cov: needs more than d + 2 = " + std::to_string(d + 2) +
                    " labeled points");
  }
  Matrix design(n, d + 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 0) = 1.0;
    design.row(i).segment(1, d) = covariates.row(i);
    design(i, d + 1) = scores[static_cast<std::size_t>(i)];
    y(i) = outcomes[static_cast<std::size_t>(i)];
  }
  Eigen::JacobiSVD<Matrix> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (!(sv(sv.size() - 1) > 1e-10 * sv(0))) {
    throw DataError(
        "fit_linear_cov: design [1, covariates, score] is rank deficient; remove collinear "
        "covariate columns");
  }
  const Eigen::VectorXd coef = svd.solve(y);

  LinearCovCalibrator cal;
  cal.intercept = coef(0);
  cal.cov_coefs.resize(static_cast<std::size_t>(d));
  for (Eigen::Index j = 0; j < d; ++j) cal.cov_coefs[static_cast<std::size_t>(j)] = coef(1 + j);
  cal.score_coef = coef(d + 1);
  if (clip) cal.clip_range = outcome_range(outcomes);
  cal.fitted_on = fingerprint(scores, outcomes);
  return cal;
}

std::pair<double, double> venn_abers_interval(std::span<const double> scores,
                                              std::span<const double> outcomes,
                                              double eval_score) {
  require_same_length(scores, outcomes, "fit_venn_abers");
  check_unit_outcomes(outcomes);
  const TieGroups base = group_ties(scores, outcomes, {});
  return {augmented_fit_at(base, eval_score, 0.0), augmented_fit_at(base, eval_score, 1.0)};
}

Vector fit_venn_abers(std::span<const double> scores, std::span<const double> outcomes,
                      std::span<const double> eval_scores, double shrink_target) {
  require_same_length(scores, outcomes, "fit_venn_abers");
  if (scores.empty()) throw DataError("fit_venn_abers: empty sample");
  require_finite(scores, "fit_venn_abers scores");
  require_finite(eval_scores, "fit_venn_abers eval scores");
  check_unit_outcomes(outcomes);
  const TieGroups base = group_ties(scores, outcomes, {});

  std::unordered_map<double, double> cache;
  Vector out(eval_scores.size());
  for (std::size_t i = 0; i < eval_scores.size(); ++i) {
    const double t = eval_scores[i];
    auto it = cache.find(t);
    if (it == cache.end()) {
      const double f0 = augmented_fit_at(base, t, 0.0);
      const double f1 = augmented_fit_at(base, t, 1.0);
      const double mid = 0.5 * (f0 + f1);
      it = cache.emplace(t, mid + (f1 - f0) * (shrink_target - mid)).first;
    }
    out[i] = it->second;
  }
  return out;
}

double predict_one(const StepCalibrator& cal, double score) {
  auto it = std::upper_bound(cal.lower_edges.begin(), cal.lower_edges.end(), score);
  if (it == cal.lower_edges.begin()) return cal.values.front();
  return cal.values[static_cast<std::size_t>(it - cal.lower_edges.begin()) - 1];
}

Vector predict(const StepCalibrator& cal, std::span<const double> scores) {
  Vector out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = predict_one(cal, scores[i]);
  return out;
}

Vector predict(const AffineCalibrator& cal, std::span<const double> scores) {
  Vector out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = apply_clip(cal.slope * scores[i] + cal.intercept, cal.clip_range);
  }
  return out;
}

Vector predict(const SigmoidCalibrator& cal, std::span<const double> scores) {
  Vector out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = open_unit(sigmoid(cal.scale * logit_clamped(scores[i], cal.logit_eps) + cal.shift));
  }
  return out;
}

Vector predict(const BinnedCalibrator& cal, std::span<const double> scores) {
  Vector out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = cal.bin_means[bin_index(cal.edges, scores[i])];
  }
  return out;
}

Vector predict(const LinearCovCalibrator& cal, std::span<const double> scores,
               const Matrix& covariates) {
  if (static_cast<std::size_t>(covariates.rows()) != scores.size() ||
      static_cast<std::size_t>(covariates.cols()) != cal.cov_coefs.size()) {
    throw DimensionError("predict: covariate matrix shape does not match the calibrator");
  }
  Vector out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    double v = cal.intercept + cal.score_coef * scores[i];
    for (std::size_t j = 0; j < cal.cov_coefs.size(); ++j) {
      v += cal.cov_coefs[j] *
           covariates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    out[i] = apply_clip(v, cal.clip_range);
  }
  return out;
}

Vector predict(const Calibrator& cal, std::span<const double> scores, const Matrix* covariates) {
  return std::visit(
      [&](const auto& c) -> Vector {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, LinearCovCalibrator>) {
          if (covariates == nullptr) {
            throw ConfigError("predict: covariate-adjusted calibrator needs covariates");
          }
          return predict(c, scores, *covariates);
        } else {
          return predict(c, scores);
        }
      },
      cal);
}

const Fingerprint& fitted_on(const Calibrator& cal) {
  return std::visit([](const auto& c) -> const Fingerprint& { return c.fitted_on; }, cal);
}

}  // namespace calppi
