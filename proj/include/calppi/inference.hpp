#pragma once

#include <cstdint>
#include <span>
#include <utility>

#include "calppi/design.hpp"
#include "calppi/estimators.hpp"

namespace calppi {

struct InfluencePair {
  Vector labeled_vals;
  Vector unlabeled_vals;
};

// D_i^L = a_i - psi + (Y_i - a_i) / rho and D_j^U = a~_j - psi.
InfluencePair influence_values(const TwoSampleDesign& design, std::span<const double> adj_labeled,
                               std::span<const double> adj_unlabeled, double psi_hat);

// sqrt((sum (D^L)^2 + sum (D^U)^2)) / (n + N).
double wald_se(const InfluencePair& pair, const TwoSampleDesign& design);

// rho * mean((D^L)^2) + (1 - rho) * mean((D^U)^2); wald_se^2 = this / M.
double influence_variance(const InfluencePair& pair, double rho);

// Standard normal quantile.
double normal_quantile(double p);

std::pair<double, double> wald_interval(double estimate, double se, double alpha);

struct BootstrapResult {
  double estimate = 0.0;
  Vector replicates;
  double se_boot = 0.0;
  std::pair<double, double> percentile_ci;
  std::pair<double, double> normal_ci;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  std::size_t b = 0;
};

// Linear interpolation between order statistics (the "type 7" rule).
double empirical_quantile(std::span<const double> sorted, double p);

// Nonparametric two-sample bootstrap. Each replicate resamples labeled rows
// and unlabeled rows independently and refits the whole method. Replicate b
// draws only from streams keyed by (seed, b), so results do not depend on
// evaluation order.
BootstrapResult bootstrap(const TwoSampleDesign& design, Method method, std::size_t b,
                          std::uint64_t seed, const EstimateOptions& options = {});

// Resampling indices for replicate `replicate`; exposed for tests.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> bootstrap_indices(
    std::size_t n, std::size_t big_n, std::uint64_t seed, std::size_t replicate);

}  // namespace calppi
