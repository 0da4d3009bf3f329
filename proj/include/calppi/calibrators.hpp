#pragma once

#include <optional>
#include <span>
#include <utility>
#include <variant>

#include "calppi/design.hpp"

namespace calppi {

// Nondecreasing step function learned by PAVA. Block i covers training
// scores in [lower_edges[i], boundaries[i]]; a score between two blocks takes
// the value of the block to its left, and scores outside the training range
// take the first/last value.
struct StepCalibrator {
  Vector boundaries;
  Vector lower_edges;
  Vector values;
  Fingerprint fitted_on;

  bool operator==(const StepCalibrator&) const = default;
};

struct AffineCalibrator {
  double slope = 0.0;
  double intercept = 0.0;
  std::optional<std::pair<double, double>> clip_range;
  Fingerprint fitted_on;

  bool operator==(const AffineCalibrator&) const = default;
};

struct SigmoidCalibrator {
  double scale = 1.0;
  double shift = 0.0;
  double logit_eps = 1e-6;
  Fingerprint fitted_on;

  bool operator==(const SigmoidCalibrator&) const = default;
};

struct BinnedCalibrator {
  Vector edges;
  Vector bin_means;
  Vector bin_counts;
  double fallback = 0.0;
  Fingerprint fitted_on;

  bool any_empty_bin() const;
  bool operator==(const BinnedCalibrator&) const = default;
};

struct LinearCovCalibrator {
  double intercept = 0.0;
  double score_coef = 0.0;
  Vector cov_coefs;
  std::optional<std::pair<double, double>> clip_range;
  Fingerprint fitted_on;

  bool operator==(const LinearCovCalibrator&) const = default;
};

using Calibrator = std::variant<StepCalibrator, AffineCalibrator, SigmoidCalibrator,
                                BinnedCalibrator, LinearCovCalibrator>;

StepCalibrator fit_isotonic(std::span<const double> scores, std::span<const double> outcomes,
                            std::span<const double> weights = {});

AffineCalibrator fit_linear(std::span<const double> scores, std::span<const double> outcomes,
                            bool clip);

struct PlattOptions {
  double logit_eps = 1e-6;
  int max_iterations = 100;
  double gradient_tolerance = 1e-10;
  double ridge = 1e-8;
  // When set, receives the objective value after every accepted step.
  std::vector<double>* trace = nullptr;
};

SigmoidCalibrator fit_platt(std::span<const double> scores, std::span<const double> outcomes,
                            const PlattOptions& options = {});

// Penalized Platt objective (negative log-likelihood plus ridge/2 * |theta|^2)
// evaluated on the stabilized logit of the scores.
double platt_objective(std::span<const double> scores, std::span<const double> outcomes,
                       double scale, double shift, double ridge, double logit_eps = 1e-6);

// True when a threshold on the score separates the labels (including the
// all-equal case), i.e. the unpenalized likelihood has no finite maximizer.
bool platt_separable(std::span<const double> scores, std::span<const double> outcomes);

BinnedCalibrator fit_histogram(std::span<const double> scores, std::span<const double> outcomes,
                               std::span<const double> edges);

// Equal-width bins spanning the score range.
Vector default_histogram_edges(std::span<const double> scores, std::size_t bins = 10);

LinearCovCalibrator fit_linear_cov(std::span<const double> scores,
                                   std::span<const double> outcomes, const Matrix& covariates,
                                   bool clip = false);

// Shrunken Venn-Abers point predictions at each eval score. Outcomes must lie
// in [0, 1].
Vector fit_venn_abers(std::span<const double> scores, std::span<const double> outcomes,
                      std::span<const double> eval_scores, double shrink_target);

// The interval [f0(t), f1(t)] from the two label-augmented isotonic fits.
std::pair<double, double> venn_abers_interval(std::span<const double> scores,
                                              std::span<const double> outcomes, double eval_score);

Vector predict(const StepCalibrator& cal, std::span<const double> scores);
Vector predict(const AffineCalibrator& cal, std::span<const double> scores);
Vector predict(const SigmoidCalibrator& cal, std::span<const double> scores);
Vector predict(const BinnedCalibrator& cal, std::span<const double> scores);
Vector predict(const LinearCovCalibrator& cal, std::span<const double> scores,
               const Matrix& covariates);

// Dispatches on the held alternative; covariates are required only for
// LinearCovCalibrator.
Vector predict(const Calibrator& cal, std::span<const double> scores,
               const Matrix* covariates = nullptr);

const Fingerprint& fitted_on(const Calibrator& cal);

double predict_one(const StepCalibrator& cal, double score);

}  // namespace calppi
