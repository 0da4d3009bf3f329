#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "calppi/calibrators.hpp"
#include "calppi/estimators.hpp"

namespace calppi {

struct CandidateSet {
  std::vector<Method> candidates = {Method::AIPW, Method::LinearCal, Method::IsoCal,
                                    Method::HistCal};
  // Unset means the default of 20, silently reduced for small samples. An
  // explicit value larger than n is an error.
  std::optional<std::size_t> folds;
  std::size_t unlabeled_cap_factor = 10;
};

struct CvRow {
  Method method;
  double criterion;
};

struct AutoCalResult {
  Method selected = Method::AIPW;
  EstimateReport report;
  std::vector<CvRow> cv;
};

// Picks the candidate with the smallest K-fold estimate of the influence
// variance (ties go to the earlier candidate) and refits it on the full
// labeled sample.
AutoCalResult autocal_select(const TwoSampleDesign& design, const CandidateSet& candidates,
                             std::uint64_t seed, const EstimateOptions& options = {});

// Fold id in [0, k) for each of n labeled rows: a seeded shuffle cut into
// contiguous blocks whose sizes differ by at most one.
std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t k, std::uint64_t seed);

inline constexpr std::size_t kDefaultFolds = 20;

// K actually used by AutoCal for n labeled points: at most floor(n / 2).
std::size_t effective_folds(std::size_t n, std::optional<std::size_t> requested);

// A score-to-adjustment map fitted on labeled pairs: the identity for AIPW, a
// fitted calibrator for the calibration methods.
struct FittedAdjustment {
  Method method = Method::AIPW;
  std::optional<Calibrator> calibrator;

  Vector apply(std::span<const double> scores) const;
};

FittedAdjustment fit_adjustment(Method method, std::span<const double> scores,
                                std::span<const double> outcomes,
                                const EstimateOptions& options = {});

using ScoreFunction = std::function<Vector(const Matrix& covariates)>;
// Maps (covariates, outcomes) of a training split to a score function. Must be
// deterministic.
using Trainer = std::function<ScoreFunction(const Matrix& covariates, std::span<const double> outcomes)>;

// Ordinary least squares of Y on an intercept and the covariates.
Trainer ols_trainer();

struct CrossFitResult {
  EstimateReport report;
  std::vector<std::size_t> folds;
  Vector labeled_calibrated;
  Vector unlabeled_calibrated;
};

// Cross-fitted calibrated estimator: out-of-fold initial predictions, one
// calibrator fitted on the pooled out-of-fold pairs, unlabeled predictions
// averaged over the K fold models, then the pooled plug-in.
CrossFitResult crossfit_calibrated(const Matrix& labeled_covariates,
                                   std::span<const double> labeled_outcomes,
                                   const Matrix& unlabeled_covariates, const Trainer& trainer,
                                   Method calibration_method, std::size_t k, std::uint64_t seed,
                                   const EstimateOptions& options = {});

// Same with a caller-supplied fold id in [0, k) for every labeled row.
CrossFitResult crossfit_calibrated(const Matrix& labeled_covariates,
                                   std::span<const double> labeled_outcomes,
                                   const Matrix& unlabeled_covariates, const Trainer& trainer,
                                   Method calibration_method, std::vector<std::size_t> folds,
                                   std::size_t k, const EstimateOptions& options = {});

}  // namespace calppi
