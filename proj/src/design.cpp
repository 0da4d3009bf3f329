#include "calppi/design.hpp"

#include <bit>
#include <cmath>
#include <numeric>
#include <string>

#include "calppi/errors.hpp"

namespace calppi {
namespace {

bool same_matrix(const std::optional<Matrix>& a, const std::optional<Matrix>& b) {
  if (a.has_value() != b.has_value()) return false;
  if (!a) return true;
  return a->rows() == b->rows() && a->cols() == b->cols() && *a == *b;
}

void require_finite_matrix(const Matrix& m, const char* what) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (!std::isfinite(m(i, j))) {
        throw DataError(std::string(what) + ": non-finite value at row " + std::to_string(i) +
                        ", column " + std::to_string(j));
      }
    }
  }
}

std::uint64_t mix(std::uint64_t h, double v) {
  // FNV-1a over the bit pattern.
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int k = 0; k < 8; ++k) {
    h ^= (bits >> (8 * k)) & 0xffu;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

bool operator==(const LabeledSample& a, const LabeledSample& b) {
  return a.scores == b.scores && a.outcomes == b.outcomes &&
         same_matrix(a.covariates, b.covariates);
}

bool operator==(const UnlabeledSample& a, const UnlabeledSample& b) {
  return a.scores == b.scores && same_matrix(a.covariates, b.covariates);
}

void require_finite(std::span<const double> values, const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw DataError(std::string(what) + ": non-finite value at index " + std::to_string(i));
    }
  }
}

Fingerprint fingerprint(std::span<const double> scores, std::span<const double> outcomes) {
  std::uint64_t h = 14695981039346656037ull;
  for (double v : scores) h = mix(h, v);
  for (double v : outcomes) h = mix(h, v);
  return {scores.size(), h};
}

Fingerprint TwoSampleDesign::labeled_fingerprint() const {
  return fingerprint(labeled_.scores, labeled_.outcomes);
}

TwoSampleDesign::TwoSampleDesign(LabeledSample labeled, UnlabeledSample unlabeled)
    : labeled_(std::move(labeled)), unlabeled_(std::move(unlabeled)) {
  rho_ = static_cast<double>(labeled_.size()) /
         static_cast<double>(labeled_.size() + unlabeled_.size());
}

TwoSampleDesign validate_design(LabeledSample labeled, UnlabeledSample unlabeled) {
  if (labeled.scores.empty()) throw DataError("labeled sample is empty");
  if (unlabeled.scores.empty()) throw DataError("unlabeled sample is empty");
  if (labeled.outcomes.size() != labeled.scores.size()) {
    throw DimensionError("labeled sample has " + std::to_string(labeled.scores.size()) +
                         " scores but " + std::to_string(labeled.outcomes.size()) + " outcomes");
  }
  require_finite(labeled.scores, "labeled scores");
  require_finite(labeled.outcomes, "labeled outcomes");
  require_finite(unlabeled.scores, "unlabeled scores");

  if (labeled.covariates) {
    if (static_cast<std::size_t>(labeled.covariates->rows()) != labeled.size()) {
      throw DimensionError("labeled covariates have " +
                           std::to_string(labeled.covariates->rows()) + " rows, expected " +
                           std::to_string(labeled.size()));
    }
    require_finite_matrix(*labeled.covariates, "labeled covariates");
  }
  if (unlabeled.covariates) {
    if (static_cast<std::size_t>(unlabeled.covariates->rows()) != unlabeled.size()) {
      throw DimensionError("unlabeled covariates have " +
                           std::to_string(unlabeled.covariates->rows()) + " rows, expected " +
                           std::to_string(unlabeled.size()));
    }
    require_finite_matrix(*unlabeled.covariates, "unlabeled covariates");
  }
  if (labeled.covariates && unlabeled.covariates &&
      labeled.covariates->cols() != unlabeled.covariates->cols()) {
    throw DimensionError("covariate dimension mismatch: labeled d=" +
                         std::to_string(labeled.covariates->cols()) +
                         ", unlabeled d=" + std::to_string(unlabeled.covariates->cols()));
  }
  return TwoSampleDesign(std::move(labeled), std::move(unlabeled));
}

double mean(std::span<const double> values) {
  if (values.empty()) throw DataError("mean of an empty vector");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double pooled_mean(const TwoSampleDesign& design, std::span<const double> f_labeled,
                   std::span<const double> f_unlabeled) {
  if (f_labeled.size() != design.n() || f_unlabeled.size() != design.big_n()) {
    throw DimensionError("pooled_mean: expected lengths " + std::to_string(design.n()) + " and " +
                         std::to_string(design.big_n()));
  }
  require_finite(f_labeled, "pooled_mean labeled values");
  require_finite(f_unlabeled, "pooled_mean unlabeled values");
  // Same value as rho * mean_L + (1 - rho) * mean_U, with less rounding.
  const double total = std::accumulate(f_labeled.begin(), f_labeled.end(), 0.0) +
                       std::accumulate(f_unlabeled.begin(), f_unlabeled.end(), 0.0);
  return total / static_cast<double>(design.m_total());
}

}  // namespace calppi
