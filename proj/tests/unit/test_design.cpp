#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "calppi/design.hpp"
#include "calppi/errors.hpp"
#include "test_support.hpp"

using namespace calppi;
using calppi::testing::make_design;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

TEST_CASE("pooled_mean examples", "[design]") {
  CHECK(pooled_mean(make_design({0, 0}, {0, 0}, {0}), Vector{1, 1}, Vector{1}) == 1.0);
  CHECK_THAT(pooled_mean(make_design({0, 0}, {0, 0}, {0, 0, 0, 0}), Vector{0, 2}, Vector{4, 4, 4, 4}),
             WithinAbs(3.0, 1e-15));
  CHECK(pooled_mean(make_design({0}, {0}, {0}), Vector{5}, Vector{0}) == 2.5);
}

TEST_CASE("pooled_mean equals the arithmetic mean of the concatenation", "[design][property]") {
  std::mt19937_64 gen(11);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = testing::random_size(gen, 1, 30);
    const std::size_t big_n = testing::random_size(gen, 1, 90);
    const auto design = make_design(Vector(n, 0.0), Vector(n, 0.0), Vector(big_n, 0.0));
    const Vector fl = testing::normal_vector(gen, n, 1.0, 3.0);
    const Vector fu = testing::normal_vector(gen, big_n, -1.0, 2.0);
    Vector all = fl;
    all.insert(all.end(), fu.begin(), fu.end());
    CHECK(testing::rel_diff(pooled_mean(design, fl, fu), testing::plain_mean(all)) < 1e-13);
  }
}

TEST_CASE("pooled_mean rejects bad inputs", "[design]") {
  const auto design = make_design({0, 0}, {0, 0}, {0});
  CHECK_THROWS_AS(pooled_mean(design, Vector{1}, Vector{1}), DimensionError);
  CHECK_THROWS_AS(pooled_mean(design, Vector{1, 1}, Vector{1, 2}), DimensionError);
  CHECK_THROWS_AS(pooled_mean(design, Vector{1, std::nan("")}, Vector{1}), DataError);
}

TEST_CASE("validate_design computes rho from sizes", "[design]") {
  const auto design = make_design({1, 2, 3}, {1, 2, 3}, Vector(9, 0.5));
  CHECK(design.rho() == 0.25);
  CHECK(design.n() == 3);
  CHECK(design.big_n() == 9);
  CHECK(design.m_total() == 12);
  CHECK_FALSE(design.has_covariates());
}

TEST_CASE("validate_design rejects empty and non-finite samples", "[design]") {
  CHECK_THROWS_AS(make_design({}, {}, {1}), DataError);
  CHECK_THROWS_AS(make_design({1}, {1}, {}), DataError);
  CHECK_THROWS_WITH(make_design({1, 2, 3}, {1, std::nan(""), 3}, {1}), ContainsSubstring("index 1"));
  CHECK_THROWS_AS(make_design({1, std::numeric_limits<double>::infinity()}, {1, 2}, {1}), DataError);
  CHECK_THROWS_AS(make_design({1, 2}, {1, 2}, {std::nan("")}), DataError);
  CHECK_THROWS_AS(make_design({1, 2}, {1}, {1}), DimensionError);
}

TEST_CASE("validate_design checks covariates", "[design]") {
  LabeledSample lab{{1, 2}, {1, 2}, Matrix::Ones(2, 3)};
  UnlabeledSample unl{{1}, Matrix::Ones(1, 2)};
  CHECK_THROWS_AS(validate_design(lab, unl), DimensionError);
  unl.covariates = Matrix::Ones(1, 3);
  CHECK(validate_design(lab, unl).has_covariates());
  lab.covariates = Matrix::Ones(3, 3);
  CHECK_THROWS_AS(validate_design(lab, unl), DimensionError);
  lab.covariates = Matrix::Ones(2, 3);
  (*lab.covariates)(1, 2) = std::nan("");
  CHECK_THROWS_AS(validate_design(lab, unl), DataError);
}

TEST_CASE("rho is invariant under row permutation", "[design][property]") {
  std::mt19937_64 gen(5);
  Vector s = testing::normal_vector(gen, 17);
  Vector y = testing::normal_vector(gen, 17);
  Vector u = testing::normal_vector(gen, 40);
  const double rho = make_design(s, y, u).rho();
  std::shuffle(u.begin(), u.end(), gen);
  std::reverse(s.begin(), s.end());
  std::reverse(y.begin(), y.end());
  CHECK(make_design(s, y, u).rho() == rho);
}

TEST_CASE("validate_design is idempotent", "[design][property]") {
  std::mt19937_64 gen(3);
  const auto design = testing::random_design(gen, 12, 30);
  const auto again = validate_design(design.labeled(), design.unlabeled());
  CHECK(again == design);
  CHECK(again.labeled_fingerprint() == design.labeled_fingerprint());
}

TEST_CASE("fingerprint tracks content", "[design]") {
  const Vector s{1, 2, 3};
  const Vector y{0, 1, 0};
  CHECK(fingerprint(s, y) == fingerprint(Vector{1, 2, 3}, Vector{0, 1, 0}));
  CHECK_FALSE(fingerprint(s, y) == fingerprint(Vector{1, 2, 3}, Vector{0, 1, 1}));
  CHECK_FALSE(fingerprint(s, y) == fingerprint(Vector{1, 2}, Vector{0, 1}));
}
