#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "calppi/errors.hpp"
#include "calppi/estimators.hpp"
#include "calppi/inference.hpp"
#include "test_support.hpp"

using namespace calppi;
using calppi::testing::make_design;
using calppi::testing::rel_diff;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

TwoSampleDesign resample(const TwoSampleDesign& d, const std::vector<std::size_t>& li,
                         const std::vector<std::size_t>& ui) {
  LabeledSample lab;
  for (std::size_t i : li) {
    lab.scores.push_back(d.labeled().scores[i]);
    lab.outcomes.push_back(d.labeled().outcomes[i]);
  }
  UnlabeledSample unl;
  for (std::size_t j : ui) unl.scores.push_back(d.unlabeled().scores[j]);
  return validate_design(lab, unl);
}

double sample_sd(const Vector& v) {
  const double m = testing::plain_mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

TEST_CASE("influence_values examples", "[inference]") {
  const auto d = make_design({0, 0}, {2, 5}, {0, 0});
  const auto same = influence_values(d, Vector{2, 5}, Vector{1, 1}, 2.25);
  CHECK(same.labeled_vals == Vector{2 - 2.25, 5 - 2.25});

  const auto flat = make_design({0, 0}, {3, 3}, {0});
  const auto zero = influence_values(flat, Vector{3, 3}, Vector{3}, 3.0);
  CHECK(zero.labeled_vals == Vector{0, 0});
  CHECK(zero.unlabeled_vals == Vector{0});

  const auto half = make_design({0}, {2}, {0});
  CHECK(influence_values(half, Vector{1}, Vector{0}, 1.0).labeled_vals == Vector{2});
  CHECK_THROWS_AS(influence_values(half, Vector{1, 2}, Vector{0}, 1.0), DimensionError);
}

TEST_CASE("wald_se examples", "[inference]") {
  const auto d = make_design({0}, {0}, {0});
  CHECK(wald_se(InfluencePair{{0}, {0}}, d) == 0.0);
  CHECK(wald_se(InfluencePair{{2}, {0}}, d) == 1.0);
  CHECK(wald_se(InfluencePair{{4}, {0}}, d) == 2.0);
}

TEST_CASE("the two Wald SE forms agree", "[inference][property]") {
  std::mt19937_64 gen(50);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t n = testing::random_size(gen, 1, 40);
    const std::size_t big_n = testing::random_size(gen, 1, 90);
    const auto d = make_design(Vector(n, 0.0), Vector(n, 0.0), Vector(big_n, 0.0));
    const InfluencePair p{testing::normal_vector(gen, n, 0, 3), testing::normal_vector(gen, big_n)};
    const double se = wald_se(p, d);
    const double alt = std::sqrt(influence_variance(p, d.rho()) / static_cast<double>(d.m_total()));
    CHECK(rel_diff(se, alt) < 1e-12);
    InfluencePair doubled = p;
    for (double& v : doubled.labeled_vals) v *= 2;
    for (double& v : doubled.unlabeled_vals) v *= 2;
    CHECK_THAT(wald_se(doubled, d), WithinRel(2.0 * se, 1e-14));
  }
}

TEST_CASE("influence pairs of mean-calibrated estimators are centered", "[inference][property]") {
  std::mt19937_64 gen(51);
  for (int rep = 0; rep < 100; ++rep) {
    const auto d = testing::random_design(gen, testing::random_size(gen, 3, 40),
                                          testing::random_size(gen, 1, 80));
    const auto& lab = d.labeled();
    for (const Calibrator& cal :
         {Calibrator{fit_isotonic(lab.scores, lab.outcomes)},
          Calibrator{fit_linear(lab.scores, lab.outcomes, false)}}) {
      const Vector al = predict(cal, lab.scores);
      const Vector au = predict(cal, d.unlabeled().scores);
      const double psi = pooled_mean(d, al, au);
      const auto p = influence_values(d, al, au, psi);
      const double centre = d.rho() * testing::plain_mean(p.labeled_vals) +
                            (1.0 - d.rho()) * testing::plain_mean(p.unlabeled_vals);
      CHECK(std::abs(centre) < 1e-9);
    }
  }
}

TEST_CASE("wald_interval examples", "[inference]") {
  CHECK(wald_interval(1.5, 0.0, 0.05) == std::pair{1.5, 1.5});
  const auto [lo, hi] = wald_interval(0.0, 1.0, 0.05);
  CHECK_THAT(lo, WithinAbs(-1.95996, 1e-4));
  CHECK_THAT(hi, WithinAbs(1.95996, 1e-4));
  const auto [lo32, hi32] = wald_interval(0.0, 1.0, 0.32);
  CHECK_THAT(lo32, WithinAbs(-0.9945, 1e-4));
  CHECK_THAT(hi32, WithinAbs(0.9945, 1e-4));
  CHECK_THROWS_AS(wald_interval(0, 1, 0.0), ConfigError);
  CHECK_THROWS_AS(wald_interval(0, 1, 1.0), ConfigError);
  CHECK_THROWS_AS(wald_interval(0, 1, -0.1), ConfigError);
}

TEST_CASE("normal quantile meets the 1e-8 accuracy contract", "[inference]") {
  // Reference values computed to 20 digits with arbitrary-precision arithmetic.
  const std::pair<double, double> table[] = {
      {0.975, 1.9599639845400542355},   {0.84, 0.99445788320975316774},
      {0.995, 2.5758293035489007610},   {0.9, 1.2815515655446004670},
      {0.5, 0.0},                       {0.025, -1.9599639845400542355},
      {1e-10, -6.3613409024040562047},  {0.999999, 4.7534243088228989482}};
  for (const auto& [p, z] : table) CHECK_THAT(normal_quantile(p), WithinAbs(z, 1e-8));
}

TEST_CASE("empirical_quantile interpolates between order statistics", "[inference]") {
  const Vector v{1, 2, 3, 4};
  CHECK(empirical_quantile(v, 0.0) == 1.0);
  CHECK(empirical_quantile(v, 1.0) == 4.0);
  CHECK(empirical_quantile(v, 0.25) == 1.75);
  CHECK(empirical_quantile(v, 0.5) == 2.5);
  CHECK(empirical_quantile(Vector{7}, 0.3) == 7.0);
}

TEST_CASE("bootstrap on zero-variance data is degenerate", "[inference][bootstrap]") {
  const auto d = make_design({0.5, 0.5, 0.5}, {2, 2, 2}, {0.5, 0.5});
  for (Method m : {Method::LabeledOnly, Method::AIPW, Method::IsoCal, Method::LinearCal}) {
    const auto r = bootstrap(d, m, 50, 1);
    CHECK(r.se_boot == 0.0);
    CHECK(r.percentile_ci.first == r.percentile_ci.second);
    CHECK(r.normal_ci.first == r.normal_ci.second);
    CHECK(r.percentile_ci.first == 2.0);
  }
}

TEST_CASE("bootstrap is reproducible and replicate-addressable", "[inference][bootstrap]") {
  std::mt19937_64 gen(52);
  const auto d = testing::random_design(gen, 25, 70);
  const auto a = bootstrap(d, Method::IsoCal, 2, 77);
  const auto b = bootstrap(d, Method::IsoCal, 2, 77);
  CHECK(a.replicates == b.replicates);
  CHECK(a.se_boot == b.se_boot);
  CHECK_FALSE(bootstrap(d, Method::IsoCal, 2, 78).replicates == a.replicates);

  // Replicate k depends only on (seed, k) and refits the calibrator.
  const auto many = bootstrap(d, Method::IsoCal, 30, 77);
  CHECK(many.replicates[0] == a.replicates[0]);
  CHECK(many.replicates[1] == a.replicates[1]);
  for (std::size_t k = 0; k < many.b; ++k) {
    const auto [li, ui] = bootstrap_indices(d.n(), d.big_n(), 77, k);
    CHECK(many.replicates[k] == estimate(resample(d, li, ui), Method::IsoCal).estimate);
  }
}

TEST_CASE("bootstrap summary statistics", "[inference][bootstrap]") {
  std::mt19937_64 gen(53);
  const auto d = testing::random_design(gen, 40, 100);
  const auto r = bootstrap(d, Method::LinearCal, 200, 3, EstimateOptions{0.1});
  CHECK(r.alpha == 0.1);
  CHECK(r.b == 200);
  CHECK(r.seed == 3);
  CHECK(r.estimate == estimate(d, Method::LinearCal).estimate);
  CHECK_THAT(r.se_boot, WithinRel(sample_sd(r.replicates), 1e-12));
  Vector sorted = r.replicates;
  std::sort(sorted.begin(), sorted.end());
  CHECK(r.percentile_ci.first == empirical_quantile(sorted, 0.05));
  CHECK(r.percentile_ci.second == empirical_quantile(sorted, 0.95));
  const double z = normal_quantile(0.95);
  CHECK_THAT(r.normal_ci.first, WithinAbs(r.estimate - z * r.se_boot, 1e-12));
  CHECK_THAT(r.normal_ci.second, WithinAbs(r.estimate + z * r.se_boot, 1e-12));
}

TEST_CASE("bootstrap SE of the labeled mean is close to the analytic SE", "[inference][bootstrap]") {
  std::mt19937_64 gen(54);
  const Vector y = testing::normal_vector(gen, 200, 1.0, 2.0);
  const auto d = make_design(Vector(200, 0.0), y, Vector(400, 0.0));
  const auto r = bootstrap(d, Method::LabeledOnly, 1000, 9);
  const double analytic = sample_sd(y) / std::sqrt(200.0);
  CHECK(std::abs(r.se_boot - analytic) <= 0.15 * analytic);
}

TEST_CASE("bootstrap argument checks", "[inference][bootstrap]") {
  const auto d = make_design({0.1, 0.2}, {1, 2}, {0.3});
  CHECK_THROWS_AS(bootstrap(d, Method::AIPW, 1, 0), ConfigError);
  CHECK_THROWS_AS(bootstrap(d, Method::LinearCovCal, 10, 0), ConfigError);
}

TEST_CASE("labeled and unlabeled resampling streams are independent", "[inference][bootstrap]") {
  const std::size_t n = 50;
  double sxy = 0, sx = 0, sy = 0, sxx = 0, syy = 0, count = 0;
  for (std::size_t k = 0; k < 400; ++k) {
    const auto [li, ui] = bootstrap_indices(n, n, 5, k);
    REQUIRE(li.size() == n);
    REQUIRE(ui.size() == n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto x = static_cast<double>(li[i]), y = static_cast<double>(ui[i]);
      sxy += x * y;
      sx += x;
      sy += y;
      sxx += x * x;
      syy += y * y;
      count += 1;
    }
  }
  const double cov = sxy / count - (sx / count) * (sy / count);
  const double corr = cov / std::sqrt((sxx / count - (sx / count) * (sx / count)) *
                                      (syy / count - (sy / count) * (sy / count)));
  // 20,000 pairs: the null SD of the correlation is about 0.007.
  CHECK(std::abs(corr) < 0.03);
}

TEST_CASE("row permutation leaves estimates and Wald SEs unchanged", "[inference][property]") {
  std::mt19937_64 gen(55);
  LabeledSample lab;
  lab.scores = testing::uniform_vector(gen, 50, 0.05, 0.95);
  const Vector u = testing::uniform_vector(gen, 50);
  for (std::size_t i = 0; i < 50; ++i) lab.outcomes.push_back(u[i] < lab.scores[i] ? 1.0 : 0.0);
  UnlabeledSample unl{testing::uniform_vector(gen, 120, 0.05, 0.95), std::nullopt};
  const auto d = validate_design(lab, unl);

  std::vector<std::size_t> li(50), ui(120);
  std::iota(li.begin(), li.end(), 0);
  std::iota(ui.begin(), ui.end(), 0);
  std::shuffle(li.begin(), li.end(), gen);
  std::shuffle(ui.begin(), ui.end(), gen);
  const auto p = resample(d, li, ui);
  for (Method m : kAllMethods) {
    if (m == Method::AutoCal || m == Method::LinearCovCal) continue;
    const auto a = estimate(d, m);
    const auto b = estimate(p, m);
    CHECK(rel_diff(a.estimate, b.estimate) < 1e-12);
    CHECK(rel_diff(a.std_error, b.std_error) < 1e-12);
  }
}
