#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "calppi/design.hpp"
#include "calppi/estimators.hpp"

namespace calppi {

// Binary-outcome design with S ~ N(0, 1), Y | S ~ Bernoulli(mu0(S)), and a
// score that is either a monotone but miscalibrated distortion of mu0 or mu0
// itself.
struct DgpSpec {
  std::size_t n = 100;
  std::size_t ratio = 1;
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;
  bool miscalibrated = true;
};

// mu0(s) = 1 / (1 + exp(-5 s)).
double dgp_mu0(double s);
// logit(mu0(s)), evaluated from mu0 rather than simplified.
double dgp_z(double s);
// clip(-0.15 + 0.75 * sigmoid(0.8 z + 0.1 z^3 - 1), 0.01, 0.99) with z = dgp_z(s).
double dgp_distorted_score(double s);

inline constexpr double kDgpTruth = 0.5;

TwoSampleDesign draw_dataset(const DgpSpec& spec);

struct McSummary {
  Method method = Method::PPI;
  std::size_t n = 0;
  std::size_t ratio = 0;
  std::size_t reps = 0;
  double bias = 0.0;
  double sd = 0.0;
  double rmse = 0.0;
  double coverage = 0.0;
  double rel_eff_vs_ppi = 0.0;
};

using DatasetGenerator = std::function<TwoSampleDesign(const DgpSpec&)>;
// Called once per (n, ratio, rep, method) evaluation with the fingerprint of
// the labeled data the method saw. Calls may come from worker threads.
using EvaluationObserver = std::function<void(std::size_t n, std::size_t ratio, std::size_t rep,
                                              Method method, const Fingerprint& data)>;

struct GridConfig {
  std::vector<std::size_t> ns = {50, 100, 200, 400, 800, 1200, 2400};
  std::vector<std::size_t> ratios = {1, 16};
  std::vector<Method> methods = {Method::LabeledOnly, Method::PPI,       Method::AIPW,
                                 Method::PPIpp,       Method::AipwEM,    Method::LinearCal,
                                 Method::IsoCal,      Method::AutoCal};
  std::size_t reps = 500;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  bool miscalibrated = true;
  double truth = kDgpTruth;
  // Linear maps stay unclipped so they keep the mean-calibration property.
  EstimateOptions options = [] {
    EstimateOptions o;
    o.clip_linear = false;
    return o;
  }();
  DatasetGenerator generator;  // defaults to draw_dataset
  EvaluationObserver observer;
};

// One row per (n, ratio, method), sorted by n, ratio, then method tag. Every
// method in a replicate sees the same dataset.
std::vector<McSummary> run_grid(const GridConfig& config);

std::vector<McSummary> run_grid(const std::vector<std::size_t>& ns,
                                const std::vector<std::size_t>& ratios,
                                const std::vector<Method>& methods, std::size_t reps, double alpha,
                                std::uint64_t seed);

// Header: method,n,ratio,reps,bias,sd,rmse,coverage,rel_eff_vs_ppi
void write_summary_csv(std::ostream& out, const std::vector<McSummary>& rows);

// One randomized-trial arm: observed outcomes plus both arm-specific scores
// m1 and m0 evaluated on the arm's units.
struct ArmSample {
  Vector outcomes;
  Vector score_m1;
  Vector score_m0;
};

struct AteReport {
  EstimateReport effect;
  EstimateReport treated_mean;
  EstimateReport control_mean;
};

// Difference of two arm means, each a two-sample estimate in which one arm
// supplies outcomes and the other only scores.
AteReport ate_two_arm(const ArmSample& treated, const ArmSample& control, Method method,
                      const EstimateOptions& options = {});

}  // namespace calppi
