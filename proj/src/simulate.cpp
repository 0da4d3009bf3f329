#include "calppi/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <limits>
#include <map>
#include <ostream>
#include <string>

#include "calppi/errors.hpp"
#include "calppi/inference.hpp"
#include "calppi/rng.hpp"
#include "parallel.hpp"

namespace calppi {
namespace {

double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double score_for(double s, bool miscalibrated) {
  return miscalibrated ? dgp_distorted_score(s) : dgp_mu0(s);
}

std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

struct RepOutcome {
  std::vector<double> estimates;
  std::vector<char> covered;
};

}  // namespace

double dgp_mu0(double s) { return sigmoid(5.0 * s); }

double dgp_z(double s) {
  const double mu = dgp_mu0(s);
  const double one_minus_mu = sigmoid(-5.0 * s);
  return std::log(mu) - std::log(one_minus_mu);
}

double dgp_distorted_score(double s) {
  const double z = dgp_z(s);
  return std::clamp(-0.15 + 0.75 * sigmoid(0.8 * z + 0.1 * z * z * z - 1.0), 0.01, 0.99);
}

TwoSampleDesign draw_dataset(const DgpSpec& spec) {
  if (spec.n < 2) throw ConfigError("simulation needs n >= 2");
  if (spec.ratio < 1) throw ConfigError("simulation needs N/n >= 1");
  Stream lab_stream{spec.seed, key(StreamPurpose::SimulationLabeled), spec.n, spec.ratio,
                    spec.replicate};
  Stream unl_stream{spec.seed, key(StreamPurpose::SimulationUnlabeled), spec.n, spec.ratio,
                    spec.replicate};
  LabeledSample lab;
  lab.scores.resize(spec.n);
  lab.outcomes.resize(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const double s = lab_stream.normal();
    lab.scores[i] = score_for(s, spec.miscalibrated);
    lab.outcomes[i] = lab_stream.uniform() < dgp_mu0(s) ? 1.0 : 0.0;
  }
  UnlabeledSample unl;
  unl.scores.resize(spec.n * spec.ratio);
  for (double& m : unl.scores) m = score_for(unl_stream.normal(), spec.miscalibrated);
  return validate_design(std::move(lab), std::move(unl));
}

std::vector<McSummary> run_grid(const GridConfig& config) {
  if (config.reps < 2) throw ConfigError("run_grid needs reps >= 2");
  if (config.methods.empty()) throw ConfigError("run_grid needs at least one method");
  const DatasetGenerator generator = config.generator ? config.generator : draw_dataset;

  // PPI is always evaluated so relative efficiency can be reported.
  std::vector<Method> evaluated = config.methods;
  if (std::find(evaluated.begin(), evaluated.end(), Method::PPI) == evaluated.end()) {
    evaluated.push_back(Method::PPI);
  }
  const std::size_t ppi_slot = static_cast<std::size_t>(
      std::find(evaluated.begin(), evaluated.end(), Method::PPI) - evaluated.begin());

  std::vector<McSummary> rows;
  for (std::size_t n : config.ns) {
    for (std::size_t ratio : config.ratios) {
      std::vector<RepOutcome> outcomes(config.reps);
      detail::parallel_for(config.reps, [&](std::size_t rep) {
        DgpSpec spec{n, ratio, config.seed, rep, config.miscalibrated};
        const TwoSampleDesign design = generator(spec);
        EstimateOptions options = config.options;
        options.alpha = config.alpha;
        Stream method_stream{config.seed, key(StreamPurpose::SimulationMethods), n, ratio, rep};
        options.autocal.seed = static_cast<std::uint64_t>(method_stream.uniform() * 0x1.0p53);

        RepOutcome& out = outcomes[rep];
        out.estimates.resize(evaluated.size());
        out.covered.resize(evaluated.size());
        const Fingerprint fp = design.labeled_fingerprint();
        for (std::size_t k = 0; k < evaluated.size(); ++k) {
          if (config.observer) config.observer(n, ratio, rep, evaluated[k], fp);
          const EstimateReport r = estimate(design, evaluated[k], options);
          out.estimates[k] = r.estimate;
          out.covered[k] = r.ci_lower <= config.truth && config.truth <= r.ci_upper;
        }
      });

      std::vector<double> mse(evaluated.size());
      std::vector<McSummary> block;
      for (std::size_t k = 0; k < evaluated.size(); ++k) {
        double sum = 0.0;
        double sq_err = 0.0;
        double hits = 0.0;
        for (const RepOutcome& o : outcomes) {
          sum += o.estimates[k];
          sq_err += (o.estimates[k] - config.truth) * (o.estimates[k] - config.truth);
          hits += o.covered[k] ? 1.0 : 0.0;
        }
        const auto reps = static_cast<double>(config.reps);
        const double avg = sum / reps;
        double ss = 0.0;
        for (const RepOutcome& o : outcomes) ss += (o.estimates[k] - avg) * (o.estimates[k] - avg);
        McSummary row;
        row.method = evaluated[k];
        row.n = n;
        row.ratio = ratio;
        row.reps = config.reps;
        row.bias = avg - config.truth;
        row.sd = std::sqrt(ss / (reps - 1.0));
        mse[k] = sq_err / reps;
        row.rmse = std::sqrt(mse[k]);
        row.coverage = hits / reps;
        block.push_back(row);
      }
      for (std::size_t k = 0; k < config.methods.size(); ++k) {
        McSummary row = block[k];
        if (mse[k] > 0.0) {
          row.rel_eff_vs_ppi = mse[ppi_slot] / mse[k];
        } else {
          row.rel_eff_vs_ppi = mse[ppi_slot] > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
        }
        rows.push_back(row);
      }
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const McSummary& a, const McSummary& b) {
    if (a.n != b.n) return a.n < b.n;
    if (a.ratio != b.ratio) return a.ratio < b.ratio;
    return to_string(a.method) < to_string(b.method);
  });
  return rows;
}

std::vector<McSummary> run_grid(const std::vector<std::size_t>& ns,
                                const std::vector<std::size_t>& ratios,
                                const std::vector<Method>& methods, std::size_t reps, double alpha,
                                std::uint64_t seed) {
  GridConfig config;
  config.ns = ns;
  config.ratios = ratios;
  config.methods = methods;
  config.reps = reps;
  config.alpha = alpha;
  config.seed = seed;
  return run_grid(config);
}

void write_summary_csv(std::ostream& out, const std::vector<McSummary>& rows) {
  out << "method,n,ratio,reps,bias,sd,rmse,coverage,rel_eff_vs_ppi\n";
  for (const McSummary& r : rows) {
    out << to_string(r.method) << ',' << r.n << ',' << r.ratio << ',' << r.reps << ','
        << shortest(r.bias) << ',' << shortest(r.sd) << ',' << shortest(r.rmse) << ','
        << shortest(r.coverage) << ',' << shortest(r.rel_eff_vs_ppi) << '\n';
  }
}

AteReport ate_two_arm(const ArmSample& treated, const ArmSample& control, Method method,
                      const EstimateOptions& options) {
  if (treated.outcomes.empty() || control.outcomes.empty()) {
    throw DataError("ate_two_arm: both arms must be nonempty");
  }
  for (const ArmSample* arm : {&treated, &control}) {
    if (arm->score_m1.size() != arm->outcomes.size() ||
        arm->score_m0.size() != arm->outcomes.size()) {
      throw DimensionError("ate_two_arm: arm score vectors must match its outcomes");
    }
  }
  const TwoSampleDesign design1 = validate_design(
      LabeledSample{treated.score_m1, treated.outcomes, std::nullopt},
      UnlabeledSample{control.score_m1, std::nullopt});
  const TwoSampleDesign design0 = validate_design(
      LabeledSample{control.score_m0, control.outcomes, std::nullopt},
      UnlabeledSample{treated.score_m0, std::nullopt});

  AteReport out;
  out.treated_mean = estimate(design1, method, options);
  out.control_mean = estimate(design0, method, options);
  EstimateReport& effect = out.effect;
  effect.estimate = out.treated_mean.estimate - out.control_mean.estimate;
  effect.std_error = std::sqrt(out.treated_mean.std_error * out.treated_mean.std_error +
                               out.control_mean.std_error * out.control_mean.std_error);
  std::tie(effect.ci_lower, effect.ci_upper) =
      wald_interval(effect.estimate, effect.std_error, options.alpha);
  effect.alpha = options.alpha;
  effect.method = method;
  effect.n = treated.outcomes.size();
  effect.big_n = control.outcomes.size();
  effect.diagnostics.values["mu1"] = out.treated_mean.estimate;
  effect.diagnostics.values["mu0"] = out.control_mean.estimate;
  return out;
}

}  // namespace calppi
