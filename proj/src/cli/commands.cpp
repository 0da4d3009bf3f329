#include <algorithm>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "calppi/cli.hpp"
#include "calppi/errors.hpp"
#include "calppi/estimators.hpp"
#include "calppi/inference.hpp"
#include "calppi/simulate.hpp"

namespace calppi::cli {
namespace {

struct DataFlags {
  std::string labeled;
  std::string unlabeled;
  std::vector<std::string> covariates;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  std::string output;
  std::size_t bins = 10;
  std::optional<std::size_t> folds;
  bool no_clip = false;
};

void add_data_flags(CLI::App* cmd, DataFlags& f) {
  cmd->add_option("--labeled", f.labeled, "Labeled CSV with columns y,score")->required();
  cmd->add_option("--unlabeled", f.unlabeled, "Unlabeled CSV with column score")->required();
  cmd->add_option("--covariates", f.covariates, "Covariate column names")->delimiter(',');
  cmd->add_option("--alpha", f.alpha, "Miscoverage level of the intervals");
  cmd->add_option("--seed", f.seed, "Seed for every random step");
  cmd->add_option("--output", f.output, "Output path (default: standard output)");
  cmd->add_option("--bins", f.bins, "Histogram bins for hist-cal");
  cmd->add_option("--folds", f.folds, "Cross-validation folds for auto-cal");
  cmd->add_flag("--no-clip", f.no_clip, "Do not clip linear maps to the labeled outcome range");
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("--alpha must lie in (0, 1)");
}

EstimateOptions options_from(const DataFlags& f) {
  check_alpha(f.alpha);
  EstimateOptions opt;
  opt.alpha = f.alpha;
  opt.hist_bins = f.bins;
  opt.clip_linear = !f.no_clip;
  opt.autocal.folds = f.folds;
  opt.autocal.seed = f.seed;
  return opt;
}

TwoSampleDesign load_design(const DataFlags& f) {
  return validate_design(read_labeled_csv(f.labeled, f.covariates),
                         read_unlabeled_csv(f.unlabeled, f.covariates));
}

void require_covariates(Method method, const DataFlags& f) {
  if (method == Method::LinearCovCal && f.covariates.empty()) {
    throw ConfigError("method linear-cov-cal needs --covariates");
  }
}

bool binary_outcomes(const Vector& y) {
  return std::all_of(y.begin(), y.end(), [](double v) { return v == 0.0 || v == 1.0; });
}

std::optional<Calibrator> fit_calibrator(const TwoSampleDesign& design, Method method,
                                         const EstimateOptions& opt) {
  const auto& lab = design.labeled();
  switch (method) {
    case Method::LinearCal: return fit_linear(lab.scores, lab.outcomes, opt.clip_linear);
    case Method::LinearCovCal:
      return fit_linear_cov(lab.scores, lab.outcomes, *lab.covariates, opt.clip_linear);
    case Method::PlattCal: return fit_platt(lab.scores, lab.outcomes);
    case Method::IsoCal: return fit_isotonic(lab.scores, lab.outcomes);
    case Method::HistCal:
      return fit_histogram(lab.scores, lab.outcomes,
                           default_histogram_edges(lab.scores, opt.hist_bins));
    default: return std::nullopt;
  }
}

// Writes to --output when given, else to `out`.
void emit(const std::string& path, std::ostream& out, const std::string& text) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot write '" + path + "'");
  file << text;
}

std::string cmd_estimate(const DataFlags& f, const std::string& method_tag,
                         const std::string& calibrator_path) {
  const Method method = parse_method(method_tag);
  require_covariates(method, f);
  const EstimateOptions opt = options_from(f);
  const TwoSampleDesign design = load_design(f);
  const EstimateReport report = estimate(design, method, opt);
  if (!calibrator_path.empty()) {
    const auto cal = fit_calibrator(design, method, opt);
    if (!cal) throw ConfigError("method " + method_tag + " has no single fitted calibrator");
    std::ofstream file(calibrator_path);
    if (!file) throw DataError("cannot write '" + calibrator_path + "'");
    file << calibrator_to_json(*cal).dump(2) << '\n';
  }
  return report_to_json(report).dump(2) + "\n";
}

std::string cmd_compare(const DataFlags& f) {
  EstimateOptions opt = options_from(f);
  const TwoSampleDesign design = load_design(f);
  std::ostringstream csv;
  csv << "method,estimate,std_error,ci_lo,ci_hi\n";
  for (Method method : kAllMethods) {
    if (method == Method::LinearCovCal && !design.has_covariates()) continue;
    if (method == Method::PlattCal && !binary_outcomes(design.labeled().outcomes)) continue;
    if (method == Method::AutoCal && design.n() < 4) continue;
    const EstimateReport r = estimate(design, method, opt);
    csv << to_string(method) << ',' << format_double(r.estimate) << ','
        << format_double(r.std_error) << ',' << format_double(r.ci_lower) << ','
        << format_double(r.ci_upper) << '\n';
  }
  return csv.str();
}

std::string cmd_bootstrap(const DataFlags& f, const std::string& method_tag, std::size_t b) {
  const Method method = parse_method(method_tag);
  require_covariates(method, f);
  const EstimateOptions opt = options_from(f);
  if (b < 2) throw ConfigError("--b must be at least 2");
  const TwoSampleDesign design = load_design(f);
  return bootstrap_to_json(method, bootstrap(design, method, b, f.seed, opt)).dump(2) + "\n";
}

struct SimulateFlags {
  std::vector<std::size_t> ns = {50, 100, 200, 400, 800, 1200, 2400};
  std::vector<std::size_t> ratios = {1, 16};
  std::vector<std::string> methods;
  std::size_t reps = 500;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  bool well_calibrated = false;
  std::string output;
};

std::string cmd_simulate(const SimulateFlags& f) {
  check_alpha(f.alpha);
  GridConfig config;
  if (!f.methods.empty()) {
    config.methods.clear();
    for (const auto& tag : f.methods) config.methods.push_back(parse_method(tag));
  }
  for (Method m : config.methods) {
    if (m == Method::LinearCovCal) throw ConfigError("linear-cov-cal needs covariates; the simulation has none");
  }
  if (f.ns.empty() || f.ratios.empty()) throw ConfigError("--ns and --ratios must not be empty");
  if (f.reps < 2) throw ConfigError("--reps must be at least 2");
  config.ns = f.ns;
  config.ratios = f.ratios;
  config.reps = f.reps;
  config.alpha = f.alpha;
  config.seed = f.seed;
  config.miscalibrated = !f.well_calibrated;
  config.options.alpha = f.alpha;
  std::ostringstream csv;
  write_summary_csv(csv, run_grid(config));
  return csv.str();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semisupervised mean estimation with calibrated predictions", "calppi"};
  app.require_subcommand(1);

  DataFlags est_flags;
  std::string est_method = "aipw";
  std::string calibrator_path;
  auto* est = app.add_subcommand("estimate", "Estimate the mean with one method (JSON)");
  add_data_flags(est, est_flags);
  est->add_option("--method", est_method, "Method tag");
  est->add_option("--save-calibrator", calibrator_path, "Write the fitted calibrator as JSON");

  DataFlags cmp_flags;
  auto* cmp = app.add_subcommand("compare", "Run every applicable method (CSV)");
  add_data_flags(cmp, cmp_flags);

  DataFlags boot_flags;
  std::string boot_method = "aipw";
  std::size_t b = 1000;
  auto* boot = app.add_subcommand("bootstrap", "Bootstrap with refitting (JSON)");
  add_data_flags(boot, boot_flags);
  boot->add_option("--method", boot_method, "Method tag");
  boot->add_option("--b", b, "Bootstrap replicates");

  SimulateFlags sim_flags;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo grid over the built-in design (CSV)");
  sim->add_option("--ns", sim_flags.ns, "Labeled sample sizes")->delimiter(',');
  sim->add_option("--ratios", sim_flags.ratios, "Unlabeled-to-labeled ratios")->delimiter(',');
  sim->add_option("--method", sim_flags.methods, "Method tags")->delimiter(',');
  sim->add_option("--reps", sim_flags.reps, "Replicates per cell");
  sim->add_option("--alpha", sim_flags.alpha, "Miscoverage level");
  sim->add_option("--seed", sim_flags.seed, "Master seed");
  sim->add_option("--output", sim_flags.output, "Output path (default: standard output)");
  sim->add_flag("--well-calibrated", sim_flags.well_calibrated, "Use m = mu0 instead of the distorted score");

  std::vector<std::string> args;
  for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
  try {
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (est->parsed()) {
      emit(est_flags.output, out, cmd_estimate(est_flags, est_method, calibrator_path));
    } else if (cmp->parsed()) {
      emit(cmp_flags.output, out, cmd_compare(cmp_flags));
    } else if (boot->parsed()) {
      emit(boot_flags.output, out, cmd_bootstrap(boot_flags, boot_method, b));
    } else if (sim->parsed()) {
      emit(sim_flags.output, out, cmd_simulate(sim_flags));
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace calppi::cli
