#include "twophase/commands.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <thread>

namespace twophase {

namespace {

std::ofstream open_output(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  const auto path = std::filesystem::path(dir) / name;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

int resolve_parallelism(const RunConfig& config) {
  if (config.parallelism) return *config.parallelism;
  if (const char* env = std::getenv("TWOPHASE_THREADS")) {
    const int t = std::atoi(env);
    if (t >= 1) return t;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

NuisanceOptions estimate_options(const StudyNuisanceConfig& n) {
  NuisanceOptions opts = n.options;
  if (n.constant_pi) {
    const double c = *n.constant_pi;
    opts.known_pi = [c](const Dataset&, Eigen::Index, int) { return c; };
  }
  if (n.constant_g) {
    const double c = *n.constant_g;
    opts.known_g = [c](const Dataset&, Eigen::Index, int) { return c; };
  }
  return opts;
}

}  // namespace

int cmd_estimate(const RunConfig& config, std::ostream& log) {
  validate_config(config);
  const Dataset ds = scale_outcome(load_csv(*config.data_path, config.schema));

  std::vector<std::optional<EstimateResult>> results(config.estimators.size());
  std::vector<std::string> errors(config.estimators.size());
  try {
    const NuisanceSet ns = fit_nuisances(ds, estimate_options(config.nuisance));
    for (std::size_t k = 0; k < config.estimators.size(); ++k) {
      EstimatorOptions eo = config.nuisance.estimator;
      eo.mode = config.estimators[k].mode;
      try {
        results[k] = run_estimator(config.estimators[k].id, ds, ns, eo);
      } catch (const std::exception& e) {
        errors[k] = e.what();
      }
    }
  } catch (const std::exception& e) {
    for (auto& err : errors) err = std::string("nuisance fit: ") + e.what();
  }

  auto out = open_output(config.out, "estimates.csv");
  out << "estimator,psi_hat,se,ci_lo,ci_hi,eic_mean_abs,n_iter,converged\n";
  bool all_converged = true;
  const std::string nan = format_real(std::numeric_limits<double>::quiet_NaN());
  for (std::size_t k = 0; k < config.estimators.size(); ++k) {
    out << estimator_label(config.estimators[k]) << ',';
    if (const auto& r = results[k]) {
      out << format_real(r->psi_hat) << ',' << format_real(r->se) << ',' << format_real(r->ci_lo) << ','
          << format_real(r->ci_hi) << ',' << format_real(r->eic_mean_abs) << ',' << r->n_outer_iterations << ','
          << (r->converged ? "true" : "false") << '\n';
      all_converged &= r->converged;
    } else {
      out << nan << ',' << nan << ',' << nan << ',' << nan << ',' << nan << ",0,false\n";
      log << estimator_label(config.estimators[k]) << " failed: " << errors[k] << '\n';
      all_converged = false;
    }
  }
  return all_converged ? kExitOk : kExitRunFailure;
}

int cmd_simulate(const RunConfig& config, std::ostream& log, bool verbose) {
  validate_config(config);
  const auto start = std::chrono::steady_clock::now();
  const int parallelism = resolve_parallelism(config);

  std::vector<std::string> labels;
  for (const auto& e : config.estimators) labels.push_back(estimator_label(e));
  const RunPlan plan = make_estimator_plan(config.estimators, config.nuisance);

  // Only the grid that the generator actually reads is swept.
  const bool sweep_intercept = *config.dgp == DgpId::missing_rate;
  const bool sweep_gamma = *config.dgp == DgpId::raking_gap;
  const std::vector<double> intercepts = sweep_intercept ? config.intercept_grid : std::vector<double>{1.1};
  const std::vector<double> gammas = sweep_gamma ? config.gamma_grid : std::vector<double>{1.0};

  std::map<std::pair<double, double>, double> census_cache;
  std::vector<SimReport> reports;
  for (double intercept : intercepts) {
    for (double gamma : gammas) {
      for (Eigen::Index n : config.n_grid) {
        StudySpec spec;
        spec.dgp = {*config.dgp, n, config.seed, intercept, gamma};
        spec.runs = config.runs;
        spec.base_seed = config.seed;
        spec.parallelism = parallelism;
        spec.psi_true = reference_psi(spec.dgp);
        if (config.census) {
          auto key = std::make_pair(intercept, gamma);
          auto it = census_cache.find(key);
          // The census draw uses a stream well away from the per-run seeds.
          if (it == census_cache.end())
            it = census_cache.emplace(key, census_psi(spec.dgp, config.census_n_mc, config.seed ^ 0x5DEECE66DULL)).first;
          spec.psi_census = it->second;
        }
        if (verbose)
          log << "study " << dgp_name(spec.dgp.id) << " n=" << n << " intercept=" << intercept << " gamma=" << gamma
              << " runs=" << spec.runs << '\n';
        reports.push_back(run_study(spec, labels, plan));
      }
    }
  }

  {
    auto csv = open_output(config.out, "report.csv");
    write_report_csv(reports, csv);
  }
  ReportMeta meta;
  meta.config_text = config.text;
  meta.git_hash = build_git_hash();
  meta.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  {
    auto json = open_output(config.out, "report.meta.json");
    write_report_meta(reports, meta, json);
  }

  int code = kExitOk;
  for (const auto& rep : reports) {
    for (const auto& m : rep.rows) {
      if (2 * m.n_failed > rep.n_runs) {
        log << m.label << " failed in " << m.n_failed << " of " << rep.n_runs << " runs (n=" << rep.dgp.n
            << "): " << m.first_error << '\n';
        code = kExitRunFailure;
      }
    }
  }
  return code;
}

int run_cli(int argc, const char* const* argv, std::ostream& log) {
  CLI::App app{"Average treatment effect estimation under two-phase sampling"};
  std::string config_path, mode, out;
  std::optional<std::uint64_t> seed;
  std::optional<int> parallelism;
  bool verbose = false;
  app.add_option("--config", config_path, "Config file")->required();
  app.add_option("--mode", mode, "Override the config mode")->check(CLI::IsMember({"estimate", "simulate"}));
  app.add_option("--out", out, "Output directory");
  app.add_option("--seed", seed, "Override the config seed");
  app.add_option("--parallelism", parallelism, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--verbose", verbose, "Progress messages on stderr");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    log << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    log << e.what() << '\n';
    return kExitConfigError;
  }

  RunConfig config;
  try {
    config = load_config(config_path);
    if (!mode.empty()) config.mode = mode == "estimate" ? RunMode::estimate : RunMode::simulate;
    if (!out.empty()) config.out = out;
    if (seed) config.seed = *seed;
    if (parallelism) config.parallelism = *parallelism;
    // Relative data paths resolve against the config file's directory.
    if (config.data_path && std::filesystem::path(*config.data_path).is_relative())
      config.data_path = (std::filesystem::path(config_path).parent_path() / *config.data_path).string();
    validate_config(config);
  } catch (const ConfigError& e) {
    log << e.what() << '\n';
    return kExitConfigError;
  }

  try {
    if (*config.mode == RunMode::estimate) return cmd_estimate(config, log);
    return cmd_simulate(config, log, verbose);
  } catch (const ConfigError& e) {
    log << e.what() << '\n';
    return kExitConfigError;
  } catch (const DataError& e) {
    log << "data: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitRunFailure;
  }
}

}  // namespace twophase
