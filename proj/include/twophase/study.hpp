#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "twophase/dgp.hpp"
#include "twophase/estimators.hpp"

namespace twophase {

// One estimator's output on one simulated dataset.
struct RunOutcome {
  bool ok = false;
  EstimateResult result;
  double runtime_s = 0.0;
  std::string error;
};

// Produces one outcome per estimator label for a generated dataset.
using RunPlan = std::function<std::vector<RunOutcome>(const Draw& draw, std::uint64_t seed)>;

struct StudyNuisanceConfig {
  NuisanceOptions options;
  bool known_pi = false;
  bool known_g = false;
  std::optional<double> constant_pi;
  std::optional<double> constant_g;
  EstimatorOptions estimator;
};

// Fits nuisances once per run, then evaluates each estimator on that fit.
RunPlan make_estimator_plan(const std::vector<EstimatorChoice>& estimators, const StudyNuisanceConfig& config);

struct StudySpec {
  DgpSpec dgp;  // dgp.seed is ignored; run r uses base_seed + r
  int runs = 1;
  std::uint64_t base_seed = 1;
  int parallelism = 1;
  double psi_true = 0.0;
  std::optional<double> psi_census;
};

struct EstimatorMetrics {
  std::string label;
  int n_ok = 0;
  int n_failed = 0;
  int n_nonconverged = 0;
  double mean_psi = 0.0;
  double bias = 0.0;
  double abs_bias = 0.0;
  std::optional<double> emp_se;  // absent with fewer than two successful runs
  double mse = 0.0;
  double mean_se = 0.0;
  double coverage = 0.0;
  std::optional<double> oracle_coverage;
  // Same metrics referenced to the census estimand, when one is supplied.
  std::optional<double> census_abs_bias;
  std::optional<double> census_mse;
  std::optional<double> census_coverage;
  std::optional<double> census_oracle_coverage;
  double mean_runtime_s = 0.0;
  double mean_iterations = 0.0;
  std::string first_error;
};

struct SimReport {
  DgpSpec dgp;
  int n_runs = 0;
  std::uint64_t base_seed = 0;
  double psi_true = 0.0;
  std::optional<double> psi_census;
  std::vector<EstimatorMetrics> rows;
};

SimReport run_study(const StudySpec& spec, const std::vector<std::string>& labels, const RunPlan& plan);

// Aggregates outcomes indexed [run][estimator]; the reduction follows run order only.
SimReport summarize(const StudySpec& spec, const std::vector<std::string>& labels,
                    const std::vector<std::vector<RunOutcome>>& outcomes);

// Report CSV: one row per estimator per report, table units (|bias| x1e3, SE x1e2, MSE x1e3, percent).
void write_report_csv(const std::vector<SimReport>& reports, std::ostream& out);

// Run context that must stay out of the CSV so reruns compare byte for byte.
struct ReportMeta {
  std::string config_text;
  std::string git_hash;
  double wall_time_s = 0.0;
};

// JSON sidecar: config, seeds, git hash, wall time and per-estimator runtimes.
void write_report_meta(const std::vector<SimReport>& reports, const ReportMeta& meta, std::ostream& out);

std::string build_git_hash();

}  // namespace twophase
