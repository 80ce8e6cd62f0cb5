#pragma once

#include <optional>
#include <string>
#include <vector>

#include "twophase/data.hpp"
#include "twophase/eic.hpp"
#include "twophase/nuisance.hpp"
#include "twophase/rake.hpp"

namespace twophase {

enum class EstimatorId {
  raking,
  aipcw,
  ipcw_tmle,
  ipcw_tmle_target_pi,
  ipcw_tmle_rake_pi,
  eee,
  quasi_tmle,
  tmle_alt,
};

// How E(Dbar_eps | Delta=1, V) follows the fluctuated Q: re-regressed at every
// eps, or extrapolated linearly from the regressions at the initial fit.
enum class TargetMode { refit, linearized };

struct EstimatorOptions {
  int max_outer_iter = 50;
  TargetMode mode = TargetMode::refit;
};

struct EstimateResult {
  EstimatorId estimator_id = EstimatorId::aipcw;
  TargetMode mode = TargetMode::refit;
  double psi_hat = 0.0;  // on the raw outcome scale
  double se = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double eic_mean_abs = 0.0;     // |P_n D| at the final fit
  double score_threshold = 0.0;  // sigma_n / (sqrt(n) log n) at the final fit
  int n_outer_iterations = 0;
  bool converged = true;
};

EstimateResult estimate_aipcw(const Dataset& ds, const NuisanceSet& ns);
EstimateResult estimate_ipcw_tmle(const Dataset& ds, const NuisanceSet& ns);
EstimateResult estimate_ipcw_tmle_target_pi(const Dataset& ds, const NuisanceSet& ns,
                                            TargetMode mode = TargetMode::refit, int max_outer_iter = 50);
EstimateResult estimate_ipcw_tmle_rake_pi(const Dataset& ds, const NuisanceSet& ns, int max_outer_iter = 50);
EstimateResult estimate_raking(const Dataset& ds, const NuisanceSet& ns);
EstimateResult estimate_eee(const Dataset& ds, const NuisanceSet& ns);
EstimateResult estimate_quasi_tmle(const Dataset& ds, const NuisanceSet& ns, TargetMode mode = TargetMode::refit);
EstimateResult estimate_tmle_alt(const Dataset& ds, const NuisanceSet& ns, int max_outer_iter = 50);

EstimateResult run_estimator(EstimatorId id, const Dataset& ds, const NuisanceSet& ns,
                             const EstimatorOptions& opts = {});

// Estimator plus targeting mode, named e.g. "quasi_tmle" or "quasi_tmle_linearized".
struct EstimatorChoice {
  EstimatorId id = EstimatorId::aipcw;
  TargetMode mode = TargetMode::refit;
};

std::string estimator_name(EstimatorId id);
std::string estimator_label(const EstimatorChoice& choice);
std::optional<EstimatorChoice> parse_estimator(const std::string& label);
bool is_targeted(EstimatorId id);
// The eight estimators with default modes, in display order.
std::vector<EstimatorChoice> all_estimators();

}  // namespace twophase
