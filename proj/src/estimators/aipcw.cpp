#include "common.hpp"

namespace twophase {

EstimateResult estimate_aipcw(const Dataset& ds, const NuisanceSet& ns) {
  const detail::Workspace ws(ds, ns);
  const Eigen::VectorXd dbar = detail::dbar(ws, {ws.initial.q1, ws.initial.q0});
  const Eigen::VectorXd mbar = ws.initial_mbar();
  // Solve P_n D = 0 in psi: D is affine in psi with slope -1.
  const Eigen::VectorXd at_zero = observed_eic_values(ws.delta(), ws.initial.pi, dbar, mbar, 0.0);
  const double psi = at_zero.mean();
  const Eigen::VectorXd d = at_zero.array() - psi;
  return detail::finish(ws, EstimatorId::aipcw, TargetMode::refit, psi, d, 0, true);
}

}  // namespace twophase
