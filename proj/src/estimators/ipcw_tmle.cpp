#include "common.hpp"

namespace twophase {

EstimateResult estimate_ipcw_tmle(const Dataset& ds, const NuisanceSet& ns) {
  const detail::Workspace ws(ds, ns);
  const Eigen::VectorXd& pi = ws.initial.pi;
  detail::OutcomeFit q{ws.initial.q1, ws.initial.q0};
  const FluctuationFit fit = detail::fluctuate_outcome(ws, q, pi);
  const double psi = detail::weighted_effect(ws, q, pi);

  // Weighted full-data score Delta/Pi (Dbar* - psi); zero off phase 2.
  const Eigen::VectorXd dbar = detail::dbar(ws, q);
  Eigen::VectorXd d = Eigen::VectorXd::Zero(ws.n);
  for (auto i : ws.phase2()) d(i) = (dbar(i) - psi) / pi(i);
  return detail::finish(ws, EstimatorId::ipcw_tmle, TargetMode::refit, psi, d, 1, fit.converged);
}

}  // namespace twophase
