#include "common.hpp"

namespace twophase {

EstimateResult estimate_eee(const Dataset& ds, const NuisanceSet& ns) {
  const detail::Workspace ws(ds, ns);
  const Eigen::VectorXd& pi = ws.initial.pi;
  const Eigen::VectorXd dbar = detail::dbar(ws, {ws.initial.q1, ws.initial.q0});
  Eigen::VectorXd mbar = ws.initial_mbar();

  // Intercept shift of m-bar solving P_n{Delta/Pi (Dbar - mbar - shift)} = 0.
  double num = 0.0, den = 0.0;
  for (auto i : ws.phase2()) {
    num += (dbar(i) - mbar(i)) / pi(i);
    den += 1.0 / pi(i);
  }
  mbar.array() += num / den;
  const double psi = mbar.mean();
  const Eigen::VectorXd d = observed_eic_values(ws.delta(), pi, dbar, mbar, psi);
  return detail::finish(ws, EstimatorId::eee, TargetMode::refit, psi, d, 1, true);
}

}  // namespace twophase
