#include <cmath>
#include <functional>

#include "common.hpp"

namespace twophase {

namespace {

// Given the centered m-bar after a Q step and the current Pi, returns the updated Pi.
using PiStep = std::function<Eigen::VectorXd(const Eigen::VectorXd& centered_mbar, const Eigen::VectorXd& pi)>;

EstimateResult alternate_targeting(const detail::Workspace& ws, EstimatorId id, TargetMode mode, int max_outer_iter,
                                   const PiStep& pi_step) {
  detail::OutcomeFit q{ws.initial.q1, ws.initial.q0};
  Eigen::VectorXd pi = ws.initial.pi;

  const Eigen::VectorXd mbar0 = ws.initial_mbar();
  Eigen::VectorXd mbar_slope;
  if (mode == TargetMode::linearized) {
    const LinearizedEic lin = linearized_slope(ws.ds, q.q1, q.q0, ws.g1(), Submodel::logistic);
    mbar_slope = ws.smoother.fit_predict(lin.slope);
  }
  // Successive Q steps share the covariate H, so their epsilons add up along one submodel.
  double eps_total = 0.0;
  bool updated = false;
  auto mbar_at = [&](const detail::OutcomeFit& fit) -> Eigen::VectorXd {
    if (!updated) return mbar0;
    if (mode == TargetMode::linearized) return mbar0 + eps_total * mbar_slope;
    return ws.smoother.fit_predict(detail::dbar(ws, fit));
  };

  struct Iterate {
    double psi = 0.0;
    Eigen::VectorXd d;
    double score = INFINITY;
  } best;

  for (int k = 0;; ++k) {
    const double psi = detail::weighted_effect(ws, q, pi);
    const Eigen::VectorXd d = observed_eic_values(ws.delta(), pi, detail::dbar(ws, q), mbar_at(q), psi);
    const double score = std::abs(d.mean());
    if (score < best.score) best = {psi, d, score};
    if (score <= score_threshold(eic_variance(d, psi).sigma2, ws.n))
      return detail::finish(ws, id, mode, psi, d, k, true);
    if (k == max_outer_iter) break;

    eps_total += detail::fluctuate_outcome(ws, q, pi).epsilon;
    updated = true;
    const double psi_next = detail::weighted_effect(ws, q, pi);
    const Eigen::VectorXd centered = mbar_at(q).array() - psi_next;
    pi = pi_step(centered, pi);
  }
  return detail::finish(ws, id, mode, best.psi, best.d, max_outer_iter, false);
}

}  // namespace

EstimateResult estimate_ipcw_tmle_target_pi(const Dataset& ds, const NuisanceSet& ns, TargetMode mode,
                                            int max_outer_iter) {
  const detail::Workspace ws(ds, ns);
  return alternate_targeting(ws, EstimatorId::ipcw_tmle_target_pi, mode, max_outer_iter,
                             [&ws](const Eigen::VectorXd& centered, const Eigen::VectorXd& pi) {
                               const Eigen::VectorXd covariate = centered.cwiseQuotient(pi);
                               return detail::fluctuate_pi(ws, pi, covariate);
                             });
}

EstimateResult estimate_ipcw_tmle_rake_pi(const Dataset& ds, const NuisanceSet& ns, int max_outer_iter) {
  const detail::Workspace ws(ds, ns);
  return alternate_targeting(ws, EstimatorId::ipcw_tmle_rake_pi, TargetMode::refit, max_outer_iter,
                             [&ws](const Eigen::VectorXd& centered, const Eigen::VectorXd& pi) {
                               return rake_weights(centered, pi, ws.delta()).pi_star;
                             });
}

}  // namespace twophase
