#include <cmath>

#include "common.hpp"

namespace twophase {

namespace {

// E(Q(a,W) | Delta=1, V) moved along a logistic submodel with covariate 1/Pi
// fit on phase 2, so its Delta/Pi-weighted residual mean is zero.
Eigen::VectorXd targeted_arm_mean(const detail::Workspace& ws, const Eigen::VectorXd& qa, const Eigen::VectorXd& pi) {
  const Eigen::VectorXd initial = ws.smoother.fit_predict(qa).unaryExpr([](double v) { return clip_prob(v); });
  const auto& rows = ws.phase2();
  const auto m = static_cast<Eigen::Index>(rows.size());
  Eigen::VectorXd y(m), offset(m), h(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const Eigen::Index i = rows[static_cast<std::size_t>(r)];
    y(r) = qa(i);
    offset(r) = logit(initial(i));
    h(r) = 1.0 / pi(i);
  }
  const double gamma = fit_fluctuation(y, offset, h, Eigen::VectorXd::Ones(m)).epsilon;
  Eigen::VectorXd out = initial;
  for (auto i : rows) out(i) = expit(logit(initial(i)) + gamma / pi(i));
  return out;
}

struct Check {
  double psi = 0.0;
  Eigen::VectorXd d;  // all four components
  double monitored = 0.0;  // |P_n (D_Q + D_Pi)|
};

Check evaluate(const detail::Workspace& ws, const detail::OutcomeFit& q, const Eigen::VectorXd& pi,
               const Eigen::VectorXd& resid_mean) {
  const Eigen::VectorXd arm1 = targeted_arm_mean(ws, q.q1, pi);
  const Eigen::VectorXd arm0 = targeted_arm_mean(ws, q.q0, pi);
  const Eigen::VectorXd contrast_mean = arm1 - arm0;
  const Eigen::VectorXd resid = detail::residual_term(ws, q);
  const Eigen::VectorXd contrast = detail::contrast(ws, q);

  Check c;
  c.psi = contrast_mean.mean();
  c.d.resize(ws.n);
  double monitored = 0.0;
  for (Eigen::Index i = 0; i < ws.n; ++i) {
    const double dl = ws.delta()(i);
    const double q_comp = dl * resid(i) / pi(i);
    const double pi_comp = -(dl - pi(i)) / pi(i) * resid_mean(i);
    const double gamma_comp = dl * (contrast(i) - contrast_mean(i)) / pi(i);
    c.d(i) = q_comp + pi_comp + gamma_comp + contrast_mean(i) - c.psi;
    monitored += q_comp + pi_comp;
  }
  c.monitored = std::abs(monitored / static_cast<double>(ws.n));
  return c;
}

}  // namespace

EstimateResult estimate_tmle_alt(const Dataset& ds, const NuisanceSet& ns, int max_outer_iter) {
  const detail::Workspace ws(ds, ns);
  detail::OutcomeFit q{ws.initial.q1, ws.initial.q0};
  Eigen::VectorXd pi = ws.initial.pi;

  Check best;
  best.monitored = INFINITY;
  for (int k = 0;; ++k) {
    const Eigen::VectorXd resid_mean = ws.smoother.fit_predict(detail::residual_term(ws, q));
    Check c = evaluate(ws, q, pi, resid_mean);
    const double threshold = score_threshold(eic_variance(c.d, c.psi).sigma2, ws.n);
    if (c.monitored <= threshold)
      return detail::finish(ws, EstimatorId::tmle_alt, TargetMode::refit, c.psi, c.d, k, true);
    if (c.monitored < best.monitored) best = std::move(c);
    if (k == max_outer_iter) break;

    detail::fluctuate_outcome(ws, q, pi);
    const Eigen::VectorXd refit = ws.smoother.fit_predict(detail::residual_term(ws, q));
    pi = detail::fluctuate_pi(ws, pi, refit.cwiseQuotient(pi));
  }
  return detail::finish(ws, EstimatorId::tmle_alt, TargetMode::refit, best.psi, best.d, max_outer_iter, false);
}

}  // namespace twophase
