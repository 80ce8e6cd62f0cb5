#include "common.hpp"

#include <cmath>

namespace twophase::detail {

void require_unit_outcome(const Dataset& ds) {
  if ((ds.y().array() < 0.0).any() || (ds.y().array() > 1.0).any())
    throw std::invalid_argument("estimators need the outcome on [0,1]; apply scale_outcome first");
}

Workspace::Workspace(const Dataset& ds_in, const NuisanceSet& ns_in)
    : ds(ds_in), ns(ns_in), n(ds_in.size()), initial(evaluate_nuisances(ds_in, ns_in)),
      smoother(ds_in, ns_in.mbar_learner) {
  require_unit_outcome(ds);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(initial.pi(i) > 0.0)) throw std::invalid_argument("Pi must be positive on every record");
  }
}

Eigen::VectorXd Workspace::initial_mbar() const {
  if (ns.mbar) return ns.mbar->predict(ds);
  return smoother.fit_predict(dbar(*this, {initial.q1, initial.q0}));
}

Eigen::VectorXd dbar(const Workspace& ws, const OutcomeFit& q) {
  return uncentered_fulldata_eic(ws.ds, q.q1, q.q0, ws.g1());
}

Eigen::VectorXd contrast(const Workspace& ws, const OutcomeFit& q) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(ws.n);
  for (auto i : ws.phase2()) c(i) = q.q1(i) - q.q0(i);
  return c;
}

Eigen::VectorXd residual_term(const Workspace& ws, const OutcomeFit& q) {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(ws.n);
  for (auto i : ws.phase2()) {
    const int a = static_cast<int>(ws.ds.a()(i));
    const double qa = a == 1 ? q.q1(i) : q.q0(i);
    r(i) = clever_covariate(a, ws.g1()(i)) * (ws.ds.y()(i) - qa);
  }
  return r;
}

OutcomeFit shift_outcome(const Workspace& ws, const OutcomeFit& q, double eps) {
  OutcomeFit out = q;
  if (eps == 0.0) return out;
  for (auto i : ws.phase2()) {
    const double g = ws.g1()(i);
    out.q1(i) = clip_prob(expit(logit(clip_prob(q.q1(i))) + eps / g));
    out.q0(i) = clip_prob(expit(logit(clip_prob(q.q0(i))) - eps / (1.0 - g)));
  }
  return out;
}

FluctuationFit fluctuate_outcome(const Workspace& ws, OutcomeFit& q, const Eigen::VectorXd& pi) {
  const auto& p2 = ws.phase2();
  const auto m = static_cast<Eigen::Index>(p2.size());
  Eigen::VectorXd y(m), offset(m), h(m), w(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const Eigen::Index i = p2[static_cast<std::size_t>(r)];
    const int a = static_cast<int>(ws.ds.a()(i));
    y(r) = ws.ds.y()(i);
    offset(r) = logit(clip_prob(a == 1 ? q.q1(i) : q.q0(i)));
    h(r) = clever_covariate(a, ws.g1()(i));
    w(r) = 1.0 / pi(i);
  }
  FluctuationFit fit = fit_fluctuation(y, offset, h, w);
  q = shift_outcome(ws, q, fit.epsilon);
  return fit;
}

Eigen::VectorXd fluctuate_pi(const Workspace& ws, const Eigen::VectorXd& pi, const Eigen::VectorXd& covariate,
                             FluctuationFit* fit_out) {
  // Records with pi = 1 carry no Pi score (Delta - Pi = 0 there) and stay fixed.
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < ws.n; ++i) {
    if (pi(i) < 1.0) rows.push_back(i);
  }
  Eigen::VectorXd out = pi;
  if (rows.empty()) {
    if (fit_out) *fit_out = FluctuationFit{};
    return out;
  }
  const auto m = static_cast<Eigen::Index>(rows.size());
  Eigen::VectorXd y(m), offset(m), h(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const Eigen::Index i = rows[static_cast<std::size_t>(r)];
    y(r) = ws.delta()(i);
    offset(r) = logit(clip_prob(pi(i)));
    h(r) = covariate(i);
  }
  const FluctuationFit fit = fit_fluctuation(y, offset, h, Eigen::VectorXd::Ones(m));
  const Bounds& t = ws.ns.trunc_pi;
  for (Eigen::Index r = 0; r < m; ++r) {
    const Eigen::Index i = rows[static_cast<std::size_t>(r)];
    out(i) = std::clamp(expit(offset(r) + fit.epsilon * h(r)), t.lo, t.hi);
  }
  if (fit_out) *fit_out = fit;
  return out;
}

double weighted_effect(const Workspace& ws, const OutcomeFit& q, const Eigen::VectorXd& pi) {
  double num = 0.0, den = 0.0;
  for (auto i : ws.phase2()) {
    num += (q.q1(i) - q.q0(i)) / pi(i);
    den += 1.0 / pi(i);
  }
  return num / den;
}

EstimateResult finish(const Workspace& ws, EstimatorId id, TargetMode mode, double psi, const Eigen::VectorXd& eic,
                      int iterations, bool converged) {
  const double scale = ws.ds.effect_scale();
  const EicSummary s = eic_variance(eic, psi);
  EstimateResult r;
  r.estimator_id = id;
  r.mode = mode;
  r.psi_hat = psi * scale;
  r.se = s.se * scale;
  r.ci_lo = r.psi_hat - 1.96 * r.se;
  r.ci_hi = r.psi_hat + 1.96 * r.se;
  r.eic_mean_abs = std::abs(eic.mean()) * scale;
  r.score_threshold = score_threshold(s.sigma2, ws.n) * scale;
  r.n_outer_iterations = iterations;
  r.converged = converged;
  return r;
}

}  // namespace twophase::detail
