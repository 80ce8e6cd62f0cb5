#include <cmath>

#include "common.hpp"

namespace twophase {

namespace {

struct Evaluation {
  double f = 0.0;  // the weighted-residual equation after substituting gamma(eps)
  double gamma = 0.0;
  double psi = 0.0;
  detail::OutcomeFit q;
  Eigen::VectorXd dbar;
  Eigen::VectorXd mbar;  // m-bar_eps, before the gamma shift
};

class QuasiSystem {
 public:
  QuasiSystem(const detail::Workspace& ws, TargetMode mode) : ws_(ws), mode_(mode), pi_(ws.initial.pi) {
    start_ = {ws.initial.q1, ws.initial.q0};
    mbar0_ = ws.initial_mbar();
    if (mode == TargetMode::linearized) {
      const LinearizedEic lin = linearized_slope(ws.ds, start_.q1, start_.q0, ws.g1(), Submodel::logistic);
      slope_ = ws.smoother.fit_predict(lin.slope);
    }
    const Eigen::ArrayXd ipw = ws.delta().array() / pi_.array();
    mean_ipw_ = ipw.mean();
    mean_ipw_sq_ = (ipw / pi_.array()).mean();
  }

  Evaluation at(double eps) const {
    Evaluation e;
    e.q = detail::shift_outcome(ws_, start_, eps);
    e.dbar = detail::dbar(ws_, e.q);
    if (eps == 0.0) {
      e.mbar = mbar0_;
    } else if (mode_ == TargetMode::linearized) {
      e.mbar = mbar0_ + eps * slope_;
    } else {
      e.mbar = ws_.smoother.fit_predict(e.dbar);
    }
    e.psi = detail::weighted_effect(ws_, e.q, pi_);
    e.gamma = (e.psi - e.mbar.mean()) / mean_ipw_;
    double resid = 0.0;
    for (auto i : ws_.phase2()) resid += (e.dbar(i) - e.mbar(i)) / pi_(i);
    e.f = resid / static_cast<double>(ws_.n) - e.gamma * mean_ipw_sq_;
    return e;
  }

  Eigen::VectorXd eic(const Evaluation& e) const {
    const Eigen::VectorXd shifted = e.mbar + e.gamma * ws_.delta().cwiseQuotient(pi_);
    return observed_eic_values(ws_.delta(), pi_, e.dbar, shifted, e.psi);
  }

  const detail::OutcomeFit& start() const { return start_; }

 private:
  const detail::Workspace& ws_;
  TargetMode mode_;
  const Eigen::VectorXd& pi_;
  detail::OutcomeFit start_;
  Eigen::VectorXd mbar0_;
  Eigen::VectorXd slope_;
  double mean_ipw_ = 0.0;
  double mean_ipw_sq_ = 0.0;
};

constexpr double kEquationTol = 1e-12;
constexpr double kBracket = 10.0;
constexpr int kMaxIter = 100;

}  // namespace

EstimateResult estimate_quasi_tmle(const Dataset& ds, const NuisanceSet& ns, TargetMode mode) {
  const detail::Workspace ws(ds, ns);
  const QuasiSystem system(ws, mode);

  Evaluation prev = system.at(0.0);
  double eps_prev = 0.0;
  auto done = [&](const Evaluation& e, int iterations, bool converged) {
    return detail::finish(ws, EstimatorId::quasi_tmle, mode, e.psi, system.eic(e), iterations, converged);
  };
  if (std::abs(prev.f) <= kEquationTol) return done(prev, 0, true);

  // Secant started from 0 and the plain Q-fluctuation root.
  detail::OutcomeFit tmp = system.start();
  double eps = detail::fluctuate_outcome(ws, tmp, ws.initial.pi).epsilon;
  if (eps == 0.0) eps = 1e-3;
  eps = std::clamp(eps, -kBracket, kBracket);
  Evaluation cur = system.at(eps);
  int it = 1;
  for (; it <= kMaxIter; ++it) {
    if (std::abs(cur.f) <= kEquationTol) return done(cur, it, true);
    const double denom = cur.f - prev.f;
    if (denom == 0.0 || !std::isfinite(denom)) break;
    const double next = eps - cur.f * (eps - eps_prev) / denom;
    if (!std::isfinite(next) || std::abs(next) > kBracket) break;
    if (std::abs(next - eps) <= 1e-15 * (1.0 + std::abs(eps))) return done(cur, it, std::abs(cur.f) <= 1e-8);
    eps_prev = eps;
    prev = std::move(cur);
    eps = next;
    cur = system.at(eps);
  }

  // Bisection fallback over the whole bracket.
  double lo = -kBracket, hi = kBracket;
  Evaluation f_lo = system.at(lo);
  const Evaluation f_hi = system.at(hi);
  if (!(f_lo.f * f_hi.f < 0.0)) return done(std::abs(cur.f) < std::abs(prev.f) ? cur : prev, it, false);
  Evaluation mid;
  for (int b = 0; b < 200; ++b) {
    const double m = 0.5 * (lo + hi);
    mid = system.at(m);
    if (std::abs(mid.f) <= kEquationTol || hi - lo <= 1e-14) return done(mid, it + b + 1, true);
    if ((mid.f < 0.0) == (f_lo.f < 0.0)) {
      lo = m;
      f_lo = mid;
    } else {
      hi = m;
    }
  }
  return done(mid, it + 200, std::abs(mid.f) <= 1e-8);
}

}  // namespace twophase
