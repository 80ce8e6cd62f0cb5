#include "twophase/rake.hpp"

#include <cmath>
#include <limits>

namespace twophase {

namespace {

struct Eval {
  double f = 0.0;
  double df = 0.0;
};

Eval evaluate(const Eigen::VectorXd& m, const Eigen::VectorXd& pi, const Eigen::VectorXd& delta, double target,
              double lambda) {
  Eval e{-target, 0.0};
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    if (delta(i) != 1.0 || m(i) == 0.0) continue;
    const double t = std::exp(-lambda * m(i)) * m(i) / pi(i);
    e.f += t;
    e.df -= t * m(i);
  }
  return e;
}

}  // namespace

double rake_constraint(const Eigen::VectorXd& mbar, const Eigen::VectorXd& pi, const Eigen::VectorXd& delta,
                       double lambda) {
  return evaluate(mbar, pi, delta, mbar.sum(), lambda).f;
}

RakeSolution rake_weights(const Eigen::VectorXd& mbar, const Eigen::VectorXd& pi, const Eigen::VectorXd& delta,
                          double tol) {
  const Eigen::Index n = mbar.size();
  if (pi.size() != n || delta.size() != n) throw RakeError("rake_weights: dimension mismatch");
  if (!mbar.allFinite()) throw RakeError("rake_weights: non-finite calibration variable");
  const double target = mbar.sum();

  bool pos = false, neg = false;
  double scale = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (delta(i) != 1.0) continue;
    if (!(pi(i) > 0.0)) throw RakeError("rake_weights: phase-2 probability must be positive");
    pos |= mbar(i) > 0.0;
    neg |= mbar(i) < 0.0;
    scale = std::max(scale, std::abs(mbar(i)));
  }

  RakeSolution sol;
  auto finish = [&](double lambda, double residual, bool converged) {
    sol.lambda = lambda;
    sol.constraint_residual = residual;
    sol.converged = converged;
    sol.a = (-lambda * mbar.array()).exp().matrix();
    sol.pi_star = pi.cwiseQuotient(sol.a);
    return sol;
  };

  Eval cur = evaluate(mbar, pi, delta, target, 0.0);
  if (std::abs(cur.f) < tol) return finish(0.0, cur.f, true);
  if (!pos && !neg) throw RakeError("rake_weights: calibration variable is zero on phase 2 but the target is not");

  // F decreases in lambda; its limits decide whether a root exists.
  constexpr double inf = std::numeric_limits<double>::infinity();
  const double f_minus_inf = pos ? inf : -target;
  const double f_plus_inf = neg ? -inf : -target;
  if (!(f_minus_inf > 0.0 && f_plus_inf < 0.0)) throw RakeError("rake_weights: calibration constraint is infeasible");

  double lambda = 0.0;
  double lo = -inf, hi = inf;  // F(lo) > 0 > F(hi)
  const double max_step = 10.0 / scale;
  for (int it = 1; it <= 200; ++it) {
    if (cur.f > 0.0) {
      lo = lambda;
    } else {
      hi = lambda;
    }
    if (std::abs(cur.df) < 1e-14) throw RakeError("rake_weights: no progress, gradient vanished");
    double next = lambda - cur.f / cur.df;
    if (std::abs(next - lambda) > max_step) next = lambda + std::copysign(max_step, next - lambda);
    if (!(next > lo && next < hi)) next = std::isfinite(lo) && std::isfinite(hi) ? 0.5 * (lo + hi) : next;
    if (!(next > lo && next < hi)) next = std::isfinite(lo) ? lo + max_step : hi - max_step;
    lambda = next;
    cur = evaluate(mbar, pi, delta, target, lambda);
    sol.iterations = it;
    if (std::abs(cur.f) < tol) return finish(lambda, cur.f, true);
    if (std::isfinite(lo) && std::isfinite(hi) && hi - lo <= 1e-15 * (1.0 + std::abs(lambda))) break;
  }
  return finish(lambda, cur.f, std::abs(cur.f) < tol);
}

}  // namespace twophase
