#include "twophase/glm.hpp"

namespace twophase {

namespace {

struct ScoreEval {
  double score = 0.0;
  double slope = 0.0;
};

ScoreEval fluctuation_score(const Eigen::Ref<const Eigen::VectorXd>& y, const Eigen::Ref<const Eigen::VectorXd>& offset,
                            const Eigen::Ref<const Eigen::VectorXd>& h, const Eigen::Ref<const Eigen::VectorXd>& w,
                            double eps) {
  ScoreEval out;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (w(i) == 0.0 || h(i) == 0.0) continue;
    const double p = expit(offset(i) + eps * h(i));
    out.score += w(i) * h(i) * (y(i) - p);
    out.slope -= w(i) * h(i) * h(i) * p * (1.0 - p);
  }
  return out;
}

}  // namespace

FluctuationFit fit_fluctuation(const Eigen::Ref<const Eigen::VectorXd>& y,
                               const Eigen::Ref<const Eigen::VectorXd>& offset_logit,
                               const Eigen::Ref<const Eigen::VectorXd>& h, const Eigen::Ref<const Eigen::VectorXd>& w,
                               double tol) {
  const Eigen::Index n = y.size();
  if (offset_logit.size() != n || h.size() != n || w.size() != n)
    throw GlmError("fit_fluctuation: dimension mismatch");
  if (!offset_logit.allFinite() || !h.allFinite() || !w.allFinite() || !y.allFinite())
    throw GlmError("fit_fluctuation: non-finite input");
  if ((w.array() < 0.0).any()) throw GlmError("fit_fluctuation: negative weight");

  FluctuationFit fit;
  if ((w.array() * h.array().square()).sum() == 0.0) return fit;
  const ScoreEval at_zero = fluctuation_score(y, offset_logit, h, w, 0.0);
  fit.score = at_zero.score;
  if (std::abs(at_zero.score) <= tol) return fit;

  // The score is non-increasing in eps, so a root sits between a point with
  // positive score (lo) and one with negative score (hi).
  constexpr double kBracket = 20.0;
  double lo = -kBracket, hi = kBracket;
  const double s_lo = fluctuation_score(y, offset_logit, h, w, lo).score;
  const double s_hi = fluctuation_score(y, offset_logit, h, w, hi).score;
  if (s_lo < -tol || s_hi > tol) throw GlmError("fit_fluctuation: degenerate fluctuation, no root in [-20, 20]");
  if (std::abs(s_lo) <= tol) return {lo, true, 0, s_lo};
  if (std::abs(s_hi) <= tol) return {hi, true, 0, s_hi};

  double eps = 0.0;
  ScoreEval cur = at_zero;
  for (int it = 1; it <= 200; ++it) {
    if (cur.score > 0.0) {
      lo = eps;
    } else {
      hi = eps;
    }
    double next = cur.slope < 0.0 ? eps - cur.score / cur.slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const bool stalled = next == eps;
    eps = next;
    cur = fluctuation_score(y, offset_logit, h, w, eps);
    fit.n_iter = it;
    fit.epsilon = eps;
    fit.score = cur.score;
    if (std::abs(cur.score) <= tol || stalled || hi - lo <= 1e-15 * (1.0 + std::abs(eps))) {
      // One more Newton step is nearly free and lands at machine precision.
      if (cur.slope < 0.0) {
        const double polish = eps - cur.score / cur.slope;
        const ScoreEval p = fluctuation_score(y, offset_logit, h, w, polish);
        if (std::abs(p.score) < std::abs(cur.score)) {
          fit.epsilon = polish;
          fit.score = p.score;
        }
      }
      fit.converged = std::abs(fit.score) <= tol;
      return fit;
    }
  }
  fit.converged = std::abs(fit.score) <= tol;
  return fit;
}

}  // namespace twophase
