#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace twophase {

enum class Family { gaussian, bernoulli };

class GlmError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Probability clip used wherever a probability is pushed through logit.
inline constexpr double kProbFloor = 1e-6;

template <typename Scalar>
Scalar expit(Scalar x) {
  using std::exp;
  return x >= Scalar(0) ? Scalar(1) / (Scalar(1) + exp(-x)) : exp(x) / (Scalar(1) + exp(x));
}

template <typename Scalar>
Scalar logit(Scalar p) {
  using std::log;
  const Scalar c = std::clamp(p, Scalar(1e-12), Scalar(1) - Scalar(1e-12));
  return log(c / (Scalar(1) - c));
}

template <typename Scalar>
Scalar clip_prob(Scalar p, Scalar floor = Scalar(kProbFloor)) {
  return std::clamp(p, floor, Scalar(1) - floor);
}

template <typename Scalar>
struct GlmFitT {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Vector coefficients;
  Family family = Family::gaussian;
  bool converged = false;
  int n_iter = 0;
  Eigen::Index feature_dim = 0;
  // Set when the ridge fallback was needed; the fit then solves a penalized score.
  bool ridge = false;

  template <typename Derived>
  Vector predict(const Eigen::MatrixBase<Derived>& X) const {
    Vector eta = X * coefficients;
    if (family == Family::gaussian) return eta;
    return eta.unaryExpr([](Scalar e) { return clip_prob(expit(e)); });
  }
};

using GlmFit = GlmFitT<double>;

namespace detail {

// Minimizes ||diag(s)(X b - z)||^2 (+ lambda ||b||^2 when lambda > 0).
template <typename Scalar>
bool weighted_lstsq(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& X,
                    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& s,
                    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& z, Scalar lambda,
                    Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& beta) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index p = X.cols();
  Matrix A = s.asDiagonal() * X;
  Vector b = s.cwiseProduct(z);
  if (lambda > Scalar(0)) {
    Matrix aug(A.rows() + p, p);
    aug << A, Matrix::Identity(p, p) * std::sqrt(lambda);
    Vector rhs(A.rows() + p);
    rhs << b, Vector::Zero(p);
    Eigen::ColPivHouseholderQR<Matrix> qr(aug);
    if (qr.rank() < p) return false;
    beta = qr.solve(rhs);
    return beta.allFinite();
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(A);
  if (qr.rank() < p) return false;
  beta = qr.solve(b);
  return beta.allFinite();
}

template <typename Scalar>
Scalar ridge_penalty(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& X,
                     const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& s) {
  const Scalar trace = (s.asDiagonal() * X).squaredNorm();
  const Scalar lambda = Scalar(1e-8) * trace / Scalar(X.cols());
  return lambda > Scalar(0) ? lambda : Scalar(1e-8);
}

}  // namespace detail

// Weighted GLM by iteratively reweighted least squares. Bernoulli responses may
// be fractional (quasi-binomial). Rank deficiency or separation switches to a
// ridge-penalized fit with penalty 1e-8 * trace(X'WX) / dim.
template <typename DX, typename DY, typename DW>
GlmFitT<typename DX::Scalar> fit_glm(const Eigen::MatrixBase<DX>& X_in, const Eigen::MatrixBase<DY>& y_in,
                                     const Eigen::MatrixBase<DW>& w_in, Family family) {
  using Scalar = typename DX::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Matrix X = X_in;
  const Vector y = y_in;
  const Vector w = w_in;
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (y.size() != n || w.size() != n) throw GlmError("fit_glm: dimension mismatch");
  if (p == 0) throw GlmError("fit_glm: empty design");
  if (!X.allFinite() || !y.allFinite() || !w.allFinite()) throw GlmError("fit_glm: non-finite input");
  if ((w.array() < Scalar(0)).any()) throw GlmError("fit_glm: negative weight");
  if (!(w.array() > Scalar(0)).any()) throw GlmError("fit_glm: no positive weight");
  if (family == Family::bernoulli && ((y.array() < Scalar(0)) || (y.array() > Scalar(1))).any())
    throw GlmError("fit_glm: bernoulli response outside [0,1]");

  GlmFitT<Scalar> fit;
  fit.family = family;
  fit.feature_dim = p;
  fit.coefficients = Vector::Zero(p);
  Scalar lambda = 0;

  if (family == Family::gaussian) {
    const Vector s = w.cwiseSqrt();
    if (!detail::weighted_lstsq<Scalar>(X, s, y, Scalar(0), fit.coefficients)) {
      lambda = detail::ridge_penalty<Scalar>(X, s);
      fit.ridge = true;
      if (!detail::weighted_lstsq<Scalar>(X, s, y, lambda, fit.coefficients))
        throw GlmError("fit_glm: design singular even after ridge fallback");
    }
    fit.converged = true;
    fit.n_iter = 1;
    return fit;
  }

  Vector beta = Vector::Zero(p);
  constexpr int kMaxIter = 100;
  constexpr Scalar kSeparationEta = 30;
  int extreme_steps = 0;
  for (int it = 1; it <= kMaxIter; ++it) {
    const Vector eta = X * beta;
    Vector mu(n), var(n), z(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      mu(i) = expit(eta(i));
      var(i) = std::max(mu(i) * (Scalar(1) - mu(i)), Scalar(1e-12));
      z(i) = eta(i) + (y(i) - mu(i)) / var(i);
    }
    const Vector s = (w.array() * var.array()).sqrt().matrix();
    Vector next;
    bool ok = detail::weighted_lstsq<Scalar>(X, s, z, lambda, next);
    if (!ok && lambda == Scalar(0)) {
      lambda = detail::ridge_penalty<Scalar>(X, s);
      fit.ridge = true;
      ok = detail::weighted_lstsq<Scalar>(X, s, z, lambda, next);
    }
    if (!ok) throw GlmError("fit_glm: weighted Gram matrix singular even after ridge fallback");
    extreme_steps = (X * next).cwiseAbs().maxCoeff() > kSeparationEta ? extreme_steps + 1 : 0;
    if (lambda == Scalar(0) && extreme_steps >= 3) {
      // Fitted probabilities stuck this extreme mean (quasi-)separation; the MLE runs off to infinity.
      lambda = detail::ridge_penalty<Scalar>(X, s);
      fit.ridge = true;
      ok = detail::weighted_lstsq<Scalar>(X, s, z, lambda, next);
      if (!ok) throw GlmError("fit_glm: ridge fallback failed");
    }
    const Scalar change =
        ((next - beta).array().abs() / beta.array().abs().max(Scalar(1))).maxCoeff();
    beta = next;
    fit.n_iter = it;
    if (change <= Scalar(1e-10)) {
      fit.converged = true;
      break;
    }
  }
  fit.coefficients = beta;
  return fit;
}

struct FluctuationFit {
  double epsilon = 0.0;
  bool converged = true;
  int n_iter = 0;
  double score = 0.0;
};

// Solves sum_i w_i h_i (y_i - expit(offset_i + eps h_i)) = 0 for eps by
// safeguarded Newton on the bracket [-20, 20].
FluctuationFit fit_fluctuation(const Eigen::Ref<const Eigen::VectorXd>& y,
                               const Eigen::Ref<const Eigen::VectorXd>& offset_logit,
                               const Eigen::Ref<const Eigen::VectorXd>& h,
                               const Eigen::Ref<const Eigen::VectorXd>& w, double tol = 1e-8);

}  // namespace twophase
