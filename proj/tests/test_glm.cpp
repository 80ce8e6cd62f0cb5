#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "twophase/glm.hpp"
#include "twophase/rng.hpp"

using namespace twophase;

namespace {

struct Problem {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Eigen::VectorXd w;
};

Problem logistic_problem(std::uint64_t seed, Eigen::Index n, bool fractional = false) {
  Philox rng(seed, 3);
  Problem p{Eigen::MatrixXd(n, 3), Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    p.X(i, 0) = 1.0;
    p.X(i, 1) = rng.normal();
    p.X(i, 2) = rng.uniform() * 2.0 - 1.0;
    const double mu = expit(-0.3 + 0.8 * p.X(i, 1) - 1.1 * p.X(i, 2));
    p.y(i) = fractional ? mu * rng.uniform() : (rng.bernoulli(mu) ? 1.0 : 0.0);
    p.w(i) = 0.5 + rng.uniform() * 3.0;
  }
  return p;
}

// Plain Newton-Raphson on the weighted log-likelihood, written out longhand.
Eigen::VectorXd newton_logistic(const Problem& p) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p.X.cols());
  for (int it = 0; it < 60; ++it) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(b.size());
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(b.size(), b.size());
    for (Eigen::Index i = 0; i < p.X.rows(); ++i) {
      const Eigen::VectorXd x = p.X.row(i).transpose();
      const double mu = 1.0 / (1.0 + std::exp(-x.dot(b)));
      grad += p.w(i) * (p.y(i) - mu) * x;
      hess += p.w(i) * mu * (1.0 - mu) * x * x.transpose();
    }
    b += hess.ldlt().solve(grad);
  }
  return b;
}

}  // namespace

TEST_CASE("gaussian fit matches weighted normal equations") {
  Philox rng(11, 0);
  const Eigen::Index n = 40;
  Eigen::MatrixXd X(n, 3);
  Eigen::VectorXd y(n), w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X.row(i) << 1.0, rng.normal(), rng.normal();
    y(i) = 2.0 - X(i, 1) + 0.5 * X(i, 2) + rng.normal();
    w(i) = 1.0 + rng.uniform();
  }
  const Eigen::MatrixXd xtwx = X.transpose() * w.asDiagonal() * X;
  const Eigen::VectorXd expected = xtwx.ldlt().solve(X.transpose() * w.asDiagonal() * y);
  const GlmFit fit = fit_glm(X, y, w, Family::gaussian);
  CHECK(fit.converged);
  CHECK_FALSE(fit.ridge);
  CHECK((fit.coefficients - expected).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((fit.predict(X) - X * expected).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("logistic fit agrees with a longhand Newton solver") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Problem p = logistic_problem(seed, 300);
    const GlmFit fit = fit_glm(p.X, p.y, p.w, Family::bernoulli);
    CHECK(fit.converged);
    CHECK((fit.coefficients - newton_logistic(p)).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("logistic score equations vanish at the fit, fractional responses included") {
  for (bool fractional : {false, true}) {
    const Problem p = logistic_problem(9, 250, fractional);
    const GlmFit fit = fit_glm(p.X, p.y, p.w, Family::bernoulli);
    Eigen::VectorXd score = Eigen::VectorXd::Zero(3);
    for (Eigen::Index i = 0; i < p.X.rows(); ++i)
      score += p.w(i) * (p.y(i) - expit(p.X.row(i).dot(fit.coefficients))) * p.X.row(i).transpose();
    CHECK(score.cwiseAbs().maxCoeff() < 1e-8 * p.w.sum());
  }
}

TEST_CASE("zero weights drop rows") {
  Problem p = logistic_problem(4, 200);
  Eigen::VectorXd w = p.w;
  w.tail(100).setZero();
  const GlmFit with_zero = fit_glm(p.X, p.y, w, Family::bernoulli);
  const Problem head{p.X.topRows(100), p.y.head(100), p.w.head(100)};
  const GlmFit trimmed = fit_glm(head.X, head.y, head.w, Family::bernoulli);
  CHECK((with_zero.coefficients - trimmed.coefficients).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("rank-deficient design falls back to ridge") {
  Problem p = logistic_problem(5, 100);
  Eigen::MatrixXd X(p.X.rows(), 4);
  X << p.X, p.X.col(1) * 2.0;
  const GlmFit fit = fit_glm(X, p.y, p.w, Family::bernoulli);
  CHECK(fit.ridge);
  CHECK(fit.coefficients.allFinite());
  // Duplicated columns share the signal in proportion to their scale.
  CHECK(fit.coefficients(3) == doctest::Approx(2.0 * fit.coefficients(1)).epsilon(1e-4));
}

TEST_CASE("perfect separation yields a finite ridge fit") {
  const Eigen::Index n = 40;
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = static_cast<double>(i) - 19.5;
    y(i) = i >= 20 ? 1.0 : 0.0;
  }
  const GlmFit fit = fit_glm(X, y, Eigen::VectorXd::Ones(n), Family::bernoulli);
  CHECK(fit.ridge);
  CHECK(fit.coefficients.allFinite());
  const Eigen::VectorXd mu = fit.predict(X);
  CHECK(mu(0) < 0.01);
  CHECK(mu(n - 1) > 0.99);
}

TEST_CASE("predictions are clipped away from 0 and 1") {
  GlmFit fit;
  fit.family = Family::bernoulli;
  fit.coefficients = Eigen::VectorXd::Constant(1, 100.0);
  const Eigen::MatrixXd X = Eigen::MatrixXd::Ones(2, 1);
  CHECK(fit.predict(X)(0) == 1.0 - kProbFloor);
  fit.coefficients(0) = -100.0;
  CHECK(fit.predict(X)(0) == kProbFloor);
}

TEST_CASE("invalid inputs are rejected") {
  const Eigen::MatrixXd X = Eigen::MatrixXd::Ones(3, 1);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(3);
  CHECK_THROWS_AS(fit_glm(X, Eigen::VectorXd::Ones(2), ones, Family::gaussian), GlmError);
  CHECK_THROWS_AS(fit_glm(X, Eigen::VectorXd::Constant(3, 1.5), ones, Family::bernoulli), GlmError);
  CHECK_THROWS_AS(fit_glm(X, ones, -ones, Family::gaussian), GlmError);
  CHECK_THROWS_AS(fit_glm(X, ones, Eigen::VectorXd::Zero(3), Family::gaussian), GlmError);
}

TEST_CASE("single-precision instantiation tracks the double fit") {
  const Problem p = logistic_problem(6, 200);
  const GlmFit d = fit_glm(p.X, p.y, p.w, Family::bernoulli);
  const auto f = fit_glm(p.X.cast<float>(), p.y.cast<float>(), p.w.cast<float>(), Family::bernoulli);
  CHECK((f.coefficients.cast<double>() - d.coefficients).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("expit and logit are inverse and stable in the tails") {
  for (double x : {-700.0, -30.0, -1.0, 0.0, 0.5, 30.0, 700.0}) {
    CHECK(std::isfinite(expit(x)));
    if (std::abs(x) <= 20) CHECK(logit(expit(x)) == doctest::Approx(x).epsilon(1e-10));
  }
  CHECK(expit(0.0) == 0.5);
}

TEST_CASE("fluctuation solves its score equation") {
  const Problem p = logistic_problem(7, 300);
  Philox rng(7, 9);
  Eigen::VectorXd offset(300), h(300);
  for (Eigen::Index i = 0; i < 300; ++i) {
    offset(i) = 0.3 * rng.normal();
    h(i) = 0.5 + rng.uniform();
  }
  const FluctuationFit fit = fit_fluctuation(p.y, offset, h, p.w);
  CHECK(fit.converged);
  double score = 0.0;
  for (Eigen::Index i = 0; i < 300; ++i)
    score += p.w(i) * h(i) * (p.y(i) - expit(offset(i) + fit.epsilon * h(i)));
  CHECK(std::abs(score) < 1e-6);
}

TEST_CASE("fluctuation with unit covariate and constant offset moves to the weighted mean") {
  const Eigen::VectorXd y = (Eigen::VectorXd(4) << 1, 0, 1, 1).finished();
  const Eigen::VectorXd w = (Eigen::VectorXd(4) << 1, 2, 1, 0.5).finished();
  const double ybar = (1 + 1 + 0.5) / 4.5;
  const FluctuationFit fit = fit_fluctuation(y, Eigen::VectorXd::Constant(4, 0.2), Eigen::VectorXd::Ones(4), w);
  CHECK(fit.epsilon == doctest::Approx(std::log(ybar / (1 - ybar)) - 0.2).epsilon(1e-9));
}
