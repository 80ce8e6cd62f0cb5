#pragma once

// Full-data (no coarsening) estimators written out longhand, used as oracles
// for the two-phase estimators when every record is in phase 2 with Pi = 1.

#include <Eigen/Dense>

#include <cmath>

#include "twophase/data.hpp"

namespace reference {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Newton-Raphson logistic regression, iterated to machine precision.
inline Eigen::VectorXd logistic_mle(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(X.cols());
  for (int it = 0; it < 100; ++it) {
    const Eigen::VectorXd mu = (X * b).unaryExpr(&sigmoid);
    const Eigen::VectorXd v = mu.array() * (1.0 - mu.array());
    const Eigen::MatrixXd info = X.transpose() * v.asDiagonal() * X;
    const Eigen::VectorXd step = info.ldlt().solve(X.transpose() * (y - mu));
    b += step;
    if (step.cwiseAbs().maxCoeff() < 1e-14) break;
  }
  return b;
}

struct FullDataFit {
  Eigen::VectorXd q1, q0, qa, g1;
};

// Main-term logistic Q on (A, W1, W2) and g on (W1, W2).
inline FullDataFit fit_full_data(const twophase::Dataset& ds) {
  const Eigen::Index n = ds.size(), d1 = ds.w1_dim(), d2 = ds.w2_dim();
  Eigen::MatrixXd W(n, d1 + d2);
  W << ds.w1(), ds.w2();
  Eigen::MatrixXd Xq(n, 2 + d1 + d2), Xg(n, 1 + d1 + d2);
  Xq << Eigen::VectorXd::Ones(n), ds.a(), W;
  Xg << Eigen::VectorXd::Ones(n), W;
  const Eigen::VectorXd bq = logistic_mle(Xq, ds.y());
  const Eigen::VectorXd bg = logistic_mle(Xg, ds.a());
  FullDataFit f;
  Eigen::MatrixXd X1 = Xq, X0 = Xq;
  X1.col(1).setOnes();
  X0.col(1).setZero();
  f.q1 = (X1 * bq).unaryExpr(&sigmoid);
  f.q0 = (X0 * bq).unaryExpr(&sigmoid);
  f.qa = (Xq * bq).unaryExpr(&sigmoid);
  f.g1 = (Xg * bg).unaryExpr(&sigmoid);
  return f;
}

inline Eigen::VectorXd clever(const twophase::Dataset& ds, const Eigen::VectorXd& g1) {
  return (ds.a().array() / g1.array() - (1.0 - ds.a().array()) / (1.0 - g1.array())).matrix();
}

inline double aipw(const twophase::Dataset& ds) {
  const FullDataFit f = fit_full_data(ds);
  const Eigen::VectorXd h = clever(ds, f.g1);
  return (h.cwiseProduct(ds.y() - f.qa) + f.q1 - f.q0).mean();
}

inline double g_computation(const twophase::Dataset& ds) {
  const FullDataFit f = fit_full_data(ds);
  return (f.q1 - f.q0).mean();
}

// Full-data TMLE with the same stopping rule as the iterative two-phase
// loops: no fluctuation when the initial fit already solves the EIC equation
// to within sigma / (sqrt(n) log n). always_update forces the single step.
inline double tmle(const twophase::Dataset& ds, bool always_update) {
  const FullDataFit f = fit_full_data(ds);
  const Eigen::Index n = ds.size();
  const Eigen::VectorXd h = clever(ds, f.g1);
  const double psi0 = (f.q1 - f.q0).mean();
  const Eigen::VectorXd d = h.cwiseProduct(ds.y() - f.qa) + f.q1 - f.q0 - Eigen::VectorXd::Constant(n, psi0);
  const double var = (d.array() - d.mean()).square().sum() / static_cast<double>(n - 1);
  const double threshold = std::sqrt(var) / (std::sqrt(static_cast<double>(n)) * std::log(static_cast<double>(n)));
  if (!always_update && std::abs(d.mean()) <= threshold) return psi0;

  auto logit = [](double p) { return std::log(p / (1.0 - p)); };
  double eps = 0.0;
  for (int it = 0; it < 100; ++it) {
    double score = 0.0, slope = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double p = sigmoid(logit(f.qa(i)) + eps * h(i));
      score += h(i) * (ds.y()(i) - p);
      slope += h(i) * h(i) * p * (1.0 - p);
    }
    eps += score / slope;
    if (std::abs(score / slope) < 1e-15) break;
  }
  double psi = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double g = f.g1(i);
    psi += sigmoid(logit(f.q1(i)) + eps / g) - sigmoid(logit(f.q0(i)) - eps / (1.0 - g));
  }
  return psi / static_cast<double>(n);
}

}  // namespace reference
