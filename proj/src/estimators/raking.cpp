#include "common.hpp"

namespace twophase {

namespace {

struct WorkingModel {
  FeatureMap map;
  Family family;
  GlmFit fit;
  Eigen::MatrixXd x;  // phase-2 design at the observed treatment
  Eigen::VectorXd mu;
  Eigen::VectorXd variance;  // d mu / d eta, which is also the working variance for canonical links
};

WorkingModel fit_working_model(const Dataset& ds, const Eigen::VectorXd& weights) {
  WorkingModel m{FeatureMap(ds, FeatureSet::treated), Family::gaussian, {}, {}, {}, {}};
  m.family = ds.y_kind() == OutcomeKind::binary ? Family::bernoulli : Family::gaussian;
  const auto& rows = ds.phase2();
  m.x = m.map.design(ds, rows);
  Eigen::VectorXd y(m.x.rows()), w(m.x.rows());
  for (Eigen::Index r = 0; r < m.x.rows(); ++r) {
    y(r) = ds.y()(rows[static_cast<std::size_t>(r)]);
    w(r) = weights(rows[static_cast<std::size_t>(r)]);
  }
  m.fit = fit_glm(m.x, y, w, m.family);
  const Eigen::VectorXd eta = m.x * m.fit.coefficients;
  if (m.family == Family::bernoulli) {
    m.mu = eta.unaryExpr([](double v) { return clip_prob(expit(v)); });
    m.variance = m.mu.array() * (1.0 - m.mu.array());
  } else {
    m.mu = eta;
    m.variance = Eigen::VectorXd::Ones(eta.size());
  }
  return m;
}

// Weighted information matrix sum_i w_i v_i x_i x_i' / sum_i w_i over phase 2.
Eigen::MatrixXd information(const WorkingModel& m, const Eigen::VectorXd& w) {
  const Eigen::VectorXd wv = w.cwiseProduct(m.variance);
  return m.x.transpose() * wv.asDiagonal() * m.x / w.sum();
}

Eigen::VectorXd phase2_values(const Dataset& ds, const Eigen::VectorXd& all) {
  const auto& rows = ds.phase2();
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) out(static_cast<Eigen::Index>(r)) = all(rows[r]);
  return out;
}

}  // namespace

EstimateResult estimate_raking(const Dataset& ds, const NuisanceSet& ns) {
  const detail::Workspace ws(ds, ns);
  const Eigen::VectorXd& pi = ws.initial.pi;
  const auto& rows = ds.phase2();
  const auto m = static_cast<Eigen::Index>(rows.size());

  // Calibration variable: the treatment coefficient's influence function in
  // the design-weighted working model, evaluated with the phase-2 covariates
  // replaced by their regression on the phase-1 variables so it is defined on
  // every record.
  const Eigen::VectorXd design_w = phase2_values(ds, pi.cwiseInverse());
  const WorkingModel initial = fit_working_model(ds, pi.cwiseInverse());
  const Eigen::MatrixXd info0 = information(initial, design_w);
  const Eigen::Index a_col = 1;  // the treated feature set leads with A
  const Eigen::VectorXd row_a = info0.ldlt().solve(Eigen::VectorXd::Unit(info0.rows(), a_col));
  Eigen::MatrixXd imputed(ws.n, 2 + ds.w1_dim() + ds.w2_dim());
  imputed.col(0).setOnes();
  imputed.col(1) = ds.a();
  imputed.middleCols(2, ds.w1_dim()) = ds.w1();
  for (Eigen::Index j = 0; j < ds.w2_dim(); ++j)
    imputed.col(2 + ds.w1_dim() + j) = ws.smoother.fit_predict(ds.w2().col(j));
  const Eigen::VectorXd imputed_mu = initial.fit.predict(imputed);
  const Eigen::VectorXd calib =
      (imputed * row_a).cwiseProduct(ds.y() - imputed_mu);

  const RakeSolution rake = rake_weights(calib, pi, ws.delta());
  const Eigen::VectorXd& pi_star = rake.pi_star;
  const Eigen::VectorXd w_star = phase2_values(ds, pi_star.cwiseInverse());
  const WorkingModel model = fit_working_model(ds, pi_star.cwiseInverse());

  // g-computation over the calibrated phase-2 sample.
  const Eigen::MatrixXd x1 = model.map.design(ds, rows, 1);
  const Eigen::MatrixXd x0 = model.map.design(ds, rows, 0);
  const Eigen::VectorXd mu1 = model.fit.predict(x1);
  const Eigen::VectorXd mu0 = model.fit.predict(x0);
  const double psi = w_star.dot(mu1 - mu0) / w_star.sum();

  // Influence function of the census parameter: the g-computation term plus the
  // coefficient correction, then split by the calibration residual.
  Eigen::VectorXd d_mu1 = Eigen::VectorXd::Ones(m), d_mu0 = Eigen::VectorXd::Ones(m);
  if (model.family == Family::bernoulli) {
    d_mu1 = mu1.array() * (1.0 - mu1.array());
    d_mu0 = mu0.array() * (1.0 - mu0.array());
  }
  const Eigen::VectorXd grad =
      (x1.transpose() * w_star.cwiseProduct(d_mu1) - x0.transpose() * w_star.cwiseProduct(d_mu0)) / w_star.sum();
  const Eigen::VectorXd lever = information(model, w_star).ldlt().solve(grad);
  Eigen::VectorXd phi(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const Eigen::Index i = rows[static_cast<std::size_t>(r)];
    phi(r) = mu1(r) - mu0(r) - psi + lever.dot(model.x.row(r).transpose()) * (ds.y()(i) - model.mu(r));
  }
  const Eigen::VectorXd calib2 = phase2_values(ds, calib);
  const double hh = w_star.dot(calib2.cwiseAbs2());
  const double slope = hh > 0.0 ? w_star.dot(phi.cwiseProduct(calib2)) / hh : 0.0;
  Eigen::VectorXd d = slope * calib;
  for (Eigen::Index r = 0; r < m; ++r) {
    const Eigen::Index i = rows[static_cast<std::size_t>(r)];
    d(i) += (phi(r) - slope * calib(i)) / pi_star(i);
  }
  return detail::finish(ws, EstimatorId::raking, TargetMode::refit, psi, d, rake.iterations, rake.converged);
}

}  // namespace twophase
