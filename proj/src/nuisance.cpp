#include "twophase/nuisance.hpp"

#include <algorithm>
#include <cmath>

#include "twophase/eic.hpp"

namespace twophase {

namespace {

std::vector<Eigen::Index> all_rows(const Dataset& ds) {
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(ds.size()));
  for (Eigen::Index i = 0; i < ds.size(); ++i) rows[static_cast<std::size_t>(i)] = i;
  return rows;
}

}  // namespace

FeatureMap::FeatureMap(const Dataset& ds, FeatureSet set, const std::optional<std::vector<std::string>>& columns)
    : set_(set) {
  const auto& nm = ds.names();
  std::vector<std::pair<std::string, Column>> available;
  auto add_w1 = [&] {
    for (Eigen::Index j = 0; j < ds.w1_dim(); ++j)
      available.push_back({nm.w1[static_cast<std::size_t>(j)], {Source::w1, j}});
  };
  auto add_w2 = [&] {
    for (Eigen::Index j = 0; j < ds.w2_dim(); ++j)
      available.push_back({nm.w2[static_cast<std::size_t>(j)], {Source::w2, j}});
  };
  switch (set) {
    case FeatureSet::phase1:
      add_w1();
      available.push_back({nm.treatment, {Source::treatment, 0}});
      available.push_back({nm.outcome, {Source::outcome, 0}});
      break;
    case FeatureSet::covariates:
      add_w1();
      add_w2();
      break;
    case FeatureSet::treated:
      available.push_back({nm.treatment, {Source::treatment, 0}});
      add_w1();
      add_w2();
      break;
  }
  if (!columns) {
    for (const auto& [name, col] : available) columns_.push_back(col);
    return;
  }
  for (const auto& want : *columns) {
    auto it = std::find_if(available.begin(), available.end(), [&](const auto& c) { return c.first == want; });
    if (it == available.end()) throw NuisanceError("learner column '" + want + "' is not available for this nuisance");
    columns_.push_back(it->second);
  }
}

bool FeatureMap::uses_phase2() const {
  return std::any_of(columns_.begin(), columns_.end(), [](const Column& c) { return c.source == Source::w2; });
}

Eigen::MatrixXd FeatureMap::design(const Dataset& ds, const std::vector<Eigen::Index>& rows,
                                   std::optional<int> treatment) const {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), dim());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Eigen::Index i = rows[r];
    const auto k = static_cast<Eigen::Index>(r);
    X(k, 0) = 1.0;
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      const auto& col = columns_[c];
      double v = 0.0;
      switch (col.source) {
        case Source::w1: v = ds.w1()(i, col.index); break;
        case Source::w2:
          if (ds.delta()(i) != 1.0) throw NuisanceError("phase-2 covariate requested for a record outside phase 2");
          v = ds.w2()(i, col.index);
          break;
        case Source::treatment: v = treatment ? *treatment : ds.a()(i); break;
        case Source::outcome: v = ds.y()(i); break;
      }
      X(k, static_cast<Eigen::Index>(c) + 1) = v;
    }
  }
  return X;
}

Eigen::MatrixXd FeatureMap::design(const Dataset& ds, std::optional<int> treatment) const {
  return design(ds, all_rows(ds), treatment);
}

Predictor::Predictor(FeatureMap map, GlmFit fit, OutputRange range, Bounds truncation)
    : map_(std::move(map)), fit_(std::move(fit)), range_(range), trunc_(truncation) {}

Predictor Predictor::known(Mechanism fn, OutputRange range, Bounds truncation) {
  Predictor p;
  p.fn_ = std::move(fn);
  p.range_ = range;
  p.trunc_ = truncation;
  return p;
}

double Predictor::finish(double v) const {
  if (range_ == OutputRange::real) return v;
  return std::clamp(v, trunc_.lo, trunc_.hi);
}

Eigen::VectorXd Predictor::predict(const Dataset& ds, const std::vector<Eigen::Index>& rows,
                                   std::optional<int> treatment) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  if (fit_) {
    out = fit_->predict(map_->design(ds, rows, treatment));
  } else {
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const Eigen::Index i = rows[r];
      out(static_cast<Eigen::Index>(r)) = fn_(ds, i, treatment ? *treatment : static_cast<int>(ds.a()(i)));
    }
  }
  return out.unaryExpr([this](double v) { return finish(v); });
}

Eigen::VectorXd Predictor::predict(const Dataset& ds, std::optional<int> treatment) const {
  return predict(ds, all_rows(ds), treatment);
}

double Predictor::predict(const Eigen::VectorXd& features) const {
  if (!fit_) throw NuisanceError("feature-vector prediction needs a fitted model");
  if (features.size() + 1 != fit_->feature_dim) throw NuisanceError("feature vector has the wrong length");
  Eigen::RowVectorXd x(features.size() + 1);
  x << 1.0, features.transpose();
  return finish(fit_->predict(x)(0));
}

Predictor fit_pi(const Dataset& ds, const LearnerSpec& learner, Bounds trunc) {
  const double share = ds.delta().mean();
  if (share == 0.0 || share == 1.0) throw NuisanceError("every record has the same delta; Pi is not identifiable");
  FeatureMap map(ds, FeatureSet::phase1, learner.columns);
  const Eigen::MatrixXd X = map.design(ds);
  GlmFit fit = fit_glm(X, ds.delta(), Eigen::VectorXd::Ones(ds.size()), Family::bernoulli);
  return Predictor(std::move(map), std::move(fit), OutputRange::probability, trunc);
}

namespace {

Eigen::VectorXd inverse_pi_weights(const Dataset& ds, const Predictor& pi) {
  const Eigen::VectorXd p = pi.predict(ds, ds.phase2());
  if ((p.array() <= 0.0).any()) throw NuisanceError("Pi must be positive on phase-2 records");
  return p.cwiseInverse();
}

void require_both_arms(const Dataset& ds) {
  int treated = 0, control = 0;
  for (auto i : ds.phase2()) (ds.a()(i) == 1.0 ? treated : control)++;
  if (treated == 0 || control == 0) throw NuisanceError("a treatment arm is absent among phase-2 records");
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) out(static_cast<Eigen::Index>(r)) = v(rows[r]);
  return out;
}

}  // namespace

Predictor fit_q_ipcw(const Dataset& ds, const Predictor& pi, const LearnerSpec& learner) {
  require_both_arms(ds);
  for (auto i : ds.phase2()) {
    if (ds.y()(i) < 0.0 || ds.y()(i) > 1.0) throw NuisanceError("outcome must be scaled to [0,1] before fitting Q");
  }
  FeatureMap map(ds, FeatureSet::treated, learner.columns);
  const Eigen::MatrixXd X = map.design(ds, ds.phase2());
  GlmFit fit = fit_glm(X, gather(ds.y(), ds.phase2()), inverse_pi_weights(ds, pi), learner.family);
  const OutputRange range = learner.family == Family::bernoulli ? OutputRange::probability : OutputRange::real;
  return Predictor(std::move(map), std::move(fit), range, kOutcomeClip);
}

Predictor fit_g_ipcw(const Dataset& ds, const Predictor& pi, const LearnerSpec& learner, Bounds trunc) {
  require_both_arms(ds);
  FeatureMap map(ds, FeatureSet::covariates, learner.columns);
  const Eigen::MatrixXd X = map.design(ds, ds.phase2());
  GlmFit fit = fit_glm(X, gather(ds.a(), ds.phase2()), inverse_pi_weights(ds, pi), Family::bernoulli);
  return Predictor(std::move(map), std::move(fit), OutputRange::probability, trunc);
}

Predictor fit_mbar(const Dataset& ds, const Eigen::VectorXd& values, const LearnerSpec& learner) {
  if (learner.family != Family::gaussian) throw NuisanceError("m-bar regressions use the gaussian family");
  if (values.size() != static_cast<Eigen::Index>(ds.phase2().size()))
    throw NuisanceError("m-bar values must have one entry per phase-2 record");
  FeatureMap map(ds, FeatureSet::phase1, learner.columns);
  const Eigen::MatrixXd X = map.design(ds, ds.phase2());
  GlmFit fit = fit_glm(X, values, Eigen::VectorXd::Ones(values.size()), Family::gaussian);
  return Predictor(std::move(map), std::move(fit), OutputRange::real, {});
}

Predictor fix_known(Predictor::Mechanism fn, OutputRange range, Bounds truncation) {
  return Predictor::known(std::move(fn), range, truncation);
}

NuisanceSet fit_nuisances(const Dataset& ds, const NuisanceOptions& opts) {
  if (!(opts.trunc_pi.lo > 0.0 && opts.trunc_pi.lo <= opts.trunc_pi.hi && opts.trunc_pi.hi <= 1.0))
    throw NuisanceError("Pi truncation needs 0 < lo <= hi <= 1");
  if (!(opts.trunc_g.lo > 0.0 && opts.trunc_g.lo <= opts.trunc_g.hi && opts.trunc_g.hi < 1.0))
    throw NuisanceError("g truncation needs 0 < lo <= hi < 1");
  Predictor pi = opts.known_pi ? fix_known(*opts.known_pi, OutputRange::probability, opts.trunc_pi)
                               : fit_pi(ds, opts.pi, opts.trunc_pi);
  Predictor q = fit_q_ipcw(ds, pi, opts.q);
  Predictor g = opts.known_g ? fix_known(*opts.known_g, OutputRange::probability, opts.trunc_g)
                             : fit_g_ipcw(ds, pi, opts.g, opts.trunc_g);
  NuisanceSet ns{pi, g, q, std::nullopt, opts.mbar, opts.trunc_pi, opts.trunc_g};
  const NuisanceValues nv = evaluate_nuisances(ds, ns);
  const Eigen::VectorXd dbar = uncentered_fulldata_eic(ds, nv.q1, nv.q0, nv.g1);
  ns.mbar = fit_mbar(ds, gather(dbar, ds.phase2()), opts.mbar);
  return ns;
}

PhaseOneSmoother::PhaseOneSmoother(const Dataset& ds, const LearnerSpec& learner)
    : ds_(&ds), map_(ds, FeatureSet::phase1, learner.columns) {
  if (learner.family != Family::gaussian) throw NuisanceError("m-bar regressions use the gaussian family");
  design_all_ = map_.design(ds);
  const Eigen::MatrixXd Xp = map_.design(ds, ds.phase2());
  qr_.compute(Xp);
  if (qr_.rank() < Xp.cols()) {
    const double lambda = 1e-8 * Xp.squaredNorm() / static_cast<double>(Xp.cols());
    Eigen::MatrixXd aug(Xp.rows() + Xp.cols(), Xp.cols());
    aug << Xp, Eigen::MatrixXd::Identity(Xp.cols(), Xp.cols()) * std::sqrt(lambda > 0 ? lambda : 1e-8);
    qr_.compute(aug);
    ridge_rows_ = Xp.cols();
    if (qr_.rank() < Xp.cols()) throw NuisanceError("phase-1 design singular even after ridge fallback");
  }
}

Eigen::VectorXd PhaseOneSmoother::coefficients(const Eigen::VectorXd& values) const {
  const auto& rows = ds_->phase2();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rows.size()) + ridge_rows_);
  for (std::size_t r = 0; r < rows.size(); ++r) rhs(static_cast<Eigen::Index>(r)) = values(rows[r]);
  return qr_.solve(rhs);
}

Eigen::VectorXd PhaseOneSmoother::fit_predict(const Eigen::VectorXd& values) const {
  return design_all_ * coefficients(values);
}

}  // namespace twophase
