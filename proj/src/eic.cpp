#include "twophase/eic.hpp"

#include <cmath>
#include <limits>

namespace twophase {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Eigen::VectorXd scatter(const Eigen::VectorXd& values, const std::vector<Eigen::Index>& rows, Eigen::Index n,
                        double fill) {
  Eigen::VectorXd out = Eigen::VectorXd::Constant(n, fill);
  for (std::size_t r = 0; r < rows.size(); ++r) out(rows[r]) = values(static_cast<Eigen::Index>(r));
  return out;
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) out(static_cast<Eigen::Index>(r)) = v(rows[r]);
  return out;
}

}  // namespace

NuisanceValues evaluate_nuisances(const Dataset& ds, const NuisanceSet& ns) {
  const auto& p2 = ds.phase2();
  const Eigen::Index n = ds.size();
  NuisanceValues nv;
  nv.pi = ns.pi.predict(ds);
  nv.g1 = scatter(ns.g.predict(ds, p2, 1), p2, n, kNaN);
  nv.q1 = scatter(ns.q.predict(ds, p2, 1), p2, n, kNaN);
  nv.q0 = scatter(ns.q.predict(ds, p2, 0), p2, n, kNaN);
  return nv;
}

double clever_covariate(int a, double g1) { return a == 1 ? 1.0 / g1 : -1.0 / (1.0 - g1); }

double clever_covariate(int a, const Eigen::VectorXd& w, const Predictor& g) {
  return clever_covariate(a, g.predict(w));
}

Eigen::VectorXd clever_covariates(const Dataset& ds, const Eigen::VectorXd& g1) {
  Eigen::VectorXd h = Eigen::VectorXd::Zero(ds.size());
  for (auto i : ds.phase2()) h(i) = clever_covariate(static_cast<int>(ds.a()(i)), g1(i));
  return h;
}

double uncentered_fulldata_eic(const ObservedRecord& r, double q1, double q0, double g1) {
  if (r.delta != 1) throw std::invalid_argument("full-data EIC needs a phase-2 record");
  const double qa = r.a == 1 ? q1 : q0;
  return clever_covariate(r.a, g1) * (r.y - qa) + q1 - q0;
}

Eigen::VectorXd uncentered_fulldata_eic(const Dataset& ds, const Eigen::VectorXd& q1, const Eigen::VectorXd& q0,
                                        const Eigen::VectorXd& g1) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(ds.size());
  for (auto i : ds.phase2()) {
    const int a = static_cast<int>(ds.a()(i));
    const double qa = a == 1 ? q1(i) : q0(i);
    out(i) = clever_covariate(a, g1(i)) * (ds.y()(i) - qa) + q1(i) - q0(i);
  }
  return out;
}

FullDataEic fulldata_eic(const Dataset& ds, const Eigen::VectorXd& q1, const Eigen::VectorXd& q0,
                         const Eigen::VectorXd& g1, double psi) {
  FullDataEic out;
  out.h = clever_covariates(ds, g1);
  out.dbar_f = uncentered_fulldata_eic(ds, q1, q0, g1);
  out.d_f = Eigen::VectorXd::Zero(ds.size());
  for (auto i : ds.phase2()) out.d_f(i) = out.dbar_f(i) - psi;
  return out;
}

FullDataEic fulldata_eic(const Dataset& ds, const Predictor& q, const Predictor& g, double psi) {
  const auto& p2 = ds.phase2();
  const Eigen::Index n = ds.size();
  return fulldata_eic(ds, scatter(q.predict(ds, p2, 1), p2, n, kNaN), scatter(q.predict(ds, p2, 0), p2, n, kNaN),
                      scatter(g.predict(ds, p2, 1), p2, n, kNaN), psi);
}

Eigen::VectorXd observed_eic_values(const Eigen::VectorXd& delta, const Eigen::VectorXd& pi,
                                    const Eigen::VectorXd& dbar, const Eigen::VectorXd& mbar, double psi) {
  Eigen::VectorXd d(delta.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const double weighted = delta(i) == 1.0 ? (dbar(i) - mbar(i)) / pi(i) : 0.0;
    d(i) = weighted + mbar(i) - psi;
  }
  return d;
}

Eigen::VectorXd observed_eic_aipcw(const Eigen::VectorXd& delta, const Eigen::VectorXd& pi,
                                   const Eigen::VectorXd& dbar, const Eigen::VectorXd& mbar, double psi) {
  Eigen::VectorXd d(delta.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const double ipcw = delta(i) == 1.0 ? (dbar(i) - psi) / pi(i) : 0.0;
    d(i) = ipcw - (mbar(i) - psi) * (delta(i) - pi(i)) / pi(i);
  }
  return d;
}

EicEvaluation observed_eic(const Dataset& ds, const NuisanceSet& ns, double psi, const Predictor& mbar) {
  const NuisanceValues nv = evaluate_nuisances(ds, ns);
  const Eigen::Index n = ds.size();
  const auto& p2 = ds.phase2();
  const FullDataEic full = fulldata_eic(ds, nv.q1, nv.q0, nv.g1, psi);

  EicEvaluation ev;
  ev.psi = psi;
  ev.h = full.h;
  ev.dbar_f = full.dbar_f;
  ev.d_f = full.d_f;
  const Eigen::VectorXd mbar_values = mbar.predict(ds);
  ev.d_obs = observed_eic_aipcw(ds.delta(), nv.pi, ev.dbar_f, mbar_values, psi);

  Eigen::VectorXd resid = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd contrast = Eigen::VectorXd::Zero(n);
  for (auto i : p2) {
    const double qa = ds.a()(i) == 1.0 ? nv.q1(i) : nv.q0(i);
    resid(i) = ev.h(i) * (ds.y()(i) - qa);
    contrast(i) = nv.q1(i) - nv.q0(i);
  }
  const Eigen::VectorXd resid_reg = fit_mbar(ds, gather(resid, p2), ns.mbar_learner).predict(ds);
  const Eigen::VectorXd contrast_reg = fit_mbar(ds, gather(contrast, p2), ns.mbar_learner).predict(ds);

  ev.q_comp = Eigen::VectorXd::Zero(n);
  ev.gamma_comp = Eigen::VectorXd::Zero(n);
  ev.pi_comp.resize(n);
  ev.pv_comp.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = ds.delta()(i);
    const double p = nv.pi(i);
    if (d == 1.0) {
      ev.q_comp(i) = resid(i) / p;
      ev.gamma_comp(i) = (contrast(i) - contrast_reg(i)) / p;
    }
    ev.pi_comp(i) = -(d - p) / p * resid_reg(i);
    ev.pv_comp(i) = contrast_reg(i) - psi;
  }

  // The split must reproduce the augmented IPCW arrangement built from the same two regressions.
  const Eigen::VectorXd joint = observed_eic_aipcw(ds.delta(), nv.pi, ev.dbar_f, resid_reg + contrast_reg, psi);
#ifdef NDEBUG
  const Eigen::Index stride = 100;
#else
  const Eigen::Index stride = 1;
#endif
  for (Eigen::Index i = 0; i < n; i += stride) {
    const double sum = ev.q_comp(i) + ev.pi_comp(i) + ev.gamma_comp(i) + ev.pv_comp(i);
    if (std::abs(sum - joint(i)) > 1e-8 * std::max(1.0, std::abs(joint(i))))
      throw InternalError("observed EIC: component split disagrees with the augmented IPCW form at record " +
                          std::to_string(i));
  }
  return ev;
}

LinearizedEic linearized_slope(const Dataset& ds, const Eigen::VectorXd& q1, const Eigen::VectorXd& q0,
                               const Eigen::VectorXd& g1, Submodel submodel) {
  LinearizedEic out;
  out.slope = Eigen::VectorXd::Zero(ds.size());
  out.j = Eigen::VectorXd::Zero(ds.size());
  for (auto i : ds.phase2()) {
    const int a = static_cast<int>(ds.a()(i));
    const double h1 = clever_covariate(1, g1(i));
    const double h0 = clever_covariate(0, g1(i));
    const double ha = a == 1 ? h1 : h0;
    const double qa = a == 1 ? q1(i) : q0(i);
    out.j(i) = qa * (1.0 - qa);
    if (submodel == Submodel::linear) {
      out.slope(i) = h1 - h0 - ha * ha;
    } else {
      const double j1 = q1(i) * (1.0 - q1(i));
      const double j0 = q0(i) * (1.0 - q0(i));
      out.slope(i) = j1 * h1 - j0 * h0 - out.j(i) * ha * ha;
    }
  }
  return out;
}

EicSummary eic_variance(const Eigen::VectorXd& d_obs, double psi) {
  const Eigen::Index n = d_obs.size();
  if (n < 2) throw std::invalid_argument("eic_variance needs at least two records");
  EicSummary s;
  const double mean = d_obs.mean();
  s.sigma2 = (d_obs.array() - mean).square().sum() / static_cast<double>(n - 1);
  s.se = std::sqrt(s.sigma2 / static_cast<double>(n));
  s.ci_lo = psi - 1.96 * s.se;
  s.ci_hi = psi + 1.96 * s.se;
  return s;
}

double score_threshold(double sigma2, Eigen::Index n) {
  const double nn = static_cast<double>(n);
  return std::sqrt(sigma2) / (std::sqrt(nn) * std::log(nn));
}

}  // namespace twophase
