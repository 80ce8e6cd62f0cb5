#pragma once

// Shared plumbing for the estimator implementations. Vectors are indexed by
// record; quantities needing phase-2 covariates are only read on phase 2.

#include "twophase/estimators.hpp"

namespace twophase::detail {

struct Workspace {
  Workspace(const Dataset& ds, const NuisanceSet& ns);

  const Dataset& ds;
  const NuisanceSet& ns;
  Eigen::Index n;
  NuisanceValues initial;
  PhaseOneSmoother smoother;

  const Eigen::VectorXd& delta() const { return ds.delta(); }
  const std::vector<Eigen::Index>& phase2() const { return ds.phase2(); }
  const Eigen::VectorXd& g1() const { return initial.g1; }

  // m-bar at the initial fit: the supplied predictor when present, otherwise a fresh regression.
  Eigen::VectorXd initial_mbar() const;
};

struct OutcomeFit {
  Eigen::VectorXd q1;
  Eigen::VectorXd q0;
};

Eigen::VectorXd dbar(const Workspace& ws, const OutcomeFit& q);
// Q(a, W) moved along the logistic submodel with covariate H(a, W).
OutcomeFit shift_outcome(const Workspace& ws, const OutcomeFit& q, double eps);
// Weighted (Delta/pi) fluctuation of Q; returns the fitted eps and updates q.
FluctuationFit fluctuate_outcome(const Workspace& ws, OutcomeFit& q, const Eigen::VectorXd& pi);
// Logistic fluctuation of Pi with the given clever covariate over records with pi < 1.
Eigen::VectorXd fluctuate_pi(const Workspace& ws, const Eigen::VectorXd& pi, const Eigen::VectorXd& covariate,
                             FluctuationFit* fit = nullptr);

// Treatment effect under the Delta/pi-weighted empirical covariate law.
double weighted_effect(const Workspace& ws, const OutcomeFit& q, const Eigen::VectorXd& pi);

Eigen::VectorXd contrast(const Workspace& ws, const OutcomeFit& q);
Eigen::VectorXd residual_term(const Workspace& ws, const OutcomeFit& q);

EstimateResult finish(const Workspace& ws, EstimatorId id, TargetMode mode, double psi,
                      const Eigen::VectorXd& eic, int iterations, bool converged);

void require_unit_outcome(const Dataset& ds);

}  // namespace twophase::detail
