#pragma once

#include "twophase/data.hpp"
#include "twophase/nuisance.hpp"

namespace twophase {

class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Nuisance predictions on every record. g1, q1 and q0 need phase-2 covariates
// and are NaN off phase 2.
struct NuisanceValues {
  Eigen::VectorXd pi;
  Eigen::VectorXd g1;
  Eigen::VectorXd q1;
  Eigen::VectorXd q0;
};

NuisanceValues evaluate_nuisances(const Dataset& ds, const NuisanceSet& ns);

// H(a, w) = a / g(1|w) - (1 - a) / g(0|w).
double clever_covariate(int a, double g1);
double clever_covariate(int a, const Eigen::VectorXd& w, const Predictor& g);

// Per-record H(A_i, W_i); zero off phase 2.
Eigen::VectorXd clever_covariates(const Dataset& ds, const Eigen::VectorXd& g1);

// H (Y - Q(A,W)) + Q(1,W) - Q(0,W) for one phase-2 record; throws for delta = 0.
double uncentered_fulldata_eic(const ObservedRecord& r, double q1, double q0, double g1);
// Same over the dataset; zero off phase 2.
Eigen::VectorXd uncentered_fulldata_eic(const Dataset& ds, const Eigen::VectorXd& q1, const Eigen::VectorXd& q0,
                                        const Eigen::VectorXd& g1);

struct FullDataEic {
  Eigen::VectorXd h;
  Eigen::VectorXd dbar_f;
  Eigen::VectorXd d_f;  // dbar_f - psi on phase 2, zero elsewhere
};

FullDataEic fulldata_eic(const Dataset& ds, const Eigen::VectorXd& q1, const Eigen::VectorXd& q0,
                         const Eigen::VectorXd& g1, double psi);
FullDataEic fulldata_eic(const Dataset& ds, const Predictor& q, const Predictor& g, double psi);

// Delta/Pi (Dbar - mbar) + mbar - psi.
Eigen::VectorXd observed_eic_values(const Eigen::VectorXd& delta, const Eigen::VectorXd& pi,
                                    const Eigen::VectorXd& dbar, const Eigen::VectorXd& mbar, double psi);
// Delta D^F / Pi - (mbar - psi)(Delta - Pi) / Pi, the augmented IPCW arrangement of the same curve.
Eigen::VectorXd observed_eic_aipcw(const Eigen::VectorXd& delta, const Eigen::VectorXd& pi,
                                   const Eigen::VectorXd& dbar, const Eigen::VectorXd& mbar, double psi);

struct EicEvaluation {
  Eigen::VectorXd h;
  Eigen::VectorXd dbar_f;
  Eigen::VectorXd d_f;
  Eigen::VectorXd d_obs;
  // Four-part split into the Q, Pi, Gamma (phase-2 covariate law) and P_V scores.
  Eigen::VectorXd q_comp;
  Eigen::VectorXd pi_comp;
  Eigen::VectorXd gamma_comp;
  Eigen::VectorXd pv_comp;
  double psi = 0.0;
};

// d_obs uses the supplied mbar. The components use separate regressions of
// H (Y - Q) and Q(1,W) - Q(0,W) on V with ns.mbar_learner; for a linear learner
// they add up to the regression of Dbar, so the components sum to d_obs when
// mbar is that same fit.
EicEvaluation observed_eic(const Dataset& ds, const NuisanceSet& ns, double psi, const Predictor& mbar);

enum class Submodel { linear, logistic };

struct LinearizedEic {
  Eigen::VectorXd slope;  // d/d eps of Dbar along the submodel at eps = 0; zero off phase 2
  Eigen::VectorXd j;      // Q(A,W)(1 - Q(A,W))
};

LinearizedEic linearized_slope(const Dataset& ds, const Eigen::VectorXd& q1, const Eigen::VectorXd& q0,
                               const Eigen::VectorXd& g1, Submodel submodel);

struct EicSummary {
  double sigma2 = 0.0;
  double se = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

EicSummary eic_variance(const Eigen::VectorXd& d_obs, double psi);

// sigma / (sqrt(n) log n), the stopping threshold of the iterative targeting loops.
double score_threshold(double sigma2, Eigen::Index n);

}  // namespace twophase
