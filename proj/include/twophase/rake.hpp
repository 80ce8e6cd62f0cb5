#pragma once

#include <Eigen/Dense>

#include <stdexcept>

namespace twophase {

class RakeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RakeSolution {
  double lambda = 0.0;
  Eigen::VectorXd a;        // exp(-lambda * mbar_i) on every row; only phase-2 rows matter
  Eigen::VectorXd pi_star;  // pi_i / a_i
  double constraint_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Calibrates the inverse-probability weights 1/pi so that the phase-2 weighted
// total of mbar matches its full-sample total:
//   sum_{delta=1} exp(-lambda mbar_i) mbar_i / pi_i = sum_i mbar_i.
// Newton from lambda = 0 with bracketing, stopping when |F(lambda)| < tol.
RakeSolution rake_weights(const Eigen::VectorXd& mbar, const Eigen::VectorXd& pi, const Eigen::VectorXd& delta,
                          double tol = 1e-8);

// F(lambda) above, exposed for diagnostics.
double rake_constraint(const Eigen::VectorXd& mbar, const Eigen::VectorXd& pi, const Eigen::VectorXd& delta,
                       double lambda);

}  // namespace twophase
