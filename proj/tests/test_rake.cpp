#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "twophase/rake.hpp"
#include "twophase/rng.hpp"

using namespace twophase;

namespace {

struct Problem {
  Eigen::VectorXd mbar, pi, delta;
};

Problem random_problem(std::uint64_t seed, Eigen::Index n) {
  Philox rng(seed, 8);
  Problem p{Eigen::VectorXd(n), Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    p.mbar(i) = rng.normal() + 0.3;
    p.pi(i) = 0.2 + 0.7 * rng.uniform();
    p.delta(i) = rng.bernoulli(p.pi(i)) ? 1.0 : 0.0;
  }
  return p;
}

double weighted_total(const Problem& p, const Eigen::VectorXd& pi_star) {
  double t = 0.0;
  for (Eigen::Index i = 0; i < p.mbar.size(); ++i)
    if (p.delta(i) == 1.0) t += p.mbar(i) / pi_star(i);
  return t;
}

}  // namespace

TEST_CASE("raked weights reproduce the full-sample total") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const Problem p = random_problem(seed, 200);
    const RakeSolution s = rake_weights(p.mbar, p.pi, p.delta);
    REQUIRE(s.converged);
    CHECK(std::abs(weighted_total(p, s.pi_star) - p.mbar.sum()) < 1e-8);
    CHECK(std::abs(s.constraint_residual) < 1e-8);
    CHECK(s.a.minCoeff() > 0.0);
    CHECK(rake_constraint(p.mbar, p.pi, p.delta, s.lambda) == doctest::Approx(s.constraint_residual));
  }
}

TEST_CASE("constant calibration variable has a closed-form multiplier") {
  // k phase-2 rows at pi = p, n rows overall: k exp(-lambda c) c / p = n c.
  const Eigen::Index n = 10, k = 4;
  const double c = 1.7, p = 0.5;
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(n);
  delta.head(k).setOnes();
  const RakeSolution s = rake_weights(Eigen::VectorXd::Constant(n, c), Eigen::VectorXd::Constant(n, p), delta);
  CHECK(s.lambda == doctest::Approx(std::log(k / (p * n)) / c).epsilon(1e-10));
}

TEST_CASE("already balanced weights are left alone") {
  Eigen::VectorXd mbar(4), pi(4), delta(4);
  mbar << 1.0, -1.0, 0.5, -0.5;
  pi << 0.5, 0.5, 1.0, 1.0;
  delta << 1, 1, 0, 0;
  const RakeSolution s = rake_weights(mbar, pi, delta);
  CHECK(s.lambda == 0.0);
  CHECK(s.iterations == 0);
  CHECK(s.pi_star == pi);
}

TEST_CASE("rescaling the calibration variable leaves the calibrated weights unchanged") {
  const Problem p = random_problem(42, 300);
  const RakeSolution base = rake_weights(p.mbar, p.pi, p.delta, 1e-12);
  for (double scale : {0.01, 3.0, 250.0}) {
    const RakeSolution s = rake_weights(p.mbar * scale, p.pi, p.delta, 1e-12 * scale);
    CHECK(s.lambda * scale == doctest::Approx(base.lambda).epsilon(1e-8));
    CHECK((s.pi_star - base.pi_star).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("infeasible constraint is reported") {
  Eigen::VectorXd mbar(4), pi = Eigen::VectorXd::Constant(4, 0.5), delta(4);
  // Phase-2 values all positive but the full-sample total is negative.
  mbar << 1.0, 2.0, -10.0, -10.0;
  delta << 1, 1, 0, 0;
  CHECK_THROWS_AS(rake_weights(mbar, pi, delta), RakeError);
  CHECK_THROWS_AS(rake_weights(mbar, pi, Eigen::VectorXd::Ones(3)), RakeError);
  mbar(0) = std::nan("");
  CHECK_THROWS_AS(rake_weights(mbar, pi, delta), RakeError);
}

TEST_CASE("far-off starting point still converges") {
  Eigen::VectorXd mbar(6), pi = Eigen::VectorXd::Constant(6, 0.9), delta(6);
  mbar << 0.001, -0.002, 50.0, 50.0, 50.0, 50.0;
  delta << 1, 1, 0, 0, 0, 0;
  const RakeSolution s = rake_weights(mbar, pi, delta);
  CHECK(s.converged);
  CHECK(std::abs(s.constraint_residual) < 1e-8);
}
