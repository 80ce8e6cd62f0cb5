#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "twophase/dgp.hpp"
#include "twophase/glm.hpp"
#include "twophase/rng.hpp"

using namespace twophase;

TEST_CASE("Philox4x32-10 known-answer vectors") {
  const Philox::Block zero = Philox::block({0, 0, 0, 0}, {0, 0});
  CHECK(zero == Philox::Block{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  const std::uint32_t f = 0xffffffffu;
  const Philox::Block ones = Philox::block({f, f, f, f}, {f, f});
  CHECK(ones == Philox::Block{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
}

TEST_CASE("same seed and stream replay the same sequence; other streams differ") {
  Philox a(123, 4), b(123, 4), c(123, 5), d(124, 4);
  int same_c = 0, same_d = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    same_c += x == c.next_u64();
    same_d += x == d.next_u64();
  }
  CHECK(same_c == 0);
  CHECK(same_d == 0);
}

TEST_CASE("uniform and normal moments") {
  Philox rng(99);
  const int n = 200000;
  double su = 0, su2 = 0, sn = 0, sn2 = 0, lo = 1, hi = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    su += u;
    su2 += u * u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  CHECK(lo > 0.0);
  CHECK(hi < 1.0);
  // Tolerances are about five standard errors.
  CHECK(std::abs(su / n - 0.5) < 5 * std::sqrt(1.0 / 12 / n));
  CHECK(std::abs(su2 / n - 1.0 / 3) < 0.003);
  CHECK(std::abs(sn / n) < 5 / std::sqrt(double(n)));
  CHECK(std::abs(sn2 / n - 1.0) < 0.02);
}

TEST_CASE("dgp names round-trip") {
  for (DgpId id : {DgpId::kang_dr, DgpId::missing_rate, DgpId::raking_gap, DgpId::near_positivity})
    CHECK(parse_dgp(dgp_name(id)) == id);
  CHECK_FALSE(parse_dgp("kang").has_value());
}

TEST_CASE("generation is deterministic in (dgp, n, seed)") {
  for (DgpId id : {DgpId::kang_dr, DgpId::missing_rate, DgpId::raking_gap, DgpId::near_positivity}) {
    const DgpSpec spec{id, 300, 77};
    const Draw a = generate(spec), b = generate(spec);
    CHECK(a.data.y() == b.data.y());
    CHECK(a.data.delta() == b.data.delta());
    CHECK(a.data.w1() == b.data.w1());
    CHECK(a.truth.pi == b.truth.pi);
    DgpSpec other = spec;
    other.seed = 78;
    CHECK(generate(other).data.y() != a.data.y());
  }
}

TEST_CASE("phase-2 covariates are censored exactly when Delta = 0") {
  const Draw d = generate({DgpId::missing_rate, 500, 3});
  CHECK(d.data.w1_dim() == 2);
  CHECK(d.data.w2_dim() == 2);
  for (Eigen::Index i = 0; i < d.data.size(); ++i) {
    const bool observed = d.data.delta()(i) == 1.0;
    CHECK(observed == !std::isnan(d.data.w2()(i, 0)));
    if (observed) CHECK(d.data.w2()(i, 1) == d.truth.w_full(i, 3));
  }
}

TEST_CASE("kang_dr mechanisms reproduce the closed forms at the latent values") {
  const Draw d = generate({DgpId::kang_dr, 200, 5});
  for (Eigen::Index i = 0; i < 200; ++i) {
    const Eigen::VectorXd z = d.truth.latent.row(i).transpose();
    CHECK(d.truth.g1(i) == doctest::Approx(expit(-0.2 * z(0) - 0.6 * z(1) + 0.9 * z(3))).epsilon(1e-12));
    const double base = -1 + 0.6 * z(0) - 0.4 * z(1) + 0.2 * z(2) - 0.5 * z(3);
    CHECK(d.truth.q1(i) == doctest::Approx(expit(base + 1.2)).epsilon(1e-12));
    CHECK(d.truth.q0(i) == doctest::Approx(expit(base)).epsilon(1e-12));
    CHECK(d.truth.pi(i) == doctest::Approx(expit(-0.1 * z(0) + 0.1 * z(1))).epsilon(1e-12));
    CHECK(d.truth.w_full(i, 0) == doctest::Approx(std::exp(z(0) / 2)).epsilon(1e-12));
    CHECK(d.truth.w_full(i, 1) == doctest::Approx(z(1) * z(1) * z(1)).epsilon(1e-12));
    CHECK(d.truth.w_full(i, 3) == doctest::Approx(std::pow(z(2) + z(3) + 20, 2)).epsilon(1e-12));
  }
}

TEST_CASE("missing-rate intercepts give roughly 20, 50 and 70 percent missing") {
  const std::pair<double, double> cases[] = {{1.1, 0.20}, {-0.3, 0.50}, {-1.1, 0.70}};
  for (const auto& [c, target] : cases) {
    DgpSpec spec{DgpId::missing_rate, 100000, 17};
    spec.intercept = c;
    const Draw d = generate(spec);
    CHECK(std::abs((1.0 - d.data.delta().mean()) - target) < 0.02);
  }
}

TEST_CASE("selection depends only on phase-1 variables") {
  // Delta's mechanism must not move when the phase-2 covariates change.
  const Draw d = generate({DgpId::missing_rate, 2000, 8});
  Eigen::MatrixXd X(2000, 3);
  X << Eigen::VectorXd::Ones(2000), d.data.w1().col(0), d.data.y();
  const Eigen::VectorXd lp = d.truth.pi.unaryExpr([](double p) { return logit(p); });
  const Eigen::VectorXd coef = X.colPivHouseholderQr().solve(lp);
  CHECK((X * coef - lp).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(coef(1) == doctest::Approx(0.2).epsilon(1e-9));
  CHECK(coef(2) == doctest::Approx(0.2).epsilon(1e-9));
}

TEST_CASE("reference effects") {
  SUBCASE("missing_rate") {
    const double q = reference_psi({DgpId::missing_rate});
    CHECK(std::abs(q - 0.2595) < 0.002);
    CHECK(std::abs(true_psi({DgpId::missing_rate}, 1000000, 1) - q) < 0.002);
  }
  SUBCASE("kang_dr quadrature agrees with Monte Carlo") {
    const double q = reference_psi({DgpId::kang_dr});
    CHECK(q == doctest::Approx(0.244435).epsilon(1e-5));
    CHECK(std::abs(true_psi({DgpId::kang_dr}, 1000000, 2) - q) < 0.001);
  }
  SUBCASE("raking_gap is linear in the heterogeneity magnitude and vanishes at zero") {
    DgpSpec s{DgpId::raking_gap};
    s.gamma = 0.0;
    CHECK(reference_psi(s) == 0.0);
    s.gamma = 1.0;
    const double one = reference_psi(s);
    s.gamma = 0.5;
    CHECK(reference_psi(s) == doctest::Approx(0.5 * one).epsilon(1e-14));
    CHECK(std::abs(true_psi(s, 1000000, 3) - reference_psi(s)) < 0.01);
  }
}

TEST_CASE("census estimands") {
  SUBCASE("missing_rate census effect") {
    CHECK(std::abs(census_psi({DgpId::missing_rate}, 1000000, 4) - 0.2413) < 0.003);
  }
  SUBCASE("raking_gap causal-census gap grows with the heterogeneity") {
    double last = -1.0;
    for (double gamma : {0.0, 0.5, 1.0}) {
      DgpSpec s{DgpId::raking_gap};
      s.gamma = gamma;
      const double gap = std::abs(reference_psi(s) - census_psi(s, 400000, 5));
      CHECK(gap > last);
      last = gap;
    }
    CHECK(std::abs(last - 0.248) < 0.01);
  }
}
