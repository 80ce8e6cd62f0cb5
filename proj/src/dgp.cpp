#include "twophase/dgp.hpp"

#include <array>
#include <cmath>
#include <memory>
#include <numbers>

#include "twophase/glm.hpp"
#include "twophase/rng.hpp"

namespace twophase {

namespace {

// What the sampling mechanism may look at: phase-1 variables only.
struct PhaseOneView {
  double w1;
  double w2;
  int a;
  double y;
};

struct Unit {
  std::array<double, 4> latent{};
  std::array<double, 4> w{};
  double g1 = 0.0;
  double q1 = 0.0;
  double q0 = 0.0;
};

class Model {
 public:
  virtual ~Model() = default;
  virtual Unit covariates(Philox& rng) const = 0;
  virtual bool binary() const { return true; }
  virtual double sampling(const PhaseOneView& v) const = 0;
};

Unit finish_unit(Unit u, double g1, double q1, double q0) {
  u.g1 = g1;
  u.q1 = q1;
  u.q0 = q0;
  return u;
}

class KangDr final : public Model {
 public:
  Unit covariates(Philox& rng) const override {
    Unit u;
    for (auto& z : u.latent) z = rng.normal();
    const auto& z = u.latent;
    u.w = {std::exp(z[0] / 2.0), z[1] * z[1] * z[1], std::pow(z[3] * z[2] / 25.0 + 0.6, 3.0),
           std::pow(z[2] + z[3] + 20.0, 2.0)};
    const double lin = -1.0 + 0.6 * z[0] - 0.4 * z[1] + 0.2 * z[2] - 0.5 * z[3];
    return finish_unit(u, expit(-0.2 * z[0] - 0.6 * z[1] + 0.9 * z[3]), expit(lin + 1.2), expit(lin));
  }
  double sampling(const PhaseOneView& v) const override {
    // Invert the observed transforms back to the first two latent normals.
    const double z1 = 2.0 * std::log(v.w1);
    const double z2 = std::cbrt(v.w2);
    return expit(-0.1 * z1 + 0.1 * z2);
  }
};

class MissingRate final : public Model {
 public:
  explicit MissingRate(double intercept) : intercept_(intercept) {}
  Unit covariates(Philox& rng) const override {
    Unit u;
    for (auto& w : u.w) w = 1.0 + rng.normal();
    u.latent = u.w;
    const auto& w = u.w;
    const double base = 0.1 * w[0] * w[0] - 0.01 * w[1] * w[1] * w[1] + 0.2 * w[2] - 0.1 * w[3];
    return finish_unit(u, expit(-0.2 * w[0] - 0.6 * w[1] + 0.2 * w[3]), expit(base + 0.6 + 0.5 * w[1] * w[1]),
                       expit(base));
  }
  double sampling(const PhaseOneView& v) const override { return expit(intercept_ + 0.2 * v.w1 + 0.2 * v.y); }

 private:
  double intercept_;
};

double gap_effect(double w1, double w2) {
  return 2.5 * (w2 > 1.0 ? 1.0 : 0.0) - 2.5 * (w2 < 0.0 ? 1.0 : 0.0) + 2.0 * std::sin(w1);
}

class RakingGap final : public Model {
 public:
  explicit RakingGap(double gamma) : gamma_(gamma) {}
  Unit covariates(Philox& rng) const override {
    Unit u;
    for (auto& w : u.w) w = 1.0 + rng.normal();
    u.latent = u.w;
    const auto& w = u.w;
    const double q0 = -0.3 + 0.4 * w[0] - 0.4 * w[1] + 0.2 * w[2] - 0.1 * w[3];
    return finish_unit(u, expit(-0.2 * w[0] - 0.6 * w[1] + 0.2 * w[3]), q0 + gamma_ * gap_effect(w[0], w[1]), q0);
  }
  bool binary() const override { return false; }
  double sampling(const PhaseOneView& v) const override { return expit(0.5 * v.w1); }

 private:
  double gamma_;
};

// The transformed-covariate design with the treatment coefficients doubled:
// true propensities reach about 0.01 and the main-term fit on the observed
// covariates produces far more extreme ones.
class NearPositivity final : public Model {
 public:
  Unit covariates(Philox& rng) const override {
    Unit u = kang_.covariates(rng);
    const auto& z = u.latent;
    u.g1 = expit(-0.4 * z[0] - 1.2 * z[1] + 1.8 * z[3]);
    return u;
  }
  double sampling(const PhaseOneView& v) const override { return kang_.sampling(v); }

 private:
  KangDr kang_;
};

std::unique_ptr<Model> make_model(const DgpSpec& spec) {
  switch (spec.id) {
    case DgpId::kang_dr: return std::make_unique<KangDr>();
    case DgpId::missing_rate: return std::make_unique<MissingRate>(spec.intercept);
    case DgpId::raking_gap: return std::make_unique<RakingGap>(spec.gamma);
    case DgpId::near_positivity: return std::make_unique<NearPositivity>();
  }
  throw std::invalid_argument("unknown DGP");
}

// Probabilists' Gauss-Hermite rule (weight exp(-x^2/2)/sqrt(2 pi)) by Golub-Welsch.
struct Quadrature {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

Quadrature gauss_hermite(int points) {
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(points, points);
  for (int k = 1; k < points; ++k) jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  return {eig.eigenvalues(), eig.eigenvectors().row(0).transpose().cwiseAbs2()};
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace

std::string dgp_name(DgpId id) {
  switch (id) {
    case DgpId::kang_dr: return "kang_dr";
    case DgpId::missing_rate: return "missing_rate";
    case DgpId::raking_gap: return "raking_gap";
    case DgpId::near_positivity: return "near_positivity";
  }
  throw std::invalid_argument("unknown DGP");
}

std::optional<DgpId> parse_dgp(const std::string& name) {
  for (DgpId id : {DgpId::kang_dr, DgpId::missing_rate, DgpId::raking_gap, DgpId::near_positivity})
    if (dgp_name(id) == name) return id;
  return std::nullopt;
}

Draw generate(const DgpSpec& spec) {
  if (spec.n < 1) throw std::invalid_argument("DGP sample size must be positive");
  const auto model = make_model(spec);
  Philox rng(spec.seed);
  const Eigen::Index n = spec.n;
  Truth truth{Eigen::VectorXd(n), Eigen::VectorXd(n), Eigen::VectorXd(n), Eigen::VectorXd(n),
              Eigen::MatrixXd(n, 4), Eigen::MatrixXd(n, 4)};
  std::vector<ObservedRecord> records(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const Unit u = model->covariates(rng);
    const int a = rng.bernoulli(u.g1) ? 1 : 0;
    const double mean = a == 1 ? u.q1 : u.q0;
    const double y = model->binary() ? (rng.bernoulli(mean) ? 1.0 : 0.0) : mean + rng.normal();
    const double pi = model->sampling({u.w[0], u.w[1], a, y});
    const int delta = rng.bernoulli(pi) ? 1 : 0;

    auto& r = records[static_cast<std::size_t>(i)];
    r.w1 = Eigen::Vector2d(u.w[0], u.w[1]);
    r.a = a;
    r.y = y;
    r.delta = delta;
    if (delta == 1) r.w2 = Eigen::VectorXd(Eigen::Vector2d(u.w[2], u.w[3]));

    truth.pi(i) = pi;
    truth.g1(i) = u.g1;
    truth.q1(i) = u.q1;
    truth.q0(i) = u.q0;
    for (int j = 0; j < 4; ++j) {
      truth.latent(i, j) = u.latent[static_cast<std::size_t>(j)];
      truth.w_full(i, j) = u.w[static_cast<std::size_t>(j)];
    }
  }
  const OutcomeKind kind = model->binary() ? OutcomeKind::binary : OutcomeKind::continuous;
  return {Dataset(records, kind), std::move(truth)};
}

double true_psi(const DgpSpec& spec, Eigen::Index n_mc, std::uint64_t seed) {
  const auto model = make_model(spec);
  Philox rng(seed);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n_mc; ++i) {
    const Unit u = model->covariates(rng);
    sum += u.q1 - u.q0;
  }
  return sum / static_cast<double>(n_mc);
}

double reference_psi(const DgpSpec& spec) {
  const Quadrature gh = gauss_hermite(64);
  const auto m = gh.nodes.size();
  switch (spec.id) {
    case DgpId::kang_dr:
    case DgpId::near_positivity: {
      // The outcome's latent index is 0.9 U with U standard normal.
      double s = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        const double u = 0.9 * gh.nodes(i);
        s += gh.weights(i) * (expit(0.2 + u) - expit(-1.0 + u));
      }
      return s;
    }
    case DgpId::missing_rate: {
      // 0.2 W3 - 0.1 W4 is normal with mean 0.1 and variance 0.05.
      const double sd = std::sqrt(0.05);
      double s = 0.0;
      for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
          for (Eigen::Index k = 0; k < m; ++k) {
            const double w1 = 1.0 + gh.nodes(i), w2 = 1.0 + gh.nodes(j), lin = 0.1 + sd * gh.nodes(k);
            const double base = 0.1 * w1 * w1 - 0.01 * w2 * w2 * w2 + lin;
            s += gh.weights(i) * gh.weights(j) * gh.weights(k) *
                 (expit(base + 0.6 + 0.5 * w2 * w2) - expit(base));
          }
      return s;
    }
    case DgpId::raking_gap:
      // E sin(W1) = sin(1) exp(-1/2) for W1 ~ N(1, 1).
      return spec.gamma * (2.5 * 0.5 - 2.5 * normal_cdf(-1.0) + 2.0 * std::sin(1.0) * std::exp(-0.5));
  }
  throw std::invalid_argument("unknown DGP");
}

double census_psi(const DgpSpec& spec, Eigen::Index n_mc, std::uint64_t seed) {
  const auto model = make_model(spec);
  Philox rng(seed);
  Eigen::MatrixXd x(n_mc, 6);
  Eigen::VectorXd y(n_mc);
  for (Eigen::Index i = 0; i < n_mc; ++i) {
    const Unit u = model->covariates(rng);
    const int a = rng.bernoulli(u.g1) ? 1 : 0;
    const double mean = a == 1 ? u.q1 : u.q0;
    y(i) = model->binary() ? (rng.bernoulli(mean) ? 1.0 : 0.0) : mean + rng.normal();
    x.row(i) << 1.0, a, u.w[0], u.w[1], u.w[2], u.w[3];
  }
  const Family family = model->binary() ? Family::bernoulli : Family::gaussian;
  const GlmFit fit = fit_glm(x, y, Eigen::VectorXd::Ones(n_mc), family);
  x.col(1).setOnes();
  const Eigen::VectorXd mu1 = fit.predict(x);
  x.col(1).setZero();
  const Eigen::VectorXd mu0 = fit.predict(x);
  return (mu1 - mu0).mean();
}

}  // namespace twophase
