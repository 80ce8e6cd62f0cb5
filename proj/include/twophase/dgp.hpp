#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "twophase/data.hpp"

namespace twophase {

enum class DgpId {
  kang_dr,          // transformed latent normals; double-robustness study
  missing_rate,     // polynomial outcome, Delta driven by W1 and Y
  raking_gap,       // continuous outcome with tunable effect heterogeneity
  near_positivity,  // treatment probabilities reaching deep into the tails
};

struct DgpSpec {
  DgpId id = DgpId::kang_dr;
  Eigen::Index n = 1000;
  std::uint64_t seed = 1;
  double intercept = 1.1;  // missing_rate: intercept of the phase-2 model
  double gamma = 1.0;      // raking_gap: heterogeneity magnitude
};

std::string dgp_name(DgpId id);
std::optional<DgpId> parse_dgp(const std::string& name);

// Per-record values of the generating mechanisms; q1/q0 are on the raw outcome scale.
struct Truth {
  Eigen::VectorXd pi;
  Eigen::VectorXd g1;
  Eigen::VectorXd q1;
  Eigen::VectorXd q0;
  Eigen::MatrixXd latent;  // kang_dr: Z1..Z4; other DGPs: the full covariate vector
  Eigen::MatrixXd w_full;  // all four covariates, uncensored
};

struct Draw {
  Dataset data;
  Truth truth;
};

Draw generate(const DgpSpec& spec);

// Monte-Carlo mean of Q(1,W) - Q(0,W) over n_mc covariate draws.
double true_psi(const DgpSpec& spec, Eigen::Index n_mc, std::uint64_t seed);
// The same expectation by Gauss-Hermite quadrature (closed form for raking_gap).
double reference_psi(const DgpSpec& spec);
// g-computation contrast of the main-term working model fit to n_mc uncensored draws.
double census_psi(const DgpSpec& spec, Eigen::Index n_mc, std::uint64_t seed);

}  // namespace twophase
