#pragma once

// Small random two-phase datasets for the unit tests.

#include <cmath>

#include "twophase/data.hpp"
#include "twophase/glm.hpp"
#include "twophase/rng.hpp"

namespace testing {

struct RandomDataOptions {
  Eigen::Index n = 200;
  bool all_phase2 = false;
  twophase::OutcomeKind kind = twophase::OutcomeKind::binary;
  Eigen::Index w1_dim = 2;
  Eigen::Index w2_dim = 1;
};

inline twophase::Dataset random_dataset(std::uint64_t seed, const RandomDataOptions& opt = {}) {
  using twophase::expit;
  twophase::Philox rng(seed, 77);
  std::vector<twophase::ObservedRecord> records(static_cast<std::size_t>(opt.n));
  for (Eigen::Index i = 0; i < opt.n; ++i) {
    auto& r = records[static_cast<std::size_t>(i)];
    r.w1 = Eigen::VectorXd(opt.w1_dim);
    for (Eigen::Index j = 0; j < opt.w1_dim; ++j) r.w1(j) = rng.normal();
    Eigen::VectorXd w2(opt.w2_dim);
    for (Eigen::Index j = 0; j < opt.w2_dim; ++j) w2(j) = rng.normal();
    const double lin = 0.4 * r.w1(0) - 0.3 * w2.sum();
    r.a = rng.bernoulli(expit(lin)) ? 1 : 0;
    const double mean = -0.2 + 0.5 * r.w1.sum() + 0.7 * r.a + 0.4 * w2.sum() + 0.3 * r.a * w2.sum();
    r.y = opt.kind == twophase::OutcomeKind::binary ? (rng.bernoulli(expit(mean)) ? 1.0 : 0.0)
                                                     : 2.0 * mean + rng.normal();
    const double pi = opt.all_phase2 ? 1.0 : expit(0.3 + 0.5 * r.w1(0) + 0.4 * r.y);
    r.delta = rng.bernoulli(pi) ? 1 : 0;
    // Keep at least a few phase-2 records in each arm.
    if (i < 4) {
      r.delta = 1;
      r.a = static_cast<int>(i % 2);
    }
    if (r.delta == 1) r.w2 = w2;
  }
  return twophase::Dataset(records, opt.kind);
}

}  // namespace testing
