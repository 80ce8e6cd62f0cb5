#pragma once

#include <array>
#include <cstdint>

namespace twophase {

// Philox4x32-10 counter-based generator. The 64-bit seed is the key and the
// stream id fills the upper counter words, so (seed, stream) pairs give
// independent sequences without any shared state.
class Philox {
 public:
  using Block = std::array<std::uint32_t, 4>;

  explicit Philox(std::uint64_t seed, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {}

  static Block block(Block counter, std::array<std::uint32_t, 2> key);

  std::uint64_t next_u64();
  // Uniform on (0, 1), never exactly 0 or 1.
  double uniform();
  // Standard normal via Box-Muller; each call consumes two uniforms.
  double normal();
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  Block buffer_{};
  int used_ = 4;
};

}  // namespace twophase
