#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>

namespace deconv {

// Self-contained xoshiro256++ generator seeded through splitmix64.
// Results are identical across compilers and platforms; the standard
// library distributions are avoided on purpose (std::normal_distribution
// is implementation-defined). Replicate-level streams are derived with
// substream(), so simulation results do not depend on execution order.
class Rng {
public:
  explicit Rng(std::uint64_t seed);

  // Independent stream keyed by (seed, tags...). Used to give every
  // simulation replicate its own generator.
  static Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> tags);

  std::uint64_t next_u64();

  // Uniform double in [0, 1), 53-bit resolution.
  double uniform();

  // Standard normal via the Marsaglia polar method.
  double gaussian();

  // Uniform integer in [0, n), n > 0, unbiased (rejection sampling).
  std::uint64_t uniform_below(std::uint64_t n);

private:
  std::array<std::uint64_t, 4> state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace deconv
