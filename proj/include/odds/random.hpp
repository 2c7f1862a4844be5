#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace odds {

struct RngSeed {
  std::uint64_t value = 0;
};

/// splitmix64 finalizer; used to derive independent sub-streams.
std::uint64_t mix_seed(std::uint64_t x);

/// Seed for the `stream`-th independent sub-stream of `seed`.
RngSeed derive_seed(RngSeed seed, std::uint64_t stream);

/// Deterministic random source. Only the engine (mt19937_64) comes from the
/// standard library; every distribution is computed here so that a seed
/// reproduces the same stream on any conforming toolchain.
class Rng {
 public:
  explicit Rng(RngSeed seed);

  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on (0, 1).
  double uniform_open();
  /// Standard normal (Box-Muller).
  double normal();
  /// Uniform integer in [0, n). n must be positive.
  std::size_t index(std::size_t n);
  /// Standard exponential.
  double exponential();

  /// `k` distinct indices from [0, n), in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace odds
