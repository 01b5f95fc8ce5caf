#pragma once

#include <cstdint>
#include <random>

namespace idscope {

/// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed of sub-stream `stream` of a master seed (replicates, components, layers).
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

/// Seedable 64-bit generator (mt19937_64 engine) with its own uniform and
/// normal transforms so that samples are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1].
  double uniform_pos() { return 1.0 - uniform(); }
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);
  double normal();

  Rng split(std::uint64_t stream) { return Rng(stream_seed(next_u64(), stream)); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace idscope
