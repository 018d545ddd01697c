#pragma once

#include <cstdint>
#include <random>

namespace hsel {

/// Seeded generator passed explicitly to every randomized routine. Streams
/// derived from the same seed with different ids are independent.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double normal();
  std::uint64_t next() { return engine_(); }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> gauss_;
};

}  // namespace hsel
