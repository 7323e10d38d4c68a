#pragma once

#include <cstdint>
#include <random>

namespace uglms {

/// Seedable, splittable pseudo-random stream.
///
/// A stream is identified by (seed, stream id). Child streams derived with
/// split() are decorrelated from the parent and from each other through a
/// SplitMix64 mix of the identifiers, so experiments can hand independent
/// streams to concurrent runs without sharing state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  /// Independent child stream; the parent state is not advanced.
  Rng split(std::uint64_t child) const;

  double normal() { return normal_(engine_); }
  double normal(double sigma) { return sigma * normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  std::uint64_t next_u64() { return engine_(); }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace uglms
