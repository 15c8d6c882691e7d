#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace roast {

// xoshiro256** (Blackman & Vigna), state expanded from the 64-bit seed with
// splitmix64. split(k) seeds a child stream with splitmix64(seed ^ mix(k)),
// so sub-streams depend only on (seed, k) and never on how much of the
// parent stream has been consumed.
//
// Satisfies UniformRandomBitGenerator. Not thread-safe; split per worker.
class RandomSource {
 public:
  using result_type = std::uint64_t;

  explicit RandomSource(std::uint64_t seed = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  std::uint64_t seed() const { return seed_; }
  RandomSource split(std::uint64_t stream) const;

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(*this);
  }
  bool bernoulli(double p) { return uniform() < p; }
  // Uniform integer in [0, n).
  std::size_t below(std::size_t n);
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_{};
};

std::uint64_t splitmix64(std::uint64_t& x);

}  // namespace roast
