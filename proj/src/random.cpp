#include "roast/random.hpp"

#include <numeric>

namespace roast {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

RandomSource::RandomSource(std::uint64_t seed) : seed_(seed) {
  std::uint64_t sm = seed;
  for (auto& word : state_) word = splitmix64(sm);
}

RandomSource::result_type RandomSource::operator()() {
  const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

RandomSource RandomSource::split(std::uint64_t stream) const {
  std::uint64_t k = stream * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL;
  std::uint64_t mixed = seed_ ^ splitmix64(k);
  return RandomSource(splitmix64(mixed));
}

double RandomSource::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

std::size_t RandomSource::below(std::size_t n) {
  // Lemire's multiply-shift; bias is < n / 2^64, negligible for our sizes.
  const auto wide = static_cast<unsigned __int128>((*this)()) * n;
  return static_cast<std::size_t>(wide >> 64);
}

std::vector<std::size_t> RandomSource::permutation(std::size_t n) {
  std::vector<std::size_t> out(n);
  std::iota(out.begin(), out.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(out[i - 1], out[below(i)]);
  return out;
}

}  // namespace roast
