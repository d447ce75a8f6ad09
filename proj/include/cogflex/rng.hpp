#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace cogflex {

// splitmix64 finalizer; good avalanche, used only to derive seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Independent child seed for stream `stream` of generator seeded `base`.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return mix64(base ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

// Deterministic RNG wrapper. All sampling is hand-rolled on the raw 64-bit
// stream because std::uniform_*_distribution results are
// implementation-defined and would break cross-toolchain reproducibility.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform double in [0, 1) from the high 53 bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, bound) via rejection sampling.
  std::uint64_t uniform_u64(std::uint64_t bound) {
    const std::uint64_t threshold = (-bound) % bound;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  int uniform_int(int bound) {
    return static_cast<int>(uniform_u64(static_cast<std::uint64_t>(bound)));
  }

  // Fisher-Yates; identical order on every platform.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = uniform_u64(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace cogflex
