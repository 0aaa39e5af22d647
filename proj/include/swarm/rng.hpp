#pragma once

#include <cstdint>
#include <random>

namespace swarm {

// splitmix64 step; derives decorrelated stream seeds from a master seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seeded generator handle. Every environment / worker owns one; there is no
// global RNG anywhere in the library. Distributions are constructed per call
// so the draw sequence is a pure function of the engine state.
class Rng {
public:
  explicit Rng(std::uint64_t seed = 0) : gen_(seed) {}

  void seed(std::uint64_t s) { gen_.seed(s); }

  double normal(double mean, double stddev) {
    if (stddev <= 0.0) return mean;
    std::normal_distribution<double> d(mean, stddev);
    return d(gen_);
  }

  double uniform(double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(gen_);
  }

  // uniform integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    std::uniform_int_distribution<std::uint64_t> d(0, n - 1);
    return d(gen_);
  }

  std::mt19937_64& engine() { return gen_; }
  const std::mt19937_64& engine() const { return gen_; }

private:
  std::mt19937_64 gen_;
};

}  // namespace swarm
