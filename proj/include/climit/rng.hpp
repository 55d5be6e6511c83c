#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace climit {

// Deterministic random source. Distributions are derived by hand from the
// raw 64-bit stream so that sequences are stable across standard library
// implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

  // Uniform in [0, 1).
  double uniform() { return (gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Marsaglia polar method with one cached deviate.
  double normal(double mean = 0.0, double stddev = 1.0) {
    if (has_spare_) {
      has_spare_ = false;
      return mean + stddev * spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return mean + stddev * u * m;
  }

  double log_normal(double mu, double sigma) { return std::exp(normal(mu, sigma)); }

  // Index drawn from an explicit probability vector (assumed to sum to 1).
  std::size_t categorical(const std::vector<double>& probs) {
    const double u = uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return i;
    }
    return probs.empty() ? 0 : probs.size() - 1;
  }

  // Independent stream derived from the original seed, for per-stage use.
  Rng fork(std::uint64_t stream) const {
    // splitmix64 finalizer over (seed, stream)
    std::uint64_t x = seed_ + 0x9e3779b97f4a7c15ULL * (stream + 1);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return Rng(x);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace climit
