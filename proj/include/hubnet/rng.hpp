#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "hubnet/error.hpp"

namespace hubnet {

// Deterministic seeded random stream.
//
// The engine is std::mt19937_64, whose output sequence for a given 64-bit
// seed is fixed by the standard, and every distribution below is implemented
// here rather than taken from <random>, where the algorithms are
// implementation-defined.  Identical seeds therefore produce identical
// streams on every platform.
//
// Substreams: derive(id) mixes the stream's base seed with the id through
// SplitMix64 and returns an independent stream.  Callers split one substream
// per logical unit of work (one per restart, one per observation, ...) so
// results do not depend on scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    // SplitMix64 finalizer over seed advanced by the stream index.
    std::uint64_t z = seed + (stream + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  Rng derive(std::uint64_t stream) const { return Rng(mix(seed_, stream)); }

  std::uint64_t next() { return engine_(); }

  // Uniform on [0,1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform on the open interval (0,1).
  double uniform_open() {
    double u;
    do {
      u = uniform01();
    } while (u == 0.0);
    return u;
  }

  // Unbiased integer in [0, n).
  std::uint64_t uniform_below(std::uint64_t n) {
    if (n == 0) throw Error(Errc::invalid_argument, "uniform_below(0)");
    const std::uint64_t limit =
        (std::numeric_limits<std::uint64_t>::max() / n) * n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  bool bernoulli(double p) { return uniform01() < p; }

  // Standard normal via Box-Muller (second value discarded).
  double normal() {
    const double u1 = uniform_open();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Gamma(shape, 1) by Marsaglia-Tsang, with the boost trick for shape < 1.
  double gamma(double shape) {
    if (!(shape > 0.0)) throw Error(Errc::invalid_argument, "gamma shape <= 0");
    if (shape < 1.0) {
      const double u = uniform_open();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_open();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  // Beta(a, b) on the open interval (0,1).
  double beta(double a, double b) {
    const double x = gamma(a);
    const double y = gamma(b);
    double r = x / (x + y);
    const double lo = std::numeric_limits<double>::min();
    if (r < lo) r = lo;
    if (r > 1.0 - 1e-16) r = 1.0 - 1e-16;
    return r;
  }

  // Index distributed according to the (unnormalized) weights.
  std::size_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0))
      throw Error(Errc::invalid_argument, "categorical weights sum to 0");
    double u = uniform01() * total;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      u -= weights[i];
      if (u < 0.0) return i;
    }
    return weights.size() - 1;
  }

  // In-place Fisher-Yates shuffle (std::shuffle is not portable bit-for-bit).
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace hubnet
