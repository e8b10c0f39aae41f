#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace hiertopics {

// splitmix64 finalizer; used to derive independent seeds from a base seed.
inline constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic RNG wrapper. All draws go through explicit arithmetic on
// mt19937_64 output so results are reproducible bit-for-bit for a given
// seed, independent of the standard library's distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n), n >= 1.
  std::size_t below(std::size_t n) {
    auto v = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return v < n ? v : n - 1;
  }

  // Index drawn proportionally to non-negative weights (need not be
  // normalized). total must equal the sum of weights.
  std::size_t categorical(std::span<const double> weights, double total) {
    double u = uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return i;
    }
    return weights.size() - 1;
  }

  std::size_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    return categorical(weights, total);
  }

  double normal() {
    // Box-Muller; uses two uniforms per draw.
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  // Marsaglia-Tsang; boosted for shape < 1.
  double gamma(double shape) {
    if (shape < 1.0) {
      double u = 1.0 - uniform();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      double u = 1.0 - uniform();
      if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
        return d * v;
      }
    }
  }

  void dirichlet(std::span<const double> alpha, std::span<double> out) {
    double sum = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      out[i] = gamma(alpha[i]);
      sum += out[i];
    }
    for (std::size_t i = 0; i < alpha.size(); ++i) out[i] /= sum;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace hiertopics
