#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "bcluster/errors.hpp"

namespace bcluster {

// Counter-style 64-bit generator with explicit (seed, stream) addressing.
// Identical (seed, stream) gives an identical draw sequence on every
// platform; distinct streams are decorrelated by the seeding hash.
// Single-owner: never share one instance across concurrent workers.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0) {
    state_ = mix(seed + 0x9e3779b97f4a7c15ULL * (stream + 1));
    state_ = mix(state_ ^ (stream * 0xbf58476d1ce4e5b9ULL));
  }

  RngStream derive(std::uint64_t substream) const {
    RngStream r(0, 0);
    r.state_ = mix(state_ ^ (0x94d049bb133111ebULL * (substream + 1)));
    return r;
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  // [0, 1)
  double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

  // (0, 1)
  double uniform_pos() {
    double u;
    do {
      u = uniform();
    } while (u <= 0.0);
    return u;
  }

  // 0 .. n-1
  int uniform_int(int n) {
    return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n));
  }

  bool bernoulli(double p) { return uniform() < p; }

  double normal() {
    double u1 = uniform_pos();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  // Gamma(shape, 1) via Marsaglia-Tsang, with the shape<1 boost.
  double gamma(double shape) {
    if (shape < 1.0) {
      double u = uniform_pos();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      double u = uniform_pos();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double beta(double a, double b) {
    double x = gamma(a);
    double y = gamma(b);
    return x / (x + y);
  }

  void dirichlet(std::span<const double> alpha, std::span<double> out) {
    double total = 0.0;
    for (std::size_t l = 0; l < alpha.size(); ++l) {
      out[l] = gamma(alpha[l]);
      total += out[l];
    }
    for (std::size_t l = 0; l < alpha.size(); ++l) out[l] /= total;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t state_;
};

// Draw an index proportional to exp(logits), numerically stable.
int categorical_draw(RngStream& rng, std::span<const double> logits);

}  // namespace bcluster
