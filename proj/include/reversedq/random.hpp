#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string_view>

namespace reversedq {

/// SplitMix64 finalizer. Used to derive independent seeds from a root seed.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_label(std::string_view label) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Derives the seed of a named sub-stream. Distinct labels give
/// statistically independent streams for the same root.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::string_view label) noexcept {
  return splitmix64(splitmix64(root) ^ hash_label(label));
}

/// A deterministic random stream. All sampling in the library goes through
/// this type so that a root seed fixes every draw.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  /// Independent child stream keyed by the construction seed and a label.
  Rng split(std::string_view label) const { return Rng(derive_seed(seed_, label)); }

  std::uint64_t seed() const { return seed_; }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1).
  double uniform_open() {
    double u;
    do {
      u = uniform();
    } while (u == 0.0);
    return u;
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer on [0, n).
  std::size_t index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("Rng::index: empty range");
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return static_cast<std::size_t>(x % bound);
  }

  /// Standard normal via Marsaglia's polar method (no cached second value,
  /// so the stream position depends only on the number of calls).
  double normal() {
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    return u * std::sqrt(-2.0 * std::log(s) / s);
  }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// log of a Gamma(shape, 1) variate. Working in log space keeps shapes far
/// below one usable: Gamma(0.05) draws underflow a double routinely.
inline double log_gamma_sample(double shape, Rng& rng) {
  if (!(shape > 0.0) || !std::isfinite(shape))
    throw std::invalid_argument("gamma shape must be positive and finite");
  double log_boost = 0.0;
  if (shape < 1.0) {
    // Gamma(a) = Gamma(a + 1) * U^(1/a)
    log_boost = std::log(rng.uniform_open()) / shape;
    shape += 1.0;
  }
  // Marsaglia & Tsang squeeze method.
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform_open();
    if (u < 1.0 - 0.0331 * x * x * x * x ||
        std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
      return std::log(d * v) + log_boost;
  }
}

/// One draw from Beta(alpha, beta), strictly inside (0, 1).
inline double beta_sample(double alpha, double beta, Rng& rng) {
  if (!(alpha > 0.0) || !(beta > 0.0))
    throw std::invalid_argument("beta_sample: shape parameters must be positive");
  const double lx = log_gamma_sample(alpha, rng);
  const double ly = log_gamma_sample(beta, rng);
  // X / (X + Y) = 1 / (1 + exp(ly - lx))
  const double diff = ly - lx;
  double w = diff > 0.0 ? std::exp(-diff) / (1.0 + std::exp(-diff)) : 1.0 / (1.0 + std::exp(diff));
  constexpr double lo = std::numeric_limits<double>::denorm_min();
  const double hi = std::nextafter(1.0, 0.0);
  if (w < lo) w = lo;
  if (w > hi) w = hi;
  return w;
}

}  // namespace reversedq
