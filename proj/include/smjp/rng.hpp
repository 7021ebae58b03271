#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string_view>
#include <vector>

namespace smjp {

/// Counter-based generator: the n-th output is a fixed mixing function of
/// (key, n), so streams can be split or named without shared state.
/// Satisfies UniformRandomBitGenerator. Distributions are implemented here
/// rather than through <random> so sample paths do not depend on the
/// standard library vendor.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) : key_(mix(seed ^ 0x6a09e667f3bcc909ULL)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix(key_ + (++counter_) * kGolden); }

  /// Independent child stream; does not advance this generator.
  Rng split(std::uint64_t stream) const { return Rng(Key{mix(key_ ^ mix(stream * kGolden + 0x3c6ef372fe94f82bULL))}); }

  /// Child stream keyed by a name (FNV-1a hash).
  Rng derive(std::string_view name) const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : name) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return split(h);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1).
  double uniform_open() {
    double u;
    do u = uniform();
    while (u == 0.0);
    return u;
  }

  double exponential(double rate) { return -std::log(uniform_open()) / rate; }

  /// Index drawn with probability proportional to non-negative weights.
  template <typename Range>
  std::size_t categorical(const Range& weights) {
    double total = 0.0;
    std::size_t n = 0;
    for (double w : weights) {
      total += w;
      ++n;
    }
    const double target = uniform() * total;
    double acc = 0.0;
    std::size_t i = 0, last_positive = 0;
    for (double w : weights) {
      if (w > 0.0) last_positive = i;
      acc += w;
      if (target < acc) return i;
      ++i;
    }
    return n == 0 ? 0 : last_positive;
  }

  std::size_t uniform_index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

  /// Flat Dirichlet sample (normalized unit exponentials).
  std::vector<double> dirichlet_flat(std::size_t n) {
    std::vector<double> out(n);
    double total = 0.0;
    for (double& x : out) total += (x = exponential(1.0));
    for (double& x : out) x /= total;
    return out;
  }

  /// Standard normal via Box-Muller (one value per call).
  double normal() { return std::sqrt(-2.0 * std::log(uniform_open())) * std::cos(2.0 * M_PI * uniform()); }

 private:
  struct Key {
    std::uint64_t value;
  };
  explicit Rng(Key key) : key_(key.value) {}

  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace smjp
