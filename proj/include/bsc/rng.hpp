#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace bsc {

/// Deterministic random source: std::mt19937_64 seeded through splitmix64.
///
/// All derived quantities (uniform reals, bounded integers, normals) are
/// computed here rather than through <random> distributions, whose output is
/// implementation-defined. The same seed therefore yields the same stream on
/// every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Independent stream for a (master, a, b) triple, e.g. (seed, tree, candidate).
  static Rng stream(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on the open interval (0, 1).
  double uniform_open();
  /// Uniform integer on [0, n); n must be positive.
  std::size_t index(std::size_t n);
  double normal();

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace bsc
