#include "bsc/core.hpp"
#include "bsc/rng.hpp"

#include <numbers>

namespace bsc {

PointSet::PointSet(std::size_t dim, std::vector<double> coords) : dim_(dim), coords_(std::move(coords)) {
  if (dim_ == 0) {
    if (!coords_.empty()) throw InvalidInput("PointSet: zero dimension with nonempty coordinates");
    return;
  }
  if (coords_.size() % dim_ != 0) {
    throw InvalidInput("PointSet: coordinate count " + std::to_string(coords_.size()) +
                       " is not a multiple of dimension " + std::to_string(dim_));
  }
}

void PointSet::push_back(std::span<const double> point) {
  if (point.size() != dim_) {
    throw InvalidInput("PointSet: point of dimension " + std::to_string(point.size()) +
                       " pushed into set of dimension " + std::to_string(dim_));
  }
  coords_.insert(coords_.end(), point.begin(), point.end());
}

PointSet PointSet::subset(std::span<const std::size_t> indices) const {
  PointSet out(dim_);
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back((*this)[i]);
  return out;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed) {
  std::uint64_t state = seed;
  engine_.seed(splitmix64(state));
}

Rng Rng::stream(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  std::uint64_t state = master;
  std::uint64_t mixed = splitmix64(state);
  state = mixed ^ (a * 0xd1b54a32d192ed03ULL);
  mixed = splitmix64(state);
  state = mixed ^ (b * 0x8cb92ba72f3d8dd7ULL);
  return Rng(splitmix64(state));
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::uniform_open() {
  double u = 0.0;
  while (u == 0.0) u = uniform();
  return u;
}

std::size_t Rng::index(std::size_t n) {
  // Rejection on the top of the range removes modulo bias.
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = engine_();
    if (r >= threshold) return static_cast<std::size_t>(r % bound);
  }
}

double Rng::normal() {
  // Box-Muller, one draw per pair; no cached second value so that the stream
  // position depends only on the call count.
  const double u1 = uniform_open();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace bsc
