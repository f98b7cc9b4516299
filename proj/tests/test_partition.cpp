#include "doctest.h"

#include <cmath>

#include "bsc/partition.hpp"

using namespace bsc;

namespace {

double leaf_volume_sum(const Partition& p) {
  double v = 0.0;
  for (const Box& c : p.cells()) v += c.volume();
  return v;
}

PointSet left_half_points(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  PointSet pts(2);
  for (std::size_t i = 0; i < n; ++i) {
    const double x[2] = {-1.0 + rng.uniform(), -1.0 + 2.0 * rng.uniform()};
    pts.push_back(x);
  }
  return pts;
}

}  // namespace

TEST_CASE("init_partition") {
  const Partition p2 = init_partition(Box::cube(2, 1.0));
  CHECK(p2.cell_count() == 1);
  CHECK(p2.split_count() == 0);
  CHECK(p2.cells()[0].volume() == doctest::Approx(4.0));
  CHECK(init_partition(Box::cube(3, 1.0)).cells()[0].volume() == doctest::Approx(8.0));
  CHECK_THROWS_AS(Box({0.0, -1.0}, {0.0, 1.0}), InvalidInput);
  CHECK_THROWS_AS(Box({1.0}, {0.5}), InvalidInput);
}

TEST_CASE("split_once conserves volume and adds one leaf") {
  Partition p = init_partition(Box::cube(2, 1.0));
  Rng rng(3);
  split_once(p, SplitMode::pure, nullptr, rng);
  CHECK(p.cell_count() == 2);
  CHECK(p.split_count() == 1);
  CHECK(leaf_volume_sum(p) == doctest::Approx(4.0).epsilon(1e-12));
  for (int i = 0; i < 3; ++i) split_once(p, SplitMode::pure, nullptr, rng);
  CHECK(p.cell_count() == 5);

  const PointSet pts = left_half_points(50, 1);
  Partition a = init_partition(Box::cube(2, 1.0));
  for (int i = 0; i < 4; ++i) split_once(a, SplitMode::adaptive, &pts, rng);
  CHECK(a.cell_count() == 5);
}

TEST_CASE("adaptive split needs in-box data") {
  Partition p = init_partition(Box::cube(2, 1.0));
  Rng rng(1);
  PointSet none(2);
  CHECK_THROWS_AS(split_once(p, SplitMode::adaptive, &none, rng), InvalidInput);
  CHECK_THROWS_AS(split_once(p, SplitMode::adaptive, nullptr, rng), InvalidInput);
  PointSet outside(2);
  const double far[2] = {5.0, 5.0};
  outside.push_back(far);
  CHECK_THROWS_AS(split_once(p, SplitMode::adaptive, &outside, rng), InvalidInput);
}

TEST_CASE("split records stay in range") {
  Rng rng(11);
  const Partition p = build_partition(Box::cube(3, 1.0), 200, SplitMode::pure, nullptr, rng);
  for (const SplitRecord& s : p.splits()) {
    CHECK(s.dim < 3);
    CHECK(s.ratio > 0.0);
    CHECK(s.ratio < 1.0);
  }
  for (const Box& c : p.cells()) CHECK(c.volume() > 0.0);
}

TEST_CASE("build_partition") {
  Rng r0(42);
  const Partition zero = build_partition(Box::cube(2, 1.0), 0, SplitMode::pure, nullptr, r0);
  CHECK(zero.cell_count() == 1);

  Rng a(42);
  Rng b(42);
  const Partition pa = build_partition(Box::cube(2, 1.0), 7, SplitMode::pure, nullptr, a);
  const Partition pb = build_partition(Box::cube(2, 1.0), 7, SplitMode::pure, nullptr, b);
  REQUIRE(pa.cell_count() == pb.cell_count());
  for (std::size_t i = 0; i < pa.cell_count(); ++i) {
    CHECK(pa.cells()[i].lower == pb.cells()[i].lower);
    CHECK(pa.cells()[i].upper == pb.cells()[i].upper);
  }

  Rng c(5);
  const Partition big = build_partition(Box::cube(2, 1.0), 100, SplitMode::pure, nullptr, c);
  CHECK(big.cell_count() == 101);
  CHECK(std::abs(leaf_volume_sum(big) - 4.0) <= 4.0 * 1e-9);
}

TEST_CASE("volume conservation holds for large p in both modes") {
  const PointSet pts = left_half_points(300, 2);
  for (SplitMode mode : {SplitMode::pure, SplitMode::adaptive}) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      Rng rng(seed);
      const Partition p = build_partition(Box::cube(2, 1.0), 10000, mode, &pts, rng);
      CHECK(p.cell_count() == 10001);
      CHECK(std::abs(leaf_volume_sum(p) - 4.0) <= 4.0 * 1e-9);
    }
  }
}

TEST_CASE("locate") {
  const Partition p0 = init_partition(Box::cube(2, 1.0));
  const double centre[2] = {0.0, 0.0};
  const double out[2] = {1.5, 0.0};
  const double corner[2] = {1.0, 1.0};
  CHECK(p0.locate(centre) == 0);
  CHECK(p0.locate(out) == Partition::outside);
  CHECK(p0.locate(corner) == 0);  // closed upper face of the root

  Rng rng(9);
  const Partition p = build_partition(Box::cube(2, 1.0), 60, SplitMode::pure, nullptr, rng);
  Rng pick(10);
  for (int i = 0; i < 1000; ++i) {
    const double x[2] = {-1.0 + 2.0 * pick.uniform(), -1.0 + 2.0 * pick.uniform()};
    const std::size_t c = p.locate(x);
    REQUIRE(c != Partition::outside);
    CHECK(p.cells()[c].contains(x));
  }
  // Interior points of every leaf map back to that leaf.
  for (std::size_t c = 0; c < p.cell_count(); ++c) {
    const Box& b = p.cells()[c];
    const double mid[2] = {0.5 * (b.lower[0] + b.upper[0]), 0.5 * (b.lower[1] + b.upper[1])};
    CHECK(p.locate(mid) == c);
  }
}

TEST_CASE("locate on a split boundary uses half-open cells") {
  Partition p = init_partition(Box::cube(1, 1.0));
  p.apply({0, 0, 0.5});
  const double at_cut[1] = {0.0};
  const double below[1] = {-0.5};
  CHECK(p.locate(below) == 0);
  CHECK(p.locate(at_cut) == 1);  // lower child keeps index 0, upper child starts at the cut
}

TEST_CASE("adaptive never splits an empty leaf") {
  const PointSet pts = left_half_points(100, 4);
  Partition p = init_partition(Box::cube(2, 1.0));
  Rng rng(4);
  for (int i = 0; i < 300; ++i) {
    const std::size_t before = p.cell_count();
    split_once(p, SplitMode::adaptive, &pts, rng);
    const std::size_t cell = p.splits().back().cell;
    REQUIRE(p.cell_count() == before + 1);
    // The split cell held a data point before the split, so one of its two
    // children still holds it now.
    std::size_t inside = 0;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      const std::size_t c = p.locate(pts[j]);
      if (c == cell || c == before) ++inside;
    }
    CHECK(inside > 0);
  }
}

TEST_CASE("adaptive yields more nonempty cells than pure on concentrated data") {
  const PointSet pts = left_half_points(100, 8);
  double pure = 0.0;
  double adaptive = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng a(seed);
    Rng b(seed);
    pure += static_cast<double>(nonempty_cell_count(build_partition(Box::cube(2, 1.0), 1000, SplitMode::pure, &pts, a), pts));
    adaptive +=
        static_cast<double>(nonempty_cell_count(build_partition(Box::cube(2, 1.0), 1000, SplitMode::adaptive, &pts, b), pts));
  }
  CHECK(adaptive > pure);
}
