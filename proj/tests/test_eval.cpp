#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "bsc/eval.hpp"
#include "oracles.hpp"

using namespace bsc;

namespace {

Dataset far_blobs(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Dataset ds;
  ds.name = "far";
  ds.points = PointSet(2);
  ds.truth = Labeling{};
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % 2);
    const double x[2] = {(c ? 1.0 : -1.0) + 0.1 * rng.normal(), 0.1 * rng.normal()};
    ds.points.push_back(x);
    ds.truth->push_back(c);
  }
  return ds;
}

std::vector<int> random_labels(std::size_t n, int k, Rng& rng) {
  std::vector<int> out(n);
  for (auto& l : out) l = static_cast<int>(rng.index(static_cast<std::size_t>(k)));
  return out;
}

}  // namespace

TEST_CASE("ari examples") {
  const std::vector<int> a{0, 0, 1, 1};
  CHECK(ari(a, a) == 1.0);
  CHECK(ari(a, std::vector<int>{0, 1, 0, 1}) == doctest::Approx(-0.5));
  CHECK(ari(a, std::vector<int>{0, 1, 0, 1}) == doctest::Approx(oracle::pair_count_ari(a, {0, 1, 0, 1})));
  CHECK(ari(std::vector<int>{3, 3, 3}, std::vector<int>{1, 1, 1}) == 1.0);
  CHECK_THROWS_AS(ari(a, std::vector<int>{0, 1}), InvalidInput);
}

TEST_CASE("ari symmetry, relabelling and chance level") {
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    const auto a = random_labels(80, 4, rng);
    const auto b = random_labels(80, 3, rng);
    CHECK(ari(a, b) == doctest::Approx(ari(b, a)).epsilon(1e-14));
    std::vector<int> renamed = a;
    for (auto& l : renamed) l = 10 - 3 * l;
    CHECK(ari(renamed, b) == doctest::Approx(ari(a, b)).epsilon(1e-14));
    CHECK(ari(a, a) == doctest::Approx(1.0));
    CHECK(ari(a, b) == doctest::Approx(oracle::pair_count_ari(a, b)).epsilon(1e-12));
  }
  double mean = 0.0;
  for (int t = 0; t < 100; ++t) mean += ari(random_labels(1000, 3, rng), random_labels(1000, 3, rng));
  CHECK(std::abs(mean / 100) <= 0.02);
}

TEST_CASE("ari treats -1 as an ordinary class") {
  const std::vector<int> a{-1, -1, 0, 0};
  const std::vector<int> b{5, 5, 6, 6};
  CHECK(ari(a, b) == 1.0);
}

TEST_CASE("dbscan") {
  const Dataset ds = far_blobs(200, 2);
  const Labeling l = dbscan(ds.points, 0.2, 5);
  CHECK(std::count(l.begin(), l.end(), -1) == 0);
  CHECK(std::set<int>(l.begin(), l.end()).size() == 2);
  CHECK(ari(l, *ds.truth) == 1.0);

  const Labeling tiny = dbscan(ds.points, 1e-9, 5);
  CHECK(std::all_of(tiny.begin(), tiny.end(), [](int v) { return v == -1; }));
  CHECK_THROWS_AS(dbscan(ds.points, 0.0, 5), InvalidInput);
  CHECK_THROWS_AS(dbscan(ds.points, 0.1, 0), InvalidInput);
}

TEST_CASE("dbscan matches the reachability definition") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    PointSet pts(2);
    for (int i = 0; i < 300; ++i) {
      const double x[2] = {rng.uniform(), rng.uniform()};
      pts.push_back(x);
    }
    const double eps = 0.04 + 0.01 * static_cast<double>(seed);
    const Labeling got = dbscan(pts, eps, 5);
    const oracle::DbscanTruth want = oracle::dbscan_definition(pts, eps, 5);
    // Core points: same partition. Border points: one of the allowed clusters. Noise: -1.
    std::vector<int> core_got;
    std::vector<int> core_want;
    std::map<int, int> want_to_got;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (want.core_component[i] >= 0) {
        core_got.push_back(got[i]);
        core_want.push_back(want.core_component[i]);
        want_to_got[want.core_component[i]] = got[i];
      }
    }
    CHECK(oracle::same_partition(core_got, core_want));
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (want.core_component[i] >= 0) continue;
      if (want.noise[i]) {
        CHECK(got[i] == -1);
        continue;
      }
      bool allowed = false;
      for (int c : want.border_options[i]) allowed = allowed || want_to_got[c] == got[i];
      CHECK(allowed);
    }
  }
}

TEST_CASE("dbscan core points do not depend on input order") {
  Rng rng(4);
  PointSet pts(2);
  for (int i = 0; i < 200; ++i) {
    const double x[2] = {rng.uniform(), rng.uniform()};
    pts.push_back(x);
  }
  std::vector<std::size_t> perm(pts.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  rng.shuffle(std::span<std::size_t>(perm));
  const auto a = dbscan(pts, 0.07, 5);
  const auto b = dbscan(pts.subset(perm), 0.07, 5);
  const auto truth = oracle::dbscan_definition(pts, 0.07, 5);
  std::vector<int> ca;
  std::vector<int> cb;
  for (std::size_t j = 0; j < perm.size(); ++j) {
    if (truth.core_component[perm[j]] < 0) continue;
    ca.push_back(a[perm[j]]);
    cb.push_back(b[j]);
  }
  CHECK(oracle::same_partition(ca, cb));
}

TEST_CASE("kmeans") {
  const Dataset ds = far_blobs(100, 3);
  const KMeansResult one = kmeans(ds.points, 1, 0);
  CHECK(std::all_of(one.labels.begin(), one.labels.end(), [](int v) { return v == 0; }));
  double mx = 0.0;
  for (std::size_t i = 0; i < ds.points.size(); ++i) mx += ds.points[i][0];
  CHECK(one.centroids[0][0] == doctest::Approx(mx / 100));

  PointSet few(2);
  for (int i = 0; i < 6; ++i) {
    const double x[2] = {static_cast<double>(i), static_cast<double>(i * i)};
    few.push_back(x);
  }
  const KMeansResult all = kmeans(few, 6, 1);
  CHECK(std::set<int>(all.labels.begin(), all.labels.end()).size() == 6);
  CHECK(all.inertia == doctest::Approx(0.0));
  CHECK_THROWS_AS(kmeans(few, 7, 1), InvalidInput);
  CHECK_THROWS_AS(kmeans(few, 0, 1), InvalidInput);

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Dataset b = far_blobs(200, seed + 10);
    CHECK(ari(kmeans(b.points, 2, seed).labels, *b.truth) == 1.0);
  }
  CHECK(kmeans(ds.points, 3, 5).labels == kmeans(ds.points, 3, 5).labels);
}

TEST_CASE("kmeans copes with duplicate points") {
  PointSet same(1);
  for (int i = 0; i < 10; ++i) {
    const double x[1] = {2.0};
    same.push_back(x);
  }
  const KMeansResult r = kmeans(same, 3, 1);
  CHECK(r.labels.size() == 10);
  CHECK(r.inertia == 0.0);
}

TEST_CASE("parse and print methods") {
  CHECK(parse_method("forest") == Method::forest);
  CHECK(parse_method("ours") == Method::forest);
  CHECK(parse_method("dbscan") == Method::dbscan);
  CHECK_FALSE(parse_method("spectral").has_value());
  CHECK(to_string(Method::kmeans) == "kmeans");
}

TEST_CASE("default grids follow the published ranges") {
  const ParamGrid g;
  CHECK(g.dbscan_eps.size() == 30);
  CHECK(g.dbscan_eps.front() == doctest::Approx(0.01));
  CHECK(g.dbscan_eps.back() == doctest::Approx(0.30));
  CHECK(g.kmeans_k == std::vector<std::size_t>{2, 3, 4, 5, 6, 7, 8, 9, 10});
  CHECK(g.size(Method::forest) == 10 * 8 * 3 * 5);
  CHECK(g.trees == 100);
}

TEST_CASE("benchmark on a single grid point echoes the run") {
  const Dataset ds = far_blobs(120, 5);
  ParamGrid g;
  g.dbscan_eps = {0.2};
  const MethodReport r = benchmark(ds, Method::dbscan, g, 3, 0);
  REQUIRE(r.grid.size() == 1);
  CHECK(r.grid[0].aris.size() == 1);
  CHECK(r.best_point().mean_ari == ari(dbscan(ds.points, 0.2, 5), *ds.truth));

  g.kmeans_k = {2, 3};
  const MethodReport k = benchmark(ds, Method::kmeans, g, 4, 9);
  CHECK(k.grid[0].aris.size() == 4);
  CHECK(k.best_point().mean_ari >= k.grid[1].mean_ari);
  CHECK(k.grid[0].aris[1] == ari(kmeans(ds.points, 2, repeat_seed(9, 1)).labels, *ds.truth));

  Dataset bare = ds;
  bare.truth.reset();
  CHECK_THROWS_AS(benchmark(bare, Method::kmeans, g, 1, 0), InvalidInput);
  g.kmeans_k.clear();
  CHECK_THROWS_AS(benchmark(ds, Method::kmeans, g, 1, 0), InvalidInput);
}

TEST_CASE("benchmark records forest failures as zero") {
  const Dataset ds = far_blobs(120, 6);
  ParamGrid g;
  g.trees = 5;
  g.split_ratio = {0.2};
  g.eps_quantile = {0.05};
  g.knn = {1};
  g.clusters = {2, 50};
  g.threads = 1;
  const MethodReport r = benchmark(ds, Method::forest, g, 2, 1);
  REQUIRE(r.grid.size() == 2);
  CHECK(r.grid[1].failures == 2);
  CHECK(r.grid[1].mean_ari == 0.0);
  CHECK(r.best == 0);
}

TEST_CASE("report ordering and serialisation") {
  BenchmarkReport rep;
  const Dataset a = far_blobs(60, 1);
  Dataset b = far_blobs(60, 2);
  b.name = "alpha";
  ParamGrid g;
  g.kmeans_k = {2};
  g.dbscan_eps = {0.2};
  rep.entries.push_back(benchmark(a, Method::kmeans, g, 1, 0));
  rep.entries.push_back(benchmark(b, Method::kmeans, g, 1, 0));
  rep.entries.push_back(benchmark(a, Method::dbscan, g, 1, 0));
  rep.sort();
  CHECK(rep.entries[0].dataset == "alpha");
  CHECK(rep.entries[1].method == Method::dbscan);
  CHECK(rep.entries[2].method == Method::kmeans);

  const std::string csv = rep.to_csv(false);
  CHECK(csv.rfind("dataset,method,params,mean_ari,std_ari,runtime_ms\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  CHECK(rep.to_json(false).dump().find("runtime_ms") == std::string::npos);
  CHECK(rep.to_json(true).dump().find("runtime_ms") != std::string::npos);
  const std::string table = rep.to_table_csv();
  CHECK(table.rfind("dataset,kmeans,dbscan\n", 0) == 0);
}

TEST_CASE("standardize") {
  const Dataset ds = far_blobs(100, 7);
  const PointSet z = standardize(ds.points);
  for (std::size_t k = 0; k < 2; ++k) {
    double m = 0.0;
    double v = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) m += z[i][k];
    m /= 100;
    for (std::size_t i = 0; i < z.size(); ++i) v += (z[i][k] - m) * (z[i][k] - m);
    CHECK(std::abs(m) < 1e-12);
    CHECK(v / 100 == doctest::Approx(1.0));
  }
}
