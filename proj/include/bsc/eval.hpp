#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "bsc/clustering.hpp"
#include "bsc/data.hpp"

namespace bsc {

/// Adjusted Rand index from the contingency table of the two labelings.
/// Every label value, -1 included, is an ordinary class. When both labelings
/// put all points in one class the index is defined as 1.
double ari(std::span<const int> a, std::span<const int> b);

/// DBSCAN with core/border/noise semantics; noise is -1. Points are visited in
/// index order, clusters are numbered in order of discovery and a border
/// point reachable from several clusters joins the first one.
Labeling dbscan(const PointSet& points, double eps, std::size_t min_pts);

struct KMeansResult {
  Labeling labels;
  PointSet centroids;
  double inertia = 0.0;
  std::size_t iterations = 0;
};

/// Lloyd iterations from k-means++ seeding, until the assignment stops
/// changing or `max_iter` rounds have run. An emptied cluster is reseeded at
/// the point farthest from its nearest centroid.
KMeansResult kmeans(const PointSet& points, std::size_t k, std::uint64_t seed, std::size_t max_iter = 300);

enum class Method { forest, dbscan, kmeans };

std::string_view to_string(Method m);
std::optional<Method> parse_method(std::string_view name);

/// Parameter grid of one method. Only the fields of that method are used.
struct ParamGrid {
  // forest
  std::vector<double> split_ratio{0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
  std::vector<double> eps_quantile{0.01, 0.03, 0.05, 0.07, 0.09, 0.12, 0.15, 0.20};
  std::vector<std::size_t> knn{1, 2, 5};
  std::vector<std::size_t> clusters{2, 3, 4, 5, 6};
  std::size_t trees = 100;
  std::size_t candidates = 5;
  double background_quantile = 0.1;
  SplitMode mode = SplitMode::adaptive;
  // dbscan
  std::vector<double> dbscan_eps = default_dbscan_eps();
  std::size_t min_pts = 5;
  // kmeans
  std::vector<std::size_t> kmeans_k{2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::size_t kmeans_max_iter = 300;

  // z-score every axis before any method runs; off keeps raw coordinates
  bool standardize = false;
  std::size_t threads = 0;

  static std::vector<double> default_dbscan_eps();
  std::size_t size(Method m) const;
};

struct GridPointResult {
  std::map<std::string, double> params;
  std::vector<double> aris;      // one per repeat; failed runs score 0
  std::size_t failures = 0;
  double mean_ari = 0.0;
  double std_ari = 0.0;
  double runtime_ms = 0.0;
};

struct MethodReport {
  std::string dataset;
  Method method = Method::forest;
  std::vector<GridPointResult> grid;
  std::size_t best = 0;  // index of the highest mean ARI, first one on ties

  const GridPointResult& best_point() const { return grid.at(best); }
};

struct BenchmarkReport {
  std::vector<MethodReport> entries;  // sorted by (dataset, method)

  void sort();
  /// `with_timing` false leaves runtimes out so reruns are byte-identical.
  nlohmann::json to_json(bool with_timing) const;
  /// dataset,method,params,mean_ari,std_ari,runtime_ms -- one row per
  /// (dataset, method) at the best grid point.
  std::string to_csv(bool with_timing) const;
  /// Best mean ARI laid out datasets x methods.
  std::string to_table_csv() const;
};

/// Runs `method` over the whole grid on `dataset` (which must carry truth).
///
/// Deterministic methods run once per grid point; stochastic ones run
/// `repeats` times with seeds derived from `seed` and the repeat index.
/// For the forest method one forest per (split ratio, repeat) is shared by
/// all grid points with that ratio, which is exactly what independent
/// cluster_forest calls with the same seed would fit. A run that fails
/// (e.g. no valid level) scores ARI 0 and is counted in `failures`.
MethodReport benchmark(const Dataset& dataset, Method method, const ParamGrid& grid, std::size_t repeats,
                       std::uint64_t seed);

/// Seed of repeat `r` in a benchmark seeded with `seed`.
std::uint64_t repeat_seed(std::uint64_t seed, std::size_t r);

/// Per-axis z-score standardisation (zero-variance axes are centred only).
PointSet standardize(const PointSet& points);

}  // namespace bsc
