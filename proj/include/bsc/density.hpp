#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"

#include "bsc/core.hpp"
#include "bsc/data.hpp"
#include "bsc/partition.hpp"

namespace bsc {

/// Histogram density on the leaves of a partition: empirical mass of each
/// leaf divided by its volume, zero outside the root.
struct DensityTree {
  Partition partition;
  std::vector<double> cell_mass;
  std::vector<double> cell_density;
  double outside_mass = 0.0;
  std::size_t n_fit = 0;

  double eval(std::span<const double> x) const {
    const std::size_t c = partition.locate(x);
    return c == Partition::outside ? 0.0 : cell_density[c];
  }
};

DensityTree fit_tree(Partition partition, const PointSet& data);
inline double eval_tree(const DensityTree& tree, std::span<const double> x) { return tree.eval(x); }

/// Probability floor applied before taking logs in `anll`.
inline constexpr double kAnllFloor = 1e-12;

/// Average negative log-likelihood of `density` over `points`.
template <typename DensityFn>
double anll(DensityFn&& density, const PointSet& points) {
  if (points.empty()) throw InvalidInput("anll: empty validation set");
  double sum = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double f = density(points[i]);
    sum -= std::log(f > kAnllFloor ? f : kAnllFloor);
  }
  return sum / static_cast<double>(points.size());
}

/// Knobs shared by every tree in a forest.
struct TreeParams {
  std::size_t candidates = 5;     // k
  std::size_t splits = 0;         // p
  SplitMode mode = SplitMode::adaptive;
  double holdout_fraction = 0.3;
};

struct BestScoredTree {
  DensityTree tree;
  std::vector<double> candidate_anll;  // holdout ANLL of every candidate
  std::size_t winner = 0;
};

/// Draws `params.candidates` random partitions of `root`, scores each by the
/// holdout ANLL of a tree fitted on the training split, and refits the winner
/// on all of `data`.
///
/// The train/holdout split is a shuffle drawn from Rng::stream(seed, tree, 0);
/// candidate c uses Rng::stream(seed, tree, c + 1). Adaptive candidates are
/// steered by the training split only.
BestScoredTree best_scored_tree(const PointSet& data, const Box& root, const TreeParams& params,
                                std::uint64_t seed, std::size_t tree_index);

struct ForestParams {
  std::size_t trees = 100;       // m
  TreeParams tree;
  std::uint64_t seed = 0;
  double margin = 0.05;          // scale_to_box margin around the data
  std::size_t threads = 0;       // 0: hardware concurrency
};

/// Average of `trees` best-scored density trees on [-1, 1]^d after min-max
/// scaling of the data.
class DensityForest {
 public:
  DensityForest(std::vector<DensityTree> trees, AffineTransform transform);

  std::span<const DensityTree> trees() const { return trees_; }
  const Box& root() const { return root_; }
  const AffineTransform& transform() const { return transform_; }
  std::size_t dim() const { return root_.dim(); }

  /// Density in scaled coordinates, x given in raw data coordinates.
  double eval(std::span<const double> x) const;
  /// Density at a point already in scaled coordinates.
  double eval_scaled(std::span<const double> y) const;
  /// Density with respect to Lebesgue measure in raw data coordinates.
  double eval_raw_density(std::span<const double> x) const { return eval(x) * transform_.jacobian(); }

  /// eval() at every row of `points`.
  std::vector<double> eval_all(const PointSet& points) const;

  /// Diameters of every leaf of every tree, mapped back to raw coordinates.
  std::vector<double> leaf_diameters_raw() const;

  nlohmann::json to_json() const;
  static DensityForest from_json(const nlohmann::json& j);

 private:
  std::vector<DensityTree> trees_;
  Box root_;
  AffineTransform transform_;
};

DensityForest fit_forest(const PointSet& data, const ForestParams& params);
inline double eval_forest(const DensityForest& forest, std::span<const double> x) { return forest.eval(x); }

}  // namespace bsc
