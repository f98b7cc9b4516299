#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bsc/core.hpp"

namespace bsc {

/// Undirected radius graph: i ~ j iff euclidean_distance(x_i, x_j) < eps, i != j.
/// Neighbor lists are sorted ascending.
struct EpsGraph {
  std::size_t n = 0;
  double eps = 0.0;
  std::vector<std::vector<std::size_t>> adjacency;

  std::size_t edge_count() const;
};

/// Grid-bucketed construction (exact); falls back to the pairwise scan for d > 3.
EpsGraph eps_graph(const PointSet& points, double eps);
/// O(n^2) reference construction.
EpsGraph eps_graph_brute(const PointSet& points, double eps);

class UnionFind {
 public:
  explicit UnionFind(std::size_t n);
  std::size_t find(std::size_t x);
  /// True when x and y were in different sets.
  bool unite(std::size_t x, std::size_t y);
  std::size_t set_count() const { return sets_; }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> rank_;
  std::size_t sets_;
};

/// Partition labels 0..count-1, numbered by the smallest member index.
struct ComponentLabels {
  std::vector<int> labels;
  std::size_t count = 0;
};

ComponentLabels connected_components(const EpsGraph& graph);

/// Classes of the chain relation "linked by steps shorter than tau".
ComponentLabels tau_components(const PointSet& points, double tau);

/// Majority label among the kN nearest refs of every query.
///
/// Refs are ordered canonically by (coordinates lexicographically, label);
/// distance ties go to the earlier ref in that order and vote ties to the
/// smallest label, so the result does not depend on the order of `refs`.
std::vector<int> knn_classify(const PointSet& queries, const PointSet& refs, std::span<const int> ref_labels,
                              std::size_t kN);

}  // namespace bsc
