#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "bsc/core.hpp"
#include "bsc/rng.hpp"

namespace bsc {

/// Axis-parallel box [lower, upper].
struct Box {
  std::vector<double> lower;
  std::vector<double> upper;

  Box() = default;
  /// Throws InvalidInput unless lower[k] < upper[k] in every dimension.
  Box(std::vector<double> lo, std::vector<double> hi);

  /// [-r, r]^d
  static Box cube(std::size_t dim, double r);

  std::size_t dim() const { return lower.size(); }
  double side(std::size_t k) const { return upper[k] - lower[k]; }
  double volume() const;
  double diameter() const;
  /// Closed-box membership.
  bool contains(std::span<const double> x) const;
};

enum class SplitMode { pure, adaptive };

/// One step of the splitting process: which leaf, which axis, where.
struct SplitRecord {
  std::size_t cell = 0;
  std::size_t dim = 0;
  double ratio = 0.5;  // position of the cut as a fraction of the cell side
};

/// Recursive axis-parallel partition of a root box into `split_count() + 1`
/// leaves.
///
/// Leaves are half-open [lo, hi) in every dimension except on the root's
/// upper faces, which belong to the adjacent leaf. Splitting leaf `c` keeps
/// the lower child at index `c` and appends the upper child, so the leaf
/// numbering is a pure function of the split history.
class Partition {
 public:
  static constexpr std::size_t outside = std::numeric_limits<std::size_t>::max();

  explicit Partition(Box root);

  const Box& root() const { return root_; }
  std::span<const Box> cells() const { return cells_; }
  std::span<const SplitRecord> splits() const { return splits_; }
  std::size_t split_count() const { return splits_.size(); }
  std::size_t cell_count() const { return cells_.size(); }

  /// Leaf containing x, or `outside` when x is not in the root.
  std::size_t locate(std::span<const double> x) const;

  /// Applies a split verbatim. Throws InvalidInput when the record would
  /// produce a child thinner than `min_side_fraction` of the root side.
  void apply(const SplitRecord& split);

  /// Minimum child side as a fraction of the root side in the same axis.
  static constexpr double min_side_fraction = 1e-9;

 private:
  struct Node {
    std::uint32_t dim = 0;
    double threshold = 0.0;
    std::uint32_t left = 0;   // node index, valid when !leaf
    std::uint32_t right = 0;
    std::uint32_t cell = 0;   // leaf index, valid when leaf
    bool leaf = true;
  };

  Box root_;
  std::vector<Box> cells_;
  std::vector<SplitRecord> splits_;
  std::vector<Node> nodes_;
  std::vector<std::uint32_t> cell_node_;
};

/// Single-leaf partition of `root`.
Partition init_partition(const Box& root);

/// Replaces one leaf by two.
///
/// Pure mode draws the leaf uniformly among the current leaves. Adaptive mode
/// draws a data point uniformly (with replacement, rejecting points outside
/// the root) and splits the leaf containing it. In both modes the axis is
/// uniform over the dimensions and the cut ratio is Unif(0, 1), redrawn
/// until both children keep at least `Partition::min_side_fraction` of the
/// root side.
void split_once(Partition& partition, SplitMode mode, const PointSet* data, Rng& rng);

/// `p` successive calls of split_once on init_partition(root).
Partition build_partition(const Box& root, std::size_t p, SplitMode mode, const PointSet* data, Rng& rng);

/// Number of leaves holding at least one point of `data`.
std::size_t nonempty_cell_count(const Partition& partition, const PointSet& data);

}  // namespace bsc
