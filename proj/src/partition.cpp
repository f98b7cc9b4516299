#include "bsc/partition.hpp"

#include <cmath>
#include <string>

namespace bsc {

Box::Box(std::vector<double> lo, std::vector<double> hi) : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.empty()) throw InvalidInput("Box: dimension must be at least 1");
  if (lower.size() != upper.size()) throw InvalidInput("Box: lower/upper dimension mismatch");
  for (std::size_t k = 0; k < lower.size(); ++k) {
    if (!(lower[k] < upper[k])) {
      throw InvalidInput("Box: degenerate extent in dimension " + std::to_string(k));
    }
  }
}

Box Box::cube(std::size_t dim, double r) {
  return Box(std::vector<double>(dim, -r), std::vector<double>(dim, r));
}

double Box::volume() const {
  double v = 1.0;
  for (std::size_t k = 0; k < dim(); ++k) v *= side(k);
  return v;
}

double Box::diameter() const {
  double sum = 0.0;
  for (std::size_t k = 0; k < dim(); ++k) sum += side(k) * side(k);
  return std::sqrt(sum);
}

bool Box::contains(std::span<const double> x) const {
  for (std::size_t k = 0; k < dim(); ++k) {
    if (!(x[k] >= lower[k] && x[k] <= upper[k])) return false;
  }
  return true;
}

Partition::Partition(Box root) : root_(std::move(root)) {
  if (root_.dim() == 0) throw InvalidInput("Partition: root box has no dimensions");
  cells_.push_back(root_);
  nodes_.push_back(Node{});
  cell_node_.push_back(0);
}

std::size_t Partition::locate(std::span<const double> x) const {
  if (!root_.contains(x)) return outside;
  std::uint32_t node = 0;
  while (!nodes_[node].leaf) {
    const Node& n = nodes_[node];
    node = x[n.dim] < n.threshold ? n.left : n.right;
  }
  return nodes_[node].cell;
}

void Partition::apply(const SplitRecord& split) {
  if (split.cell >= cells_.size()) throw InvalidInput("Partition: split of nonexistent cell");
  if (split.dim >= root_.dim()) throw InvalidInput("Partition: split dimension out of range");
  if (!(split.ratio > 0.0 && split.ratio < 1.0)) throw InvalidInput("Partition: split ratio must lie in (0, 1)");

  const Box parent = cells_[split.cell];
  const double lo = parent.lower[split.dim];
  const double hi = parent.upper[split.dim];
  const double cut = lo + split.ratio * (hi - lo);
  const double min_side = min_side_fraction * root_.side(split.dim);
  if (!(cut - lo >= min_side && hi - cut >= min_side)) {
    throw InvalidInput("Partition: split would create a cell thinner than the minimum side");
  }

  Box lower_child = parent;
  Box upper_child = parent;
  lower_child.upper[split.dim] = cut;
  upper_child.lower[split.dim] = cut;

  const std::uint32_t parent_node = cell_node_[split.cell];
  const auto left = static_cast<std::uint32_t>(nodes_.size());
  const auto right = left + 1;
  const auto new_cell = static_cast<std::uint32_t>(cells_.size());

  nodes_.push_back(Node{.cell = static_cast<std::uint32_t>(split.cell)});
  nodes_.push_back(Node{.cell = new_cell});
  Node& p = nodes_[parent_node];
  p.leaf = false;
  p.dim = static_cast<std::uint32_t>(split.dim);
  p.threshold = cut;
  p.left = left;
  p.right = right;

  cells_[split.cell] = std::move(lower_child);
  cells_.push_back(std::move(upper_child));
  cell_node_[split.cell] = left;
  cell_node_.push_back(right);
  splits_.push_back(split);
}

Partition init_partition(const Box& root) {
  // Re-run the Box invariant check for boxes assembled field by field.
  return Partition(Box(root.lower, root.upper));
}

namespace {

constexpr int kMaxRatioDraws = 1000;

bool any_in_root(const Partition& partition, const PointSet& data) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (partition.root().contains(data[i])) return true;
  }
  return false;
}

bool splittable(const Partition& partition, const Box& box, std::size_t dim) {
  return box.side(dim) > 2.0 * Partition::min_side_fraction * partition.root().side(dim);
}

std::size_t draw_cell(const Partition& partition, SplitMode mode, const PointSet* data, Rng& rng) {
  if (mode == SplitMode::pure) return rng.index(partition.cell_count());
  for (;;) {
    const std::size_t i = rng.index(data->size());
    const std::size_t cell = partition.locate((*data)[i]);
    if (cell != Partition::outside) return cell;
  }
}

// A dimension too thin to host two legal children is redrawn; a cell thin in
// every dimension is redrawn as a whole.
void split_checked(Partition& partition, SplitMode mode, const PointSet* data, Rng& rng) {
  const std::size_t d = partition.root().dim();
  for (int cell_draw = 0; cell_draw < kMaxRatioDraws; ++cell_draw) {
    const std::size_t cell = draw_cell(partition, mode, data, rng);
    const Box& box = partition.cells()[cell];
    bool any = false;
    for (std::size_t k = 0; k < d && !any; ++k) any = splittable(partition, box, k);
    if (!any) continue;
    std::size_t dim = rng.index(d);
    while (!splittable(partition, box, dim)) dim = rng.index(d);
    const double min_side = Partition::min_side_fraction * partition.root().side(dim);
    const double side = box.side(dim);
    for (int attempt = 0; attempt < kMaxRatioDraws; ++attempt) {
      const double ratio = rng.uniform_open();
      const double cut = box.lower[dim] + ratio * side;
      if (cut - box.lower[dim] >= min_side && box.upper[dim] - cut >= min_side) {
        partition.apply(SplitRecord{cell, dim, ratio});
        return;
      }
    }
  }
  throw InvalidState("split_once: no cell wide enough to split");
}

void check_adaptive_data(const Partition& partition, SplitMode mode, const PointSet* data) {
  if (mode != SplitMode::adaptive) return;
  if (data == nullptr || data->empty()) throw InvalidInput("split_once: adaptive mode needs data");
  if (data->dim() != partition.root().dim()) throw InvalidInput("split_once: data dimension differs from root");
  if (!any_in_root(partition, *data)) throw InvalidInput("split_once: adaptive mode needs a data point inside the root");
}

}  // namespace

void split_once(Partition& partition, SplitMode mode, const PointSet* data, Rng& rng) {
  check_adaptive_data(partition, mode, data);
  split_checked(partition, mode, data, rng);
}

Partition build_partition(const Box& root, std::size_t p, SplitMode mode, const PointSet* data, Rng& rng) {
  Partition partition = init_partition(root);
  check_adaptive_data(partition, mode, data);
  for (std::size_t i = 0; i < p; ++i) split_checked(partition, mode, data, rng);
  return partition;
}

std::size_t nonempty_cell_count(const Partition& partition, const PointSet& data) {
  std::vector<char> hit(partition.cell_count(), 0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::size_t c = partition.locate(data[i]);
    if (c != Partition::outside) hit[c] = 1;
  }
  std::size_t count = 0;
  for (char h : hit) count += h;
  return count;
}

}  // namespace bsc
