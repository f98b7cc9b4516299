#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "bsc/core.hpp"
#include "bsc/density.hpp"
#include "bsc/partition.hpp"

namespace bsc {

/// Node-centred regular lattice over a box: `resolution` cells per axis with
/// one node at every cell centre. Node ids are row-major with the last axis
/// fastest.
class Lattice {
 public:
  Lattice() = default;
  Lattice(Box box, std::size_t resolution);

  const Box& box() const { return box_; }
  std::size_t resolution() const { return resolution_; }
  std::size_t dim() const { return box_.dim(); }
  std::size_t node_count() const { return node_count_; }
  double step(std::size_t k) const { return box_.side(k) / static_cast<double>(resolution_); }
  /// Largest lattice step over the axes.
  double max_step() const;
  double cell_volume() const;

  std::vector<std::size_t> index_of(std::size_t node) const;
  std::vector<double> position(std::size_t node) const;
  void position_into(std::size_t node, std::span<double> out) const;

  bool same_as(const Lattice& other) const;

 private:
  Box box_;
  std::size_t resolution_ = 0;
  std::size_t node_count_ = 0;
};

struct GridDensity {
  Lattice lattice;
  std::vector<double> values;

  /// Samples `f` at every node.
  static GridDensity sample(const Lattice& lattice, const std::function<double(std::span<const double>)>& f);
  double max_value() const;
};

struct GridSet {
  Lattice lattice;
  std::vector<std::uint8_t> mask;

  static GridSet empty(const Lattice& lattice) { return {lattice, std::vector<std::uint8_t>(lattice.node_count(), 0)}; }
  static GridSet full(const Lattice& lattice) { return {lattice, std::vector<std::uint8_t>(lattice.node_count(), 1)}; }

  std::size_t count() const;
  bool any() const;
  GridSet complement() const;
  /// this is a subset of other (same lattice).
  bool subset_of(const GridSet& other) const;
};

enum class TubeSign { plus, minus };

/// Nodes where the density is at least rho.
GridSet grid_level_set(const GridDensity& gd, double rho);

/// plus: nodes within distance delta of the set; minus: complement of the
/// plus-tube of the complement. Distances are exact Euclidean distances to
/// the boundary nodes, found by brute force.
GridSet tube(const GridSet& set, double delta, TubeSign sign);

/// sup over set nodes of the distance to the minus-tube; +infinity when the
/// minus-tube is empty.
double psi_star(const GridSet& set, double delta);

struct GridComponents {
  Lattice lattice;
  std::vector<int> labels;   // -1 outside the set
  std::size_t count = 0;
};

/// Face-adjacent (2d-neighbourhood) components, numbered by first node.
GridComponents grid_components(const GridSet& set);

/// One third of the distance between the two components of the level set at
/// rho_star + eps. Throws InvalidState unless there are exactly two.
double tau_star(const GridDensity& gd, double rho_star, double eps);

/// Volume of the symmetric difference.
double sym_diff_measure(const GridSet& a, const GridSet& b);

/// Nodes within `radius` of any point (point-cloud dilation, rasterised).
GridSet rasterize_dilation(const Lattice& lattice, const PointSet& points, double radius);

struct UncertaintyReport {
  double rho = 0.0;
  double eps = 0.0;
  double sigma = 0.0;
  std::size_t nodes = 0;
  std::size_t inner_nodes = 0;       // |M_{rho+eps}^{-2 sigma}|
  std::size_t outer_nodes = 0;       // |M_{rho-eps}^{+2 sigma}|
  std::size_t estimate_nodes = 0;    // |L_{D,rho}|
  std::size_t inner_violations = 0;  // inner nodes missing from the estimate
  std::size_t outer_violations = 0;  // estimate nodes outside the outer set
  std::size_t foreground_points = 0;

  double inner_fraction() const { return nodes ? static_cast<double>(inner_violations) / static_cast<double>(nodes) : 0.0; }
  double outer_fraction() const { return nodes ? static_cast<double>(outer_violations) / static_cast<double>(nodes) : 0.0; }
  double violation_fraction() const;
};

struct UncertaintySets {
  GridSet inner;
  GridSet outer;
  GridSet estimate;
};

/// Checks M_{rho+eps}^{-2 sigma} within L_{D,rho} within M_{rho-eps}^{+2 sigma}
/// on the lattice of `gd`, where L_{D,rho} is the sigma-dilation of the sample
/// points whose forest density (raw units) is at least rho.
UncertaintyReport check_uncertainty_control(const GridDensity& gd, const PointSet& data, const DensityForest& forest,
                                            double rho, double eps, double sigma, UncertaintySets* sets = nullptr);
/// Same, fitting the forest from `params` first.
UncertaintyReport check_uncertainty_control(const GridDensity& gd, const PointSet& data, const ForestParams& params,
                                            double rho, double eps, double sigma);

/// Binary layout: magic "BSGD" (density, f64 values) or "BSGS" (set, u8
/// values); u32 d; u32 resolution; f64 lower[d]; f64 upper[d]; row-major
/// values. All little-endian.
void write_grid_binary(const std::string& path, const GridDensity& gd);
void write_grid_binary(const std::string& path, const GridSet& set);
GridDensity read_grid_density_binary(const std::string& path);
GridSet read_grid_set_binary(const std::string& path);

/// CSV `x1,...,xd,value`, one row per node.
void write_grid_csv(const std::string& path, const GridDensity& gd);
void write_grid_csv(const std::string& path, const GridSet& set);

}  // namespace bsc
