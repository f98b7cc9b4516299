#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "bsc/core.hpp"
#include "bsc/data.hpp"
#include "bsc/density.hpp"
#include "bsc/graph.hpp"

namespace bsc {

struct ScanEntry {
  double level = 0.0;
  std::size_t components = 0;
};

struct ClusterResult {
  Labeling labels;            // -1 marks background before assignment
  double rho_out = 0.0;
  std::vector<ScanEntry> scan_log;
  std::size_t cluster_count = 0;
  bool single_cluster = false;  // level scan found no split and fell back to L_{rho0}
  bool exhausted = false;       // level scan ran past the top of the family
  double graph_radius = 0.0;    // eps of the similarity graph (forest pipeline)
};

/// Raised when the forest pipeline's level scan never reaches the requested
/// component count. Carries the component counts seen at every level.
class NoValidLevel : public Error {
 public:
  NoValidLevel(const std::string& what, std::vector<ScanEntry> log) : Error(what), scan_log(std::move(log)) {}
  std::vector<ScanEntry> scan_log;
};

/// Sample points whose estimated density is at least `rho`.
struct LevelSetPoints {
  double rho = 0.0;
  std::vector<std::size_t> foreground;
  double sigma = 0.0;
};

LevelSetPoints level_points(std::span<const double> densities, double rho, double sigma = 0.0);
LevelSetPoints level_points(const PointSet& data, const DensityForest& forest, double rho, double sigma = 0.0);

/// Decreasing family rho -> L_rho over a fixed finite ground set.
class LevelFamily {
 public:
  virtual ~LevelFamily() = default;
  virtual std::size_t size() const = 0;
  virtual bool contains(std::size_t element, double rho) const = 0;
  /// tau-connected components of L_rho, each sorted, ordered by first member.
  virtual std::vector<std::vector<std::size_t>> tau_components(double rho, double tau) const = 0;
  /// L_rho is empty for every rho above this level.
  virtual double max_level() const = 0;
};

/// L_rho = { x_i : level_i >= rho } over a point cloud.
class PointLevelFamily final : public LevelFamily {
 public:
  PointLevelFamily(PointSet points, std::vector<double> levels);

  std::size_t size() const override { return points_.size(); }
  bool contains(std::size_t element, double rho) const override { return levels_[element] >= rho; }
  std::vector<std::vector<std::size_t>> tau_components(double rho, double tau) const override;
  double max_level() const override { return max_level_; }

  const PointSet& points() const { return points_; }

 private:
  PointSet points_;
  std::vector<double> levels_;
  double max_level_;
};

/// Generic level scan with persistence check.
///
/// Starting at rho0, keeps the tau-components of L_rho that meet
/// L_{rho + 2 eps} and raises rho by eps while exactly one such component
/// remains. It then re-examines the family at rho + 2 eps: more than one
/// persisting component returns that level and those components; otherwise
/// it returns rho0 and L_{rho0} as a single cluster. Labels index the
/// family's ground set, -1 for elements outside every returned set.
ClusterResult algorithm1_scan(const LevelFamily& family, double tau, double eps, double rho0);

struct ForestClusterParams {
  std::size_t trees = 100;            // m
  double split_ratio = 0.3;           // r: p = floor(n * r)
  double background_quantile = 0.1;   // q
  std::size_t candidates = 5;         // k
  std::size_t knn = 1;                // kN
  std::size_t clusters = 2;           // k_c
  double eps_quantile = 0.05;         // q_eps
  SplitMode mode = SplitMode::adaptive;
  double holdout_fraction = 0.3;
  std::uint64_t seed = 0;
  std::size_t threads = 0;

  ForestParams forest_params(std::size_t n) const;
};

/// Nearest-rank empirical quantile: the ceil(q * n)-th smallest value.
double empirical_quantile(std::vector<double> values, double q);
/// Nearest-rank quantile of { |x_i - x_j| : i < j }.
double pairwise_distance_quantile(const PointSet& points, double q);

/// Per-point list of every other point ordered by (distance, coordinates,
/// index). Lets repeated background assignments on one dataset avoid the
/// quadratic search; results match knn_classify whenever coincident
/// labeled points share a label.
class NeighborRanking {
 public:
  explicit NeighborRanking(const PointSet& points);
  std::span<const std::uint32_t> neighbors(std::size_t i) const {
    return {order_.data() + i * stride_, stride_};
  }

 private:
  std::size_t stride_ = 0;
  std::vector<std::uint32_t> order_;
};

/// Component count of the candidate-induced subgraph at every distinct
/// candidate density, ascending.
struct LevelSweep {
  std::vector<double> levels;
  std::vector<std::size_t> counts;
};

LevelSweep sweep_density_levels(const EpsGraph& graph, std::span<const double> densities,
                                std::span<const char> candidates);

/// Labels of the components at `rho` (-1 for points below it or outside the
/// candidates), numbered by smallest point index.
ClusterResult label_level(const EpsGraph& graph, std::span<const double> densities, std::span<const char> candidates,
                          double rho);

/// First sweep level with exactly `clusters` components, labelled; the scan
/// log stops at that level. Throws NoValidLevel when no level qualifies.
ClusterResult pick_level(const EpsGraph& graph, std::span<const double> densities, std::span<const char> candidates,
                         const LevelSweep& sweep, std::size_t clusters);

/// Points whose density lies strictly above the nearest-rank q-quantile.
std::vector<char> above_quantile(std::span<const double> densities, double q);

/// Level scan over the similarity graph restricted to `candidates`: visits the
/// distinct densities of the candidates in increasing order and stops at the
/// first level whose induced subgraph has exactly `clusters` components.
/// `graph` spans all points. Throws NoValidLevel when no level qualifies.
ClusterResult scan_density_levels(const EpsGraph& graph, std::span<const double> densities,
                                  std::span<const char> candidates, std::size_t clusters);

/// Replaces every -1 label by the kN-NN vote of the labeled points. kN is
/// capped at the number of labeled points. Throws InvalidState when no point
/// is labeled.
ClusterResult assign_background(const PointSet& data, ClusterResult result, std::size_t kN,
                                const NeighborRanking* ranking = nullptr);

/// Stages 2-5 of the forest pipeline on precomputed densities.
ClusterResult cluster_from_densities(const PointSet& data, std::span<const double> densities,
                                     const ForestClusterParams& params, const EpsGraph* graph = nullptr,
                                     const NeighborRanking* ranking = nullptr);

/// Full forest pipeline: fit, drop background, scan levels, assign background.
ClusterResult cluster_forest(const PointSet& data, const ForestClusterParams& params);

}  // namespace bsc
