#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bsc/core.hpp"
#include "bsc/partition.hpp"
#include "bsc/rng.hpp"

namespace bsc {

using Labeling = std::vector<int>;

struct Dataset {
  std::string name;
  PointSet points;
  std::optional<Labeling> truth;
  std::uint64_t seed = 0;
};

/// Per-axis map x -> offset + scale * x.
///
/// A zero-range input dimension gets scale 0 (every point lands on the
/// offset) and is reported in `degenerate`; its inverse maps back to the
/// recorded constant.
struct AffineTransform {
  std::vector<double> offset;
  std::vector<double> scale;
  std::vector<double> fixed;       // original value of degenerate axes
  std::vector<bool> degenerate;

  std::size_t dim() const { return offset.size(); }
  std::vector<double> apply(std::span<const double> x) const;
  void apply_into(std::span<const double> x, std::span<double> out) const;
  std::vector<double> inverse(std::span<const double> y) const;
  PointSet apply(const PointSet& points) const;
  /// |det| of the linear part over non-degenerate axes; converts densities
  /// between the scaled and the raw coordinate systems.
  double jacobian() const;

  static AffineTransform identity(std::size_t dim);
};

struct ScaledPoints {
  PointSet points;
  AffineTransform transform;
};

/// Min-max map of each axis onto [-1 + margin, 1 - margin].
ScaledPoints scale_to_box(const PointSet& points, double margin);

enum class SyntheticKind { circles, moons, varied, aniso };

std::optional<SyntheticKind> parse_synthetic_kind(std::string_view name);
std::string_view to_string(SyntheticKind kind);
/// "circles, moons, varied, aniso"
std::string synthetic_kind_names();

/// Default Gaussian noise level for `kind` (circles and moons only; the blob
/// generators use fixed per-blob standard deviations and ignore it).
double default_noise(SyntheticKind kind);

/// Seeded 2-D toy sets with truth labels.
///
///  - circles: n/2 points on the unit circle, n/2 on radius 0.5, plus noise.
///  - moons: two interleaving half circles plus noise.
///  - varied: three isotropic blobs with stds {1.0, 2.5, 0.5}.
///  - aniso: three unit-variance blobs mapped by x -> x * [[0.6, -0.6], [-0.4, 0.8]].
///
/// The row order is shuffled with the same seed.
Dataset gen_synthetic(SyntheticKind kind, std::size_t n, double noise, std::uint64_t seed);

/// Isotropic Gaussian mixture used as a known ground-truth density.
struct GaussianComponent {
  double weight = 1.0;
  std::vector<double> mean;
  double stddev = 1.0;
};

class GaussianMixture {
 public:
  explicit GaussianMixture(std::vector<GaussianComponent> components);

  std::size_t dim() const { return components_.front().mean.size(); }
  std::span<const GaussianComponent> components() const { return components_; }

  double density(std::span<const double> x) const;
  Dataset sample(std::size_t n, std::uint64_t seed) const;

  /// "w:m1,m2:s;w:m1,m2:s" -- weight, comma-separated mean, stddev per component.
  static GaussianMixture parse(std::string_view text);
  /// Two equal-weight components at (-1, 0) and (1, 0) with stddev 0.4.
  static GaussianMixture two_gaussians();

 private:
  std::vector<GaussianComponent> components_;
};

/// CSV with header `x1,...,xd[,label]`. A trailing `label` column is parsed
/// as the truth labeling.
Dataset read_csv(const std::string& path);
void write_csv(const std::string& path, const Dataset& dataset);

}  // namespace bsc
