#include "bsc/setops.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <deque>
#include <fstream>
#include <iomanip>
#include <limits>
#include <unordered_map>

namespace bsc {

static_assert(std::endian::native == std::endian::little, "grid binary IO assumes a little-endian host");

Lattice::Lattice(Box box, std::size_t resolution) : box_(std::move(box)), resolution_(resolution) {
  if (box_.dim() == 0) throw InvalidInput("Lattice: box has no dimensions");
  if (box_.dim() > 3) throw UnsupportedDimension("Lattice: grid oracles support d <= 3");
  if (resolution_ < 2) throw InvalidInput("Lattice: resolution must be at least 2");
  node_count_ = 1;
  for (std::size_t k = 0; k < box_.dim(); ++k) node_count_ *= resolution_;
}

double Lattice::max_step() const {
  double h = 0.0;
  for (std::size_t k = 0; k < dim(); ++k) h = std::max(h, step(k));
  return h;
}

double Lattice::cell_volume() const {
  double v = 1.0;
  for (std::size_t k = 0; k < dim(); ++k) v *= step(k);
  return v;
}

std::vector<std::size_t> Lattice::index_of(std::size_t node) const {
  std::vector<std::size_t> idx(dim());
  for (std::size_t k = dim(); k-- > 0;) {
    idx[k] = node % resolution_;
    node /= resolution_;
  }
  return idx;
}

void Lattice::position_into(std::size_t node, std::span<double> out) const {
  for (std::size_t k = dim(); k-- > 0;) {
    const std::size_t i = node % resolution_;
    node /= resolution_;
    out[k] = box_.lower[k] + (static_cast<double>(i) + 0.5) * step(k);
  }
}

std::vector<double> Lattice::position(std::size_t node) const {
  std::vector<double> x(dim());
  position_into(node, x);
  return x;
}

bool Lattice::same_as(const Lattice& other) const {
  return resolution_ == other.resolution_ && box_.lower == other.box_.lower && box_.upper == other.box_.upper;
}

GridDensity GridDensity::sample(const Lattice& lattice, const std::function<double(std::span<const double>)>& f) {
  GridDensity gd{lattice, std::vector<double>(lattice.node_count())};
  std::vector<double> x(lattice.dim());
  for (std::size_t node = 0; node < lattice.node_count(); ++node) {
    lattice.position_into(node, x);
    const double v = f(x);
    if (!(v >= 0.0)) throw InvalidInput("GridDensity: density must be non-negative");
    gd.values[node] = v;
  }
  return gd;
}

double GridDensity::max_value() const {
  return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
}

std::size_t GridSet::count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

bool GridSet::any() const { return std::find(mask.begin(), mask.end(), std::uint8_t{1}) != mask.end(); }

GridSet GridSet::complement() const {
  GridSet out{lattice, mask};
  for (auto& m : out.mask) m = m ? 0 : 1;
  return out;
}

bool GridSet::subset_of(const GridSet& other) const {
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] && !other.mask[i]) return false;
  }
  return true;
}

GridSet grid_level_set(const GridDensity& gd, double rho) {
  if (!(rho >= 0.0)) throw InvalidInput("grid_level_set: rho must be non-negative");
  GridSet out = GridSet::empty(gd.lattice);
  for (std::size_t i = 0; i < gd.values.size(); ++i) out.mask[i] = gd.values[i] >= rho ? 1 : 0;
  return out;
}

namespace {

/// Calls fn(neighbor) for every face neighbour of `node` inside the lattice.
template <typename Fn>
void for_each_face_neighbor(const Lattice& lattice, std::size_t node, Fn&& fn) {
  std::size_t stride = 1;
  std::size_t rest = node;
  const std::size_t r = lattice.resolution();
  for (std::size_t k = lattice.dim(); k-- > 0;) {
    const std::size_t i = rest % r;
    rest /= r;
    if (i > 0) fn(node - stride);
    if (i + 1 < r) fn(node + stride);
    stride *= r;
  }
}

/// Positions of the nodes of `set` with a face neighbour outside it.
std::vector<double> boundary_positions(const GridSet& set) {
  const Lattice& lattice = set.lattice;
  std::vector<double> out;
  std::vector<double> x(lattice.dim());
  for (std::size_t node = 0; node < lattice.node_count(); ++node) {
    if (!set.mask[node]) continue;
    bool edge = false;
    for_each_face_neighbor(lattice, node, [&](std::size_t nb) { edge = edge || !set.mask[nb]; });
    if (!edge) continue;
    lattice.position_into(node, x);
    out.insert(out.end(), x.begin(), x.end());
  }
  return out;
}

double min_distance_to(std::span<const double> x, const std::vector<double>& positions, std::size_t d) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < positions.size(); b += d) {
    best = std::min(best, euclidean_distance(x, std::span<const double>(positions.data() + b, d)));
  }
  return best;
}

bool within(std::span<const double> x, const std::vector<double>& positions, std::size_t d, double delta) {
  for (std::size_t b = 0; b < positions.size(); b += d) {
    if (euclidean_distance(x, std::span<const double>(positions.data() + b, d)) <= delta) return true;
  }
  return false;
}

GridSet dilate(const GridSet& set, double delta) {
  const Lattice& lattice = set.lattice;
  GridSet out = set;
  const std::vector<double> boundary = boundary_positions(set);
  if (boundary.empty()) return out;  // empty or full
  std::vector<double> x(lattice.dim());
  for (std::size_t node = 0; node < lattice.node_count(); ++node) {
    if (set.mask[node]) continue;
    lattice.position_into(node, x);
    if (within(x, boundary, lattice.dim(), delta)) out.mask[node] = 1;
  }
  return out;
}

void check_same_lattice(const Lattice& a, const Lattice& b, const char* what) {
  if (!a.same_as(b)) throw InvalidInput(std::string(what) + ": lattices differ");
}

}  // namespace

GridSet tube(const GridSet& set, double delta, TubeSign sign) {
  if (!(delta > 0.0)) throw InvalidInput("tube: delta must be positive");
  if (sign == TubeSign::plus) return dilate(set, delta);
  return dilate(set.complement(), delta).complement();
}

double psi_star(const GridSet& set, double delta) {
  const GridSet eroded = tube(set, delta, TubeSign::minus);
  if (!eroded.any()) return std::numeric_limits<double>::infinity();
  const Lattice& lattice = set.lattice;
  const std::vector<double> boundary = boundary_positions(eroded);
  double sup = 0.0;
  std::vector<double> x(lattice.dim());
  for (std::size_t node = 0; node < lattice.node_count(); ++node) {
    if (!set.mask[node] || eroded.mask[node]) continue;
    lattice.position_into(node, x);
    sup = std::max(sup, min_distance_to(x, boundary, lattice.dim()));
  }
  return sup;
}

GridComponents grid_components(const GridSet& set) {
  const Lattice& lattice = set.lattice;
  GridComponents out{lattice, std::vector<int>(lattice.node_count(), -1), 0};
  std::deque<std::size_t> queue;
  for (std::size_t start = 0; start < lattice.node_count(); ++start) {
    if (!set.mask[start] || out.labels[start] >= 0) continue;
    const int label = static_cast<int>(out.count++);
    out.labels[start] = label;
    queue.push_back(start);
    while (!queue.empty()) {
      const std::size_t node = queue.front();
      queue.pop_front();
      for_each_face_neighbor(lattice, node, [&](std::size_t nb) {
        if (set.mask[nb] && out.labels[nb] < 0) {
          out.labels[nb] = label;
          queue.push_back(nb);
        }
      });
    }
  }
  return out;
}

double tau_star(const GridDensity& gd, double rho_star, double eps) {
  const GridSet level = grid_level_set(gd, rho_star + eps);
  const GridComponents comps = grid_components(level);
  if (comps.count != 2) {
    throw InvalidState("tau_star: level set has " + std::to_string(comps.count) + " components, expected 2");
  }
  std::array<GridSet, 2> parts{GridSet::empty(gd.lattice), GridSet::empty(gd.lattice)};
  for (std::size_t node = 0; node < comps.labels.size(); ++node) {
    if (comps.labels[node] >= 0) parts[static_cast<std::size_t>(comps.labels[node])].mask[node] = 1;
  }
  const std::vector<double> a = boundary_positions(parts[0]);
  const std::vector<double> b = boundary_positions(parts[1]);
  const std::size_t d = gd.lattice.dim();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a.size(); i += d) {
    best = std::min(best, min_distance_to(std::span<const double>(a.data() + i, d), b, d));
  }
  return best / 3.0;
}

double sym_diff_measure(const GridSet& a, const GridSet& b) {
  check_same_lattice(a.lattice, b.lattice, "sym_diff_measure");
  std::size_t count = 0;
  for (std::size_t i = 0; i < a.mask.size(); ++i) count += (a.mask[i] != b.mask[i]) ? 1 : 0;
  return static_cast<double>(count) * a.lattice.cell_volume();
}

GridSet rasterize_dilation(const Lattice& lattice, const PointSet& points, double radius) {
  if (!(radius >= 0.0)) throw InvalidInput("rasterize_dilation: radius must be non-negative");
  GridSet out = GridSet::empty(lattice);
  if (points.empty()) return out;
  if (points.dim() != lattice.dim()) throw InvalidInput("rasterize_dilation: dimension mismatch");
  const std::size_t d = lattice.dim();
  std::vector<double> x(d);
  const auto& box = lattice.box();
  // For each point, visit only the lattice nodes inside its bounding cube.
  for (std::size_t p = 0; p < points.size(); ++p) {
    const auto pt = points[p];
    std::vector<std::size_t> lo(d);
    std::vector<std::size_t> hi(d);
    bool empty = false;
    for (std::size_t k = 0; k < d; ++k) {
      const double h = lattice.step(k);
      const double a = std::ceil((pt[k] - radius - box.lower[k]) / h - 0.5);
      const double b = std::floor((pt[k] + radius - box.lower[k]) / h - 0.5);
      const double amax = static_cast<double>(lattice.resolution() - 1);
      const double ca = std::clamp(a - 1.0, 0.0, amax);
      const double cb = std::clamp(b + 1.0, 0.0, amax);
      if (b + 1.0 < 0.0 || a - 1.0 > amax) empty = true;
      lo[k] = static_cast<std::size_t>(ca);
      hi[k] = static_cast<std::size_t>(cb);
    }
    if (empty) continue;
    std::vector<std::size_t> idx = lo;
    for (;;) {
      std::size_t node = 0;
      for (std::size_t k = 0; k < d; ++k) {
        node = node * lattice.resolution() + idx[k];
        x[k] = box.lower[k] + (static_cast<double>(idx[k]) + 0.5) * lattice.step(k);
      }
      if (!out.mask[node] && euclidean_distance(x, pt) <= radius) out.mask[node] = 1;
      std::size_t k = d;
      while (k-- > 0) {
        if (idx[k] < hi[k]) {
          ++idx[k];
          break;
        }
        idx[k] = lo[k];
      }
      if (k == static_cast<std::size_t>(-1)) break;
    }
  }
  return out;
}

double UncertaintyReport::violation_fraction() const {
  return nodes ? static_cast<double>(inner_violations + outer_violations) / static_cast<double>(nodes) : 0.0;
}

UncertaintyReport check_uncertainty_control(const GridDensity& gd, const PointSet& data, const DensityForest& forest,
                                            double rho, double eps, double sigma, UncertaintySets* sets) {
  if (!(rho >= 0.0)) throw InvalidInput("check_uncertainty_control: rho must be non-negative");
  if (!(eps > 0.0)) throw InvalidInput("check_uncertainty_control: eps must be positive");
  if (!(sigma > 0.0)) throw InvalidInput("check_uncertainty_control: sigma must be positive");
  if (data.dim() != gd.lattice.dim()) throw InvalidInput("check_uncertainty_control: dimension mismatch");

  const GridSet inner = tube(grid_level_set(gd, rho + eps), 2.0 * sigma, TubeSign::minus);
  const GridSet outer = tube(grid_level_set(gd, std::max(0.0, rho - eps)), 2.0 * sigma, TubeSign::plus);

  std::vector<std::size_t> foreground;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (forest.eval_raw_density(data[i]) >= rho) foreground.push_back(i);
  }
  const GridSet estimate = rasterize_dilation(gd.lattice, data.subset(foreground), sigma);

  UncertaintyReport report;
  report.rho = rho;
  report.eps = eps;
  report.sigma = sigma;
  report.nodes = gd.lattice.node_count();
  report.inner_nodes = inner.count();
  report.outer_nodes = outer.count();
  report.estimate_nodes = estimate.count();
  report.foreground_points = foreground.size();
  for (std::size_t node = 0; node < report.nodes; ++node) {
    if (inner.mask[node] && !estimate.mask[node]) ++report.inner_violations;
    if (estimate.mask[node] && !outer.mask[node]) ++report.outer_violations;
  }
  if (sets != nullptr) *sets = UncertaintySets{inner, outer, estimate};
  return report;
}

UncertaintyReport check_uncertainty_control(const GridDensity& gd, const PointSet& data, const ForestParams& params,
                                            double rho, double eps, double sigma) {
  const DensityForest forest = fit_forest(data, params);
  return check_uncertainty_control(gd, data, forest, rho, eps, sigma);
}

namespace {

template <typename T>
void write_raw(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& in, const std::string& path) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw InvalidInput("'" + path + "': truncated grid file");
  return value;
}

void write_header(std::ofstream& out, const char* magic, const Lattice& lattice) {
  out.write(magic, 4);
  write_raw(out, static_cast<std::uint32_t>(lattice.dim()));
  write_raw(out, static_cast<std::uint32_t>(lattice.resolution()));
  for (double v : lattice.box().lower) write_raw(out, v);
  for (double v : lattice.box().upper) write_raw(out, v);
}

Lattice read_header(std::ifstream& in, const std::string& path, const char* magic) {
  char tag[4];
  in.read(tag, 4);
  if (!in || std::memcmp(tag, magic, 4) != 0) {
    throw InvalidInput("'" + path + "': not a " + std::string(magic, 4) + " grid file");
  }
  const auto d = read_raw<std::uint32_t>(in, path);
  const auto res = read_raw<std::uint32_t>(in, path);
  if (d == 0 || d > 3) throw InvalidInput("'" + path + "': unsupported grid dimension");
  std::vector<double> lo(d);
  std::vector<double> hi(d);
  for (auto& v : lo) v = read_raw<double>(in, path);
  for (auto& v : hi) v = read_raw<double>(in, path);
  return Lattice(Box(lo, hi), res);
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  return in;
}

}  // namespace

void write_grid_binary(const std::string& path, const GridDensity& gd) {
  auto out = open_out(path, std::ios::binary);
  write_header(out, "BSGD", gd.lattice);
  out.write(reinterpret_cast<const char*>(gd.values.data()), static_cast<std::streamsize>(gd.values.size() * sizeof(double)));
  if (!out) throw Error("write to '" + path + "' failed");
}

void write_grid_binary(const std::string& path, const GridSet& set) {
  auto out = open_out(path, std::ios::binary);
  write_header(out, "BSGS", set.lattice);
  out.write(reinterpret_cast<const char*>(set.mask.data()), static_cast<std::streamsize>(set.mask.size()));
  if (!out) throw Error("write to '" + path + "' failed");
}

GridDensity read_grid_density_binary(const std::string& path) {
  auto in = open_in(path);
  GridDensity gd{read_header(in, path, "BSGD"), {}};
  gd.values.resize(gd.lattice.node_count());
  in.read(reinterpret_cast<char*>(gd.values.data()), static_cast<std::streamsize>(gd.values.size() * sizeof(double)));
  if (!in) throw InvalidInput("'" + path + "': truncated grid file");
  return gd;
}

GridSet read_grid_set_binary(const std::string& path) {
  auto in = open_in(path);
  GridSet set{read_header(in, path, "BSGS"), {}};
  set.mask.resize(set.lattice.node_count());
  in.read(reinterpret_cast<char*>(set.mask.data()), static_cast<std::streamsize>(set.mask.size()));
  if (!in) throw InvalidInput("'" + path + "': truncated grid file");
  return set;
}

namespace {

template <typename Values>
void write_csv_values(const std::string& path, const Lattice& lattice, const Values& values) {
  auto out = open_out(path);
  for (std::size_t k = 0; k < lattice.dim(); ++k) out << 'x' << (k + 1) << ',';
  out << "value\n" << std::setprecision(17);
  std::vector<double> x(lattice.dim());
  for (std::size_t node = 0; node < lattice.node_count(); ++node) {
    lattice.position_into(node, x);
    for (double v : x) out << v << ',';
    out << +values[node] << '\n';
  }
  if (!out) throw Error("write to '" + path + "' failed");
}

}  // namespace

void write_grid_csv(const std::string& path, const GridDensity& gd) { write_csv_values(path, gd.lattice, gd.values); }
void write_grid_csv(const std::string& path, const GridSet& set) { write_csv_values(path, set.lattice, set.mask); }

}  // namespace bsc
