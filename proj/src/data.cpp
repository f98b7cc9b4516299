#include "bsc/data.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <sstream>

namespace bsc {

std::vector<double> AffineTransform::apply(std::span<const double> x) const {
  std::vector<double> out(dim());
  apply_into(x, out);
  return out;
}

void AffineTransform::apply_into(std::span<const double> x, std::span<double> out) const {
  for (std::size_t k = 0; k < dim(); ++k) out[k] = offset[k] + scale[k] * x[k];
}

std::vector<double> AffineTransform::inverse(std::span<const double> y) const {
  std::vector<double> out(dim());
  for (std::size_t k = 0; k < dim(); ++k) {
    out[k] = degenerate[k] ? fixed[k] : (y[k] - offset[k]) / scale[k];
  }
  return out;
}

PointSet AffineTransform::apply(const PointSet& points) const {
  PointSet out(points.dim(), std::vector<double>(points.coords().size()));
  for (std::size_t i = 0; i < points.size(); ++i) apply_into(points[i], out[i]);
  return out;
}

double AffineTransform::jacobian() const {
  double j = 1.0;
  for (std::size_t k = 0; k < dim(); ++k) {
    if (!degenerate[k]) j *= std::abs(scale[k]);
  }
  return j;
}

AffineTransform AffineTransform::identity(std::size_t dim) {
  return AffineTransform{std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0),
                         std::vector<double>(dim, 0.0), std::vector<bool>(dim, false)};
}

ScaledPoints scale_to_box(const PointSet& points, double margin) {
  if (points.empty()) throw InvalidInput("scale_to_box: no points");
  if (!(margin >= 0.0 && margin < 1.0)) throw InvalidInput("scale_to_box: margin must lie in [0, 1)");
  const std::size_t d = points.dim();
  AffineTransform t;
  t.offset.assign(d, 0.0);
  t.scale.assign(d, 0.0);
  t.fixed.assign(d, 0.0);
  t.degenerate.assign(d, false);
  const double half = 1.0 - margin;
  for (std::size_t k = 0; k < d; ++k) {
    double lo = points[0][k];
    double hi = lo;
    for (std::size_t i = 1; i < points.size(); ++i) {
      lo = std::min(lo, points[i][k]);
      hi = std::max(hi, points[i][k]);
    }
    if (!(hi > lo)) {
      t.degenerate[k] = true;
      t.fixed[k] = lo;
      continue;
    }
    t.scale[k] = 2.0 * half / (hi - lo);
    t.offset[k] = -half - t.scale[k] * lo;
  }
  PointSet scaled = t.apply(points);
  // Pin the extremes exactly so rounding cannot push a point past the target.
  for (std::size_t i = 0; i < scaled.size(); ++i) {
    for (std::size_t k = 0; k < d; ++k) scaled[i][k] = std::clamp(scaled[i][k], -half, half);
  }
  return {std::move(scaled), std::move(t)};
}

namespace {

constexpr std::array<std::array<double, 2>, 3> kBlobCenters{{
    {-8.94709165, -5.46276435},
    {-4.58938989, 0.08876178},
    {1.93875432, 0.50513613},
}};
constexpr std::array<double, 3> kVariedStd{1.0, 2.5, 0.5};
constexpr std::array<std::array<double, 2>, 2> kAnisoMap{{{0.6, -0.6}, {-0.4, 0.8}}};

struct Sample {
  double x;
  double y;
  int label;
};

std::vector<Sample> circles(std::size_t n, double noise, Rng& rng) {
  const std::size_t n_out = n / 2;
  const std::size_t n_in = n - n_out;
  std::vector<Sample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n_out; ++i) {
    const double t = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n_out);
    out.push_back({std::cos(t), std::sin(t), 0});
  }
  for (std::size_t i = 0; i < n_in; ++i) {
    const double t = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n_in);
    out.push_back({0.5 * std::cos(t), 0.5 * std::sin(t), 1});
  }
  for (Sample& s : out) {
    s.x += noise * rng.normal();
    s.y += noise * rng.normal();
  }
  return out;
}

std::vector<Sample> moons(std::size_t n, double noise, Rng& rng) {
  const std::size_t n_out = n / 2;
  const std::size_t n_in = n - n_out;
  auto angle = [](std::size_t i, std::size_t count) {
    return count < 2 ? 0.0 : std::numbers::pi * static_cast<double>(i) / static_cast<double>(count - 1);
  };
  std::vector<Sample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n_out; ++i) {
    const double t = angle(i, n_out);
    out.push_back({std::cos(t), std::sin(t), 0});
  }
  for (std::size_t i = 0; i < n_in; ++i) {
    const double t = angle(i, n_in);
    out.push_back({1.0 - std::cos(t), 1.0 - std::sin(t) - 0.5, 1});
  }
  for (Sample& s : out) {
    s.x += noise * rng.normal();
    s.y += noise * rng.normal();
  }
  return out;
}

std::vector<Sample> blobs(std::size_t n, const std::array<double, 3>& stds, Rng& rng) {
  std::vector<Sample> out;
  out.reserve(n);
  for (std::size_t b = 0; b < 3; ++b) {
    const std::size_t count = n / 3 + (b < n % 3 ? 1 : 0);
    for (std::size_t i = 0; i < count; ++i) {
      const double x = kBlobCenters[b][0] + stds[b] * rng.normal();
      const double y = kBlobCenters[b][1] + stds[b] * rng.normal();
      out.push_back({x, y, static_cast<int>(b)});
    }
  }
  return out;
}

}  // namespace

std::optional<SyntheticKind> parse_synthetic_kind(std::string_view name) {
  if (name == "circles") return SyntheticKind::circles;
  if (name == "moons") return SyntheticKind::moons;
  if (name == "varied") return SyntheticKind::varied;
  if (name == "aniso") return SyntheticKind::aniso;
  return std::nullopt;
}

std::string_view to_string(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::circles: return "circles";
    case SyntheticKind::moons: return "moons";
    case SyntheticKind::varied: return "varied";
    case SyntheticKind::aniso: return "aniso";
  }
  return "unknown";
}

std::string synthetic_kind_names() { return "circles, moons, varied, aniso"; }

double default_noise(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::circles:
    case SyntheticKind::moons: return 0.05;
    default: return 0.0;
  }
}

Dataset gen_synthetic(SyntheticKind kind, std::size_t n, double noise, std::uint64_t seed) {
  if (n < 4) throw InvalidInput("gen_synthetic: n must be at least 4");
  if (noise < 0.0) throw InvalidInput("gen_synthetic: noise must be non-negative");
  Rng rng(seed);
  std::vector<Sample> samples;
  switch (kind) {
    case SyntheticKind::circles: samples = circles(n, noise, rng); break;
    case SyntheticKind::moons: samples = moons(n, noise, rng); break;
    case SyntheticKind::varied: samples = blobs(n, kVariedStd, rng); break;
    case SyntheticKind::aniso: {
      samples = blobs(n, {1.0, 1.0, 1.0}, rng);
      for (Sample& s : samples) {
        const double x = s.x * kAnisoMap[0][0] + s.y * kAnisoMap[1][0];
        const double y = s.x * kAnisoMap[0][1] + s.y * kAnisoMap[1][1];
        s.x = x;
        s.y = y;
      }
      break;
    }
  }
  rng.shuffle(std::span<Sample>(samples));

  Dataset ds;
  ds.name = std::string(to_string(kind));
  ds.seed = seed;
  ds.points = PointSet(2);
  ds.points.reserve(n);
  Labeling truth;
  truth.reserve(n);
  for (const Sample& s : samples) {
    const std::array<double, 2> p{s.x, s.y};
    ds.points.push_back(p);
    truth.push_back(s.label);
  }
  ds.truth = std::move(truth);
  return ds;
}

GaussianMixture::GaussianMixture(std::vector<GaussianComponent> components) : components_(std::move(components)) {
  if (components_.empty()) throw InvalidInput("GaussianMixture: no components");
  const std::size_t d = components_.front().mean.size();
  if (d == 0) throw InvalidInput("GaussianMixture: zero-dimensional mean");
  double total = 0.0;
  for (const auto& c : components_) {
    if (c.mean.size() != d) throw InvalidInput("GaussianMixture: components differ in dimension");
    if (!(c.weight > 0.0)) throw InvalidInput("GaussianMixture: weights must be positive");
    if (!(c.stddev > 0.0)) throw InvalidInput("GaussianMixture: stddev must be positive");
    total += c.weight;
  }
  for (auto& c : components_) c.weight /= total;
}

double GaussianMixture::density(std::span<const double> x) const {
  const auto d = static_cast<double>(dim());
  double f = 0.0;
  for (const auto& c : components_) {
    const double var = c.stddev * c.stddev;
    const double norm = std::pow(2.0 * std::numbers::pi * var, -0.5 * d);
    f += c.weight * norm * std::exp(-0.5 * squared_distance(x, c.mean) / var);
  }
  return f;
}

Dataset GaussianMixture::sample(std::size_t n, std::uint64_t seed) const {
  Rng rng(seed);
  Dataset ds;
  ds.name = "mixture";
  ds.seed = seed;
  ds.points = PointSet(dim());
  ds.points.reserve(n);
  Labeling truth;
  truth.reserve(n);
  std::vector<double> x(dim());
  for (std::size_t i = 0; i < n; ++i) {
    double u = rng.uniform();
    std::size_t pick = components_.size() - 1;
    for (std::size_t c = 0; c < components_.size(); ++c) {
      if (u < components_[c].weight) {
        pick = c;
        break;
      }
      u -= components_[c].weight;
    }
    const auto& comp = components_[pick];
    for (std::size_t k = 0; k < dim(); ++k) x[k] = comp.mean[k] + comp.stddev * rng.normal();
    ds.points.push_back(x);
    truth.push_back(static_cast<int>(pick));
  }
  ds.truth = std::move(truth);
  return ds;
}

namespace {

double parse_double(std::string_view text, std::string_view what) {
  double value = 0.0;
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\r')) text.remove_suffix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw InvalidInput("cannot parse " + std::string(what) + " '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

}  // namespace

GaussianMixture GaussianMixture::parse(std::string_view text) {
  std::vector<GaussianComponent> comps;
  for (std::string_view part : split(text, ';')) {
    if (part.empty()) continue;
    const auto fields = split(part, ':');
    if (fields.size() != 3) {
      throw InvalidInput("mixture component '" + std::string(part) + "' must be weight:mean:stddev");
    }
    GaussianComponent c;
    c.weight = parse_double(fields[0], "weight");
    for (std::string_view m : split(fields[1], ',')) c.mean.push_back(parse_double(m, "mean"));
    c.stddev = parse_double(fields[2], "stddev");
    comps.push_back(std::move(c));
  }
  return GaussianMixture(std::move(comps));
}

GaussianMixture GaussianMixture::two_gaussians() {
  return GaussianMixture({GaussianComponent{0.5, {-1.0, 0.0}, 0.4}, GaussianComponent{0.5, {1.0, 0.0}, 0.4}});
}

Dataset read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("'" + path + "': empty file, expected a header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line, ',');
  bool has_label = !header.empty() && header.back() == "label";
  const std::size_t d = header.size() - (has_label ? 1 : 0);
  if (d == 0) throw InvalidInput("'" + path + "': header has no coordinate columns");

  Dataset ds;
  ds.name = path;
  ds.points = PointSet(d);
  Labeling labels;
  std::vector<double> row(d);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != header.size()) {
      throw InvalidInput("'" + path + "' line " + std::to_string(line_no) + ": expected " +
                         std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
    }
    for (std::size_t k = 0; k < d; ++k) row[k] = parse_double(fields[k], "coordinate");
    ds.points.push_back(row);
    if (has_label) {
      const double l = parse_double(fields[d], "label");
      labels.push_back(static_cast<int>(std::lround(l)));
    }
  }
  if (has_label) ds.truth = std::move(labels);
  return ds;
}

void write_csv(const std::string& path, const Dataset& dataset) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  const std::size_t d = dataset.points.dim();
  for (std::size_t k = 0; k < d; ++k) out << (k ? "," : "") << 'x' << (k + 1);
  if (dataset.truth) out << ",label";
  out << '\n';
  out << std::setprecision(17);
  for (std::size_t i = 0; i < dataset.points.size(); ++i) {
    for (std::size_t k = 0; k < d; ++k) out << (k ? "," : "") << dataset.points[i][k];
    if (dataset.truth) out << ',' << (*dataset.truth)[i];
    out << '\n';
  }
  if (!out) throw Error("write to '" + path + "' failed");
}

}  // namespace bsc
