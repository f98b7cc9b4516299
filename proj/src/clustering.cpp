#include "bsc/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

namespace bsc {

LevelSetPoints level_points(std::span<const double> densities, double rho, double sigma) {
  if (!(rho >= 0.0)) throw InvalidInput("level_points: rho must be non-negative");
  LevelSetPoints out{rho, {}, sigma};
  for (std::size_t i = 0; i < densities.size(); ++i) {
    if (densities[i] >= rho) out.foreground.push_back(i);
  }
  return out;
}

LevelSetPoints level_points(const PointSet& data, const DensityForest& forest, double rho, double sigma) {
  return level_points(forest.eval_all(data), rho, sigma);
}

PointLevelFamily::PointLevelFamily(PointSet points, std::vector<double> levels)
    : points_(std::move(points)), levels_(std::move(levels)), max_level_(-std::numeric_limits<double>::infinity()) {
  if (levels_.size() != points_.size()) throw InvalidInput("PointLevelFamily: one level per point required");
  for (double l : levels_) max_level_ = std::max(max_level_, l);
}

std::vector<std::vector<std::size_t>> PointLevelFamily::tau_components(double rho, double tau) const {
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < size(); ++i) {
    if (contains(i, rho)) members.push_back(i);
  }
  const ComponentLabels comp = bsc::tau_components(points_.subset(members), tau);
  std::vector<std::vector<std::size_t>> out(comp.count);
  for (std::size_t t = 0; t < members.size(); ++t) out[static_cast<std::size_t>(comp.labels[t])].push_back(members[t]);
  return out;
}

namespace {

std::vector<std::vector<std::size_t>> persisting_components(const LevelFamily& family, double rho, double tau,
                                                            double eps) {
  std::vector<std::vector<std::size_t>> kept;
  for (auto& comp : family.tau_components(rho, tau)) {
    const bool persists = std::any_of(comp.begin(), comp.end(),
                                      [&](std::size_t e) { return family.contains(e, rho + 2.0 * eps); });
    if (persists) kept.push_back(std::move(comp));
  }
  return kept;
}

}  // namespace

ClusterResult algorithm1_scan(const LevelFamily& family, double tau, double eps, double rho0) {
  if (!(tau > 0.0)) throw InvalidInput("algorithm1_scan: tau must be positive");
  if (!(eps > 0.0)) throw InvalidInput("algorithm1_scan: eps must be positive");
  if (!(rho0 >= 0.0)) throw InvalidInput("algorithm1_scan: rho0 must be non-negative");
  if (!std::isfinite(family.max_level())) throw InvalidInput("algorithm1_scan: family has no finite top level");

  ClusterResult result;
  double rho = rho0;
  std::vector<std::vector<std::size_t>> comps;
  for (;;) {
    comps = persisting_components(family, rho, tau, eps);
    result.scan_log.push_back({rho, comps.size()});
    if (comps.size() != 1) break;
    rho += eps;
  }
  result.exhausted = comps.empty();

  rho += 2.0 * eps;
  comps = persisting_components(family, rho, tau, eps);
  result.scan_log.push_back({rho, comps.size()});

  result.labels.assign(family.size(), -1);
  if (comps.size() > 1) {
    result.rho_out = rho;
    result.cluster_count = comps.size();
    for (std::size_t c = 0; c < comps.size(); ++c) {
      for (std::size_t e : comps[c]) result.labels[e] = static_cast<int>(c);
    }
    return result;
  }
  result.single_cluster = true;
  result.rho_out = rho0;
  result.cluster_count = 1;
  for (std::size_t e = 0; e < family.size(); ++e) {
    if (family.contains(e, rho0)) result.labels[e] = 0;
  }
  return result;
}

ForestParams ForestClusterParams::forest_params(std::size_t n) const {
  if (!(split_ratio > 0.0)) throw InvalidInput("cluster_forest: split ratio r must be positive");
  ForestParams fp;
  fp.trees = trees;
  fp.tree.candidates = candidates;
  fp.tree.splits = static_cast<std::size_t>(std::floor(static_cast<double>(n) * split_ratio));
  fp.tree.mode = mode;
  fp.tree.holdout_fraction = holdout_fraction;
  fp.seed = seed;
  fp.threads = threads;
  return fp;
}

double empirical_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidInput("empirical_quantile: no values");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidInput("empirical_quantile: q must lie in [0, 1]");
  const auto n = values.size();
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  const auto nth = values.begin() + static_cast<std::ptrdiff_t>(rank - 1);
  std::nth_element(values.begin(), nth, values.end());
  return *nth;
}

double pairwise_distance_quantile(const PointSet& points, double q) {
  if (points.size() < 2) throw InvalidInput("pairwise_distance_quantile: need at least two points");
  std::vector<double> dist;
  dist.reserve(points.size() * (points.size() - 1) / 2);
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) dist.push_back(euclidean_distance(points[i], points[j]));
  }
  return empirical_quantile(std::move(dist), q);
}

NeighborRanking::NeighborRanking(const PointSet& points) : stride_(points.size() == 0 ? 0 : points.size() - 1) {
  const std::size_t n = points.size();
  if (n > std::numeric_limits<std::uint32_t>::max()) throw InvalidInput("NeighborRanking: too many points");
  order_.resize(n * stride_);
  std::vector<std::pair<double, std::uint32_t>> row;
  row.reserve(stride_);
  for (std::size_t i = 0; i < n; ++i) {
    row.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) row.emplace_back(euclidean_distance(points[i], points[j]), static_cast<std::uint32_t>(j));
    }
    std::sort(row.begin(), row.end(), [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      const auto pa = points[a.second];
      const auto pb = points[b.second];
      if (std::lexicographical_compare(pa.begin(), pa.end(), pb.begin(), pb.end())) return true;
      if (std::lexicographical_compare(pb.begin(), pb.end(), pa.begin(), pa.end())) return false;
      return a.second < b.second;
    });
    for (std::size_t t = 0; t < stride_; ++t) order_[i * stride_ + t] = row[t].second;
  }
}

LevelSweep sweep_density_levels(const EpsGraph& graph, std::span<const double> densities,
                                std::span<const char> candidates) {
  const std::size_t n = graph.n;
  if (densities.size() != n || candidates.size() != n) throw InvalidInput("sweep_density_levels: size mismatch");

  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < n; ++i) {
    if (candidates[i]) members.push_back(i);
  }
  std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
    return densities[a] != densities[b] ? densities[a] > densities[b] : a < b;
  });

  // Walk the levels from the top down, adding each tie group at once, so the
  // component count of {f >= lambda_j} is available for every j in one pass.
  LevelSweep sweep;
  UnionFind uf(n);
  std::vector<char> added(n, 0);
  std::size_t components = 0;
  for (std::size_t start = 0; start < members.size();) {
    std::size_t stop = start;
    const double level = densities[members[start]];
    while (stop < members.size() && densities[members[stop]] == level) ++stop;
    for (std::size_t t = start; t < stop; ++t) {
      added[members[t]] = 1;
      ++components;
    }
    for (std::size_t t = start; t < stop; ++t) {
      const std::size_t i = members[t];
      for (std::size_t j : graph.adjacency[i]) {
        if (added[j] && uf.unite(i, j)) --components;
      }
    }
    sweep.levels.push_back(level);
    sweep.counts.push_back(components);
    start = stop;
  }
  std::reverse(sweep.levels.begin(), sweep.levels.end());
  std::reverse(sweep.counts.begin(), sweep.counts.end());
  return sweep;
}

ClusterResult label_level(const EpsGraph& graph, std::span<const double> densities, std::span<const char> candidates,
                          double rho) {
  const std::size_t n = graph.n;
  if (densities.size() != n || candidates.size() != n) throw InvalidInput("label_level: size mismatch");
  auto member = [&](std::size_t i) { return candidates[i] && densities[i] >= rho; };
  UnionFind uf(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!member(i)) continue;
    for (std::size_t j : graph.adjacency[i]) {
      if (member(j)) uf.unite(i, j);
    }
  }
  ClusterResult result;
  result.labels.assign(n, -1);
  std::vector<int> root_label(n, -1);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!member(i)) continue;
    const std::size_t r = uf.find(i);
    if (root_label[r] < 0) root_label[r] = next++;
    result.labels[i] = root_label[r];
  }
  result.rho_out = rho;
  result.cluster_count = static_cast<std::size_t>(next);
  result.graph_radius = graph.eps;
  return result;
}

ClusterResult pick_level(const EpsGraph& graph, std::span<const double> densities, std::span<const char> candidates,
                         const LevelSweep& sweep, std::size_t clusters) {
  if (clusters == 0) throw InvalidInput("pick_level: need k_c >= 1");
  std::vector<ScanEntry> log;
  for (std::size_t j = 0; j < sweep.levels.size(); ++j) {
    log.push_back({sweep.levels[j], sweep.counts[j]});
    if (sweep.counts[j] == clusters) {
      ClusterResult result = label_level(graph, densities, candidates, sweep.levels[j]);
      result.scan_log = std::move(log);
      return result;
    }
  }
  throw NoValidLevel("no density level yields exactly " + std::to_string(clusters) + " components", std::move(log));
}

std::vector<char> above_quantile(std::span<const double> densities, double q) {
  const double cut = empirical_quantile(std::vector<double>(densities.begin(), densities.end()), q);
  std::vector<char> out(densities.size(), 0);
  for (std::size_t i = 0; i < densities.size(); ++i) out[i] = densities[i] > cut ? 1 : 0;
  return out;
}

ClusterResult scan_density_levels(const EpsGraph& graph, std::span<const double> densities,
                                  std::span<const char> candidates, std::size_t clusters) {
  if (clusters == 0) throw InvalidInput("scan_density_levels: need k_c >= 1");
  return pick_level(graph, densities, candidates, sweep_density_levels(graph, densities, candidates), clusters);
}

ClusterResult assign_background(const PointSet& data, ClusterResult result, std::size_t kN,
                                const NeighborRanking* ranking) {
  if (result.labels.size() != data.size()) throw InvalidInput("assign_background: label count differs from data");
  if (kN == 0) throw InvalidInput("assign_background: kN must be at least 1");
  std::vector<std::size_t> refs;
  std::vector<std::size_t> queries;
  for (std::size_t i = 0; i < data.size(); ++i) (result.labels[i] >= 0 ? refs : queries).push_back(i);
  if (refs.empty()) throw InvalidState("assign_background: no labeled foreground point");
  if (queries.empty()) return result;
  const std::size_t k = std::min(kN, refs.size());

  if (ranking == nullptr) {
    std::vector<int> ref_labels;
    ref_labels.reserve(refs.size());
    for (std::size_t i : refs) ref_labels.push_back(result.labels[i]);
    const auto assigned = knn_classify(data.subset(queries), data.subset(refs), ref_labels, k);
    for (std::size_t t = 0; t < queries.size(); ++t) result.labels[queries[t]] = assigned[t];
    return result;
  }

  // Votes come from the original labels only; assigned points never vote.
  const Labeling original = result.labels;
  std::map<int, std::size_t> votes;
  for (std::size_t q : queries) {
    votes.clear();
    std::size_t found = 0;
    for (std::uint32_t j : ranking->neighbors(q)) {
      if (original[j] < 0) continue;
      ++votes[original[j]];
      if (++found == k) break;
    }
    int best = votes.begin()->first;
    std::size_t best_count = 0;
    for (const auto& [label, count] : votes) {
      if (count > best_count) {
        best = label;
        best_count = count;
      }
    }
    result.labels[q] = best;
  }
  return result;
}

ClusterResult cluster_from_densities(const PointSet& data, std::span<const double> densities,
                                     const ForestClusterParams& params, const EpsGraph* graph,
                                     const NeighborRanking* ranking) {
  if (!(params.background_quantile > 0.0 && params.background_quantile < 1.0)) {
    throw InvalidInput("cluster_forest: background quantile q must lie in (0, 1)");
  }
  if (!(params.eps_quantile > 0.0 && params.eps_quantile <= 1.0)) {
    throw InvalidInput("cluster_forest: eps quantile must lie in (0, 1]");
  }
  if (params.clusters == 0) throw InvalidInput("cluster_forest: k_c must be at least 1");
  if (densities.size() != data.size()) throw InvalidInput("cluster_forest: one density per point required");

  const std::vector<char> candidates = above_quantile(densities, params.background_quantile);

  EpsGraph local;
  if (graph == nullptr) {
    local = eps_graph(data, pairwise_distance_quantile(data, params.eps_quantile));
    graph = &local;
  }
  ClusterResult result = scan_density_levels(*graph, densities, candidates, params.clusters);
  return assign_background(data, std::move(result), params.knn, ranking);
}

ClusterResult cluster_forest(const PointSet& data, const ForestClusterParams& params) {
  if (data.size() < 2) throw InvalidInput("cluster_forest: need at least two points");
  const DensityForest forest = fit_forest(data, params.forest_params(data.size()));
  const std::vector<double> densities = forest.eval_all(data);
  return cluster_from_densities(data, densities, params);
}

}  // namespace bsc
