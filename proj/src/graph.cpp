#include "bsc/graph.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <unordered_map>

namespace bsc {

std::size_t EpsGraph::edge_count() const {
  std::size_t sum = 0;
  for (const auto& a : adjacency) sum += a.size();
  return sum / 2;
}

namespace {

void check_eps(double eps, const char* what) {
  if (!(eps > 0.0)) throw InvalidInput(std::string(what) + ": radius must be positive");
}

struct CellKey {
  std::array<long long, 3> c{};
  bool operator==(const CellKey&) const = default;
};

struct CellHash {
  std::size_t operator()(const CellKey& k) const {
    std::size_t h = 0;
    for (long long v : k.c) h = h * 0x9e3779b97f4a7c15ULL + static_cast<std::size_t>(v) + (h >> 17);
    return h;
  }
};

}  // namespace

EpsGraph eps_graph_brute(const PointSet& points, double eps) {
  check_eps(eps, "eps_graph");
  EpsGraph g{points.size(), eps, std::vector<std::vector<std::size_t>>(points.size())};
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      if (euclidean_distance(points[i], points[j]) < eps) {
        g.adjacency[i].push_back(j);
        g.adjacency[j].push_back(i);
      }
    }
  }
  for (auto& a : g.adjacency) std::sort(a.begin(), a.end());
  return g;
}

EpsGraph eps_graph(const PointSet& points, double eps) {
  check_eps(eps, "eps_graph");
  const std::size_t d = points.dim();
  if (d > 3 || !std::isfinite(eps)) return eps_graph_brute(points, eps);
  for (double v : points.coords()) {
    if (!(std::abs(v / eps) < 1e15)) return eps_graph_brute(points, eps);
  }

  // Bucket side eps: any pair closer than eps lies in the same or an adjacent bucket.
  std::unordered_map<CellKey, std::vector<std::size_t>, CellHash> buckets;
  std::vector<CellKey> keys(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    CellKey key;
    for (std::size_t k = 0; k < d; ++k) key.c[k] = static_cast<long long>(std::floor(points[i][k] / eps));
    keys[i] = key;
    buckets[key].push_back(i);
  }

  EpsGraph g{points.size(), eps, std::vector<std::vector<std::size_t>>(points.size())};
  std::size_t offsets = 1;
  for (std::size_t k = 0; k < d; ++k) offsets *= 3;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t o = 0; o < offsets; ++o) {
      CellKey key = keys[i];
      std::size_t code = o;
      for (std::size_t k = 0; k < d; ++k) {
        key.c[k] += static_cast<long long>(code % 3) - 1;
        code /= 3;
      }
      const auto it = buckets.find(key);
      if (it == buckets.end()) continue;
      for (std::size_t j : it->second) {
        if (j != i && euclidean_distance(points[i], points[j]) < eps) g.adjacency[i].push_back(j);
      }
    }
  }
  for (auto& a : g.adjacency) std::sort(a.begin(), a.end());
  return g;
}

UnionFind::UnionFind(std::size_t n) : parent_(n), rank_(n, 0), sets_(n) {
  std::iota(parent_.begin(), parent_.end(), std::size_t{0});
}

std::size_t UnionFind::find(std::size_t x) {
  while (parent_[x] != x) {
    parent_[x] = parent_[parent_[x]];
    x = parent_[x];
  }
  return x;
}

bool UnionFind::unite(std::size_t x, std::size_t y) {
  x = find(x);
  y = find(y);
  if (x == y) return false;
  if (rank_[x] < rank_[y]) std::swap(x, y);
  parent_[y] = x;
  if (rank_[x] == rank_[y]) ++rank_[x];
  --sets_;
  return true;
}

ComponentLabels connected_components(const EpsGraph& graph) {
  UnionFind uf(graph.n);
  for (std::size_t i = 0; i < graph.n; ++i) {
    for (std::size_t j : graph.adjacency[i]) uf.unite(i, j);
  }
  ComponentLabels out;
  out.labels.assign(graph.n, -1);
  std::vector<int> root_label(graph.n, -1);
  for (std::size_t i = 0; i < graph.n; ++i) {
    const std::size_t r = uf.find(i);
    if (root_label[r] < 0) root_label[r] = static_cast<int>(out.count++);
    out.labels[i] = root_label[r];
  }
  return out;
}

ComponentLabels tau_components(const PointSet& points, double tau) {
  check_eps(tau, "tau_components");
  return connected_components(eps_graph(points, tau));
}

std::vector<int> knn_classify(const PointSet& queries, const PointSet& refs, std::span<const int> ref_labels,
                              std::size_t kN) {
  if (refs.empty()) throw InvalidInput("knn_classify: no reference points");
  if (ref_labels.size() != refs.size()) throw InvalidInput("knn_classify: label count differs from ref count");
  if (kN == 0 || kN > refs.size()) throw InvalidInput("knn_classify: kN must lie in [1, |refs|]");
  if (!queries.empty() && queries.dim() != refs.dim()) throw InvalidInput("knn_classify: dimension mismatch");

  std::vector<std::size_t> canon(refs.size());
  std::iota(canon.begin(), canon.end(), std::size_t{0});
  std::sort(canon.begin(), canon.end(), [&](std::size_t a, std::size_t b) {
    const auto pa = refs[a];
    const auto pb = refs[b];
    if (std::lexicographical_compare(pa.begin(), pa.end(), pb.begin(), pb.end())) return true;
    if (std::lexicographical_compare(pb.begin(), pb.end(), pa.begin(), pa.end())) return false;
    return ref_labels[a] < ref_labels[b];
  });

  std::vector<int> out(queries.size());
  std::vector<std::pair<double, std::size_t>> dist(refs.size());
  std::map<int, std::size_t> votes;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    for (std::size_t r = 0; r < canon.size(); ++r) dist[r] = {euclidean_distance(queries[q], refs[canon[r]]), r};
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kN), dist.end());
    votes.clear();
    for (std::size_t t = 0; t < kN; ++t) ++votes[ref_labels[canon[dist[t].second]]];
    int best = votes.begin()->first;
    std::size_t best_count = 0;
    for (const auto& [label, count] : votes) {
      if (count > best_count) {
        best = label;
        best_count = count;
      }
    }
    out[q] = best;
  }
  return out;
}

}  // namespace bsc
