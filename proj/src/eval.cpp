#include "bsc/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "bsc/parallel.hpp"

namespace bsc {

namespace {

double choose2(double x) { return x * (x - 1.0) / 2.0; }

}  // namespace

double ari(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw InvalidInput("ari: labelings differ in length");
  const std::size_t n = a.size();
  std::map<std::pair<int, int>, std::size_t> table;
  std::map<int, std::size_t> rows;
  std::map<int, std::size_t> cols;
  for (std::size_t i = 0; i < n; ++i) {
    ++table[{a[i], b[i]}];
    ++rows[a[i]];
    ++cols[b[i]];
  }
  double index = 0.0;
  for (const auto& [key, count] : table) index += choose2(static_cast<double>(count));
  double sum_rows = 0.0;
  for (const auto& [key, count] : rows) sum_rows += choose2(static_cast<double>(count));
  double sum_cols = 0.0;
  for (const auto& [key, count] : cols) sum_cols += choose2(static_cast<double>(count));
  const double pairs = choose2(static_cast<double>(n));
  const double expected = pairs > 0.0 ? sum_rows * sum_cols / pairs : 0.0;
  const double max_index = 0.5 * (sum_rows + sum_cols);
  const double denom = max_index - expected;
  if (denom == 0.0) return 1.0;
  return (index - expected) / denom;
}

Labeling dbscan(const PointSet& points, double eps, std::size_t min_pts) {
  if (!(eps > 0.0)) throw InvalidInput("dbscan: eps must be positive");
  if (min_pts == 0) throw InvalidInput("dbscan: minPts must be at least 1");
  const std::size_t n = points.size();

  // Closed eps-neighbourhoods, each point counted in its own.
  std::vector<std::vector<std::size_t>> nbrs(n);
  for (std::size_t i = 0; i < n; ++i) {
    nbrs[i].push_back(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      if (euclidean_distance(points[i], points[j]) <= eps) {
        nbrs[i].push_back(j);
        nbrs[j].push_back(i);
      }
    }
  }
  std::vector<char> core(n, 0);
  for (std::size_t i = 0; i < n; ++i) core[i] = nbrs[i].size() >= min_pts ? 1 : 0;

  Labeling labels(n, -1);
  int next = 0;
  std::deque<std::size_t> queue;
  for (std::size_t start = 0; start < n; ++start) {
    if (!core[start] || labels[start] >= 0) continue;
    const int label = next++;
    labels[start] = label;
    queue.push_back(start);
    while (!queue.empty()) {
      const std::size_t p = queue.front();
      queue.pop_front();
      for (std::size_t q : nbrs[p]) {
        if (labels[q] >= 0) continue;
        labels[q] = label;
        if (core[q]) queue.push_back(q);
      }
    }
  }
  return labels;
}

KMeansResult kmeans(const PointSet& points, std::size_t k, std::uint64_t seed, std::size_t max_iter) {
  const std::size_t n = points.size();
  const std::size_t d = points.dim();
  if (k == 0) throw InvalidInput("kmeans: k must be at least 1");
  if (k > n) throw InvalidInput("kmeans: k exceeds the number of points");

  Rng rng(seed);
  PointSet centroids(d);
  centroids.reserve(k);
  centroids.push_back(points[rng.index(n)]);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  while (centroids.size() < k) {
    const auto last = centroids[centroids.size() - 1];
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(points[i], last));
      total += nearest[i];
    }
    std::size_t pick = n - 1;
    if (total > 0.0) {
      double u = rng.uniform() * total;
      for (std::size_t i = 0; i < n; ++i) {
        if (u < nearest[i]) {
          pick = i;
          break;
        }
        u -= nearest[i];
      }
    } else {
      pick = rng.index(n);
    }
    centroids.push_back(points[pick]);
  }

  KMeansResult result{Labeling(n, -1), std::move(centroids), 0.0, 0};
  auto& labels = result.labels;
  auto& cents = result.centroids;
  auto assign = [&](std::size_t i) {
    std::size_t best = 0;
    double best_d = squared_distance(points[i], cents[0]);
    for (std::size_t c = 1; c < k; ++c) {
      const double dist = squared_distance(points[i], cents[c]);
      if (dist < best_d) {
        best_d = dist;
        best = c;
      }
    }
    return std::pair{static_cast<int>(best), best_d};
  };

  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const int c = assign(i).first;
      if (c != labels[i]) {
        labels[i] = c;
        changed = true;
      }
    }
    result.iterations = iter + 1;
    if (!changed) break;

    std::vector<double> sums(k * d, 0.0);
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(labels[i]);
      ++sizes[c];
      for (std::size_t j = 0; j < d; ++j) sums[c * d + j] += points[i][j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] == 0) continue;
      for (std::size_t j = 0; j < d; ++j) cents[c][j] = sums[c * d + j] / static_cast<double>(sizes[c]);
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] != 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double dist = assign(i).second;
        if (dist > far_d) {
          far_d = dist;
          far = i;
        }
      }
      std::copy(points[far].begin(), points[far].end(), cents[c].begin());
    }
  }
  result.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) result.inertia += squared_distance(points[i], cents[static_cast<std::size_t>(labels[i])]);
  return result;
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::forest: return "forest";
    case Method::dbscan: return "dbscan";
    case Method::kmeans: return "kmeans";
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view name) {
  if (name == "forest" || name == "ours") return Method::forest;
  if (name == "dbscan") return Method::dbscan;
  if (name == "kmeans") return Method::kmeans;
  return std::nullopt;
}

std::vector<double> ParamGrid::default_dbscan_eps() {
  std::vector<double> out;
  for (int i = 1; i <= 30; ++i) out.push_back(static_cast<double>(i) / 100.0);
  return out;
}

std::size_t ParamGrid::size(Method m) const {
  switch (m) {
    case Method::forest: return split_ratio.size() * eps_quantile.size() * knn.size() * clusters.size();
    case Method::dbscan: return dbscan_eps.size();
    case Method::kmeans: return kmeans_k.size();
  }
  return 0;
}

std::uint64_t repeat_seed(std::uint64_t seed, std::size_t r) {
  std::uint64_t state = seed ^ (0xa0761d6478bd642fULL * (static_cast<std::uint64_t>(r) + 1));
  return splitmix64(state);
}

PointSet standardize(const PointSet& points) {
  const std::size_t n = points.size();
  const std::size_t d = points.dim();
  PointSet out = points;
  if (n == 0) return out;
  for (std::size_t k = 0; k < d; ++k) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += points[i][k];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (points[i][k] - mean) * (points[i][k] - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) out[i][k] = sd > 0.0 ? (points[i][k] - mean) / sd : points[i][k] - mean;
  }
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

void summarize(GridPointResult& g) {
  const auto n = static_cast<double>(g.aris.size());
  if (g.aris.empty()) return;
  g.mean_ari = std::accumulate(g.aris.begin(), g.aris.end(), 0.0) / n;
  double var = 0.0;
  for (double v : g.aris) var += (v - g.mean_ari) * (v - g.mean_ari);
  g.std_ari = std::sqrt(var / n);
}

std::size_t argmax_mean(const std::vector<GridPointResult>& grid) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (grid[i].mean_ari > grid[best].mean_ari) best = i;
  }
  return best;
}

MethodReport benchmark_forest(const Dataset& dataset, const PointSet& data, const ParamGrid& grid,
                              std::size_t repeats, std::uint64_t seed) {
  const Labeling& truth = *dataset.truth;
  const NeighborRanking ranking(data);

  std::vector<double> pair_dist;
  pair_dist.reserve(data.size() * (data.size() - 1) / 2);
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = i + 1; j < data.size(); ++j) pair_dist.push_back(euclidean_distance(data[i], data[j]));
  }
  std::sort(pair_dist.begin(), pair_dist.end());
  std::vector<EpsGraph> graphs;
  for (double qe : grid.eps_quantile) {
    if (!(qe > 0.0 && qe <= 1.0)) throw InvalidInput("benchmark: eps quantile must lie in (0, 1]");
    // Same nearest-rank rule as pairwise_distance_quantile, on the sorted list.
    auto rank = static_cast<std::size_t>(std::ceil(qe * static_cast<double>(pair_dist.size())));
    rank = std::clamp<std::size_t>(rank, 1, pair_dist.size());
    graphs.push_back(eps_graph(data, pair_dist[rank - 1]));
  }
  pair_dist = {};

  const std::size_t nr = grid.split_ratio.size();
  const std::size_t nq = grid.eps_quantile.size();
  const std::size_t nc = grid.clusters.size();
  const std::size_t nk = grid.knn.size();
  // ari[(ratio, repeat)][(qe, kc, kn)]
  std::vector<std::vector<double>> scores(nr * repeats, std::vector<double>(nq * nc * nk, 0.0));
  std::vector<std::vector<char>> failed(nr * repeats, std::vector<char>(nq * nc * nk, 0));
  std::vector<double> forest_ms(nr * repeats, 0.0);

  parallel_for(nr * repeats, grid.threads, [&](std::size_t job) {
    const std::size_t ri = job / repeats;
    const std::size_t rep = job % repeats;
    const auto start = Clock::now();
    ForestClusterParams params;
    params.trees = grid.trees;
    params.candidates = grid.candidates;
    params.split_ratio = grid.split_ratio[ri];
    params.background_quantile = grid.background_quantile;
    params.mode = grid.mode;
    params.seed = repeat_seed(seed, rep);
    params.threads = 1;
    const DensityForest forest = fit_forest(data, params.forest_params(data.size()));
    const std::vector<double> dens = forest.eval_all(data);
    const std::vector<char> candidates = above_quantile(dens, params.background_quantile);
    for (std::size_t qi = 0; qi < nq; ++qi) {
      const LevelSweep sweep = sweep_density_levels(graphs[qi], dens, candidates);
      for (std::size_t ci = 0; ci < nc; ++ci) {
        std::optional<ClusterResult> level;
        try {
          level = pick_level(graphs[qi], dens, candidates, sweep, grid.clusters[ci]);
        } catch (const Error&) {
        }
        for (std::size_t ki = 0; ki < nk; ++ki) {
          const std::size_t slot = (qi * nc + ci) * nk + ki;
          if (!level) {
            failed[job][slot] = 1;
            continue;
          }
          try {
            const ClusterResult full = assign_background(data, *level, grid.knn[ki], &ranking);
            scores[job][slot] = ari(full.labels, truth);
          } catch (const Error&) {
            failed[job][slot] = 1;
          }
        }
      }
    }
    forest_ms[job] = elapsed_ms(start);
  });

  MethodReport report{dataset.name, Method::forest, {}, 0};
  for (std::size_t ri = 0; ri < nr; ++ri) {
    for (std::size_t qi = 0; qi < nq; ++qi) {
      for (std::size_t ci = 0; ci < nc; ++ci) {
        for (std::size_t ki = 0; ki < nk; ++ki) {
          const std::size_t slot = (qi * nc + ci) * nk + ki;
          GridPointResult g;
          g.params = {{"r", grid.split_ratio[ri]},
                      {"q_eps", grid.eps_quantile[qi]},
                      {"k_c", static_cast<double>(grid.clusters[ci])},
                      {"kN", static_cast<double>(grid.knn[ki])},
                      {"m", static_cast<double>(grid.trees)},
                      {"k", static_cast<double>(grid.candidates)},
                      {"q", grid.background_quantile}};
          for (std::size_t rep = 0; rep < repeats; ++rep) {
            const std::size_t job = ri * repeats + rep;
            g.aris.push_back(scores[job][slot]);
            g.failures += failed[job][slot] ? 1 : 0;
            // Forest time is shared by the whole sub-grid of this ratio.
            g.runtime_ms += forest_ms[job] / static_cast<double>(nq * nc * nk);
          }
          summarize(g);
          report.grid.push_back(std::move(g));
        }
      }
    }
  }
  report.best = argmax_mean(report.grid);
  return report;
}

}  // namespace

MethodReport benchmark(const Dataset& dataset, Method method, const ParamGrid& grid, std::size_t repeats,
                       std::uint64_t seed) {
  if (!dataset.truth) throw InvalidInput("benchmark: dataset '" + dataset.name + "' has no truth labels");
  if (grid.size(method) == 0) throw InvalidInput("benchmark: empty parameter grid");
  if (repeats == 0) throw InvalidInput("benchmark: repeats must be at least 1");
  const PointSet data = grid.standardize ? standardize(dataset.points) : dataset.points;
  const Labeling& truth = *dataset.truth;

  if (method == Method::forest) return benchmark_forest(dataset, data, grid, repeats, seed);

  MethodReport report{dataset.name, method, {}, 0};
  if (method == Method::dbscan) {
    report.grid.resize(grid.dbscan_eps.size());
    parallel_for(grid.dbscan_eps.size(), grid.threads, [&](std::size_t i) {
      const auto start = Clock::now();
      GridPointResult& g = report.grid[i];
      g.params = {{"eps", grid.dbscan_eps[i]}, {"minPts", static_cast<double>(grid.min_pts)}};
      try {
        g.aris.push_back(ari(dbscan(data, grid.dbscan_eps[i], grid.min_pts), truth));
      } catch (const Error&) {
        g.aris.push_back(0.0);
        ++g.failures;
      }
      g.runtime_ms = elapsed_ms(start);
      summarize(g);
    });
  } else {
    report.grid.resize(grid.kmeans_k.size());
    parallel_for(grid.kmeans_k.size(), grid.threads, [&](std::size_t i) {
      const auto start = Clock::now();
      GridPointResult& g = report.grid[i];
      g.params = {{"k", static_cast<double>(grid.kmeans_k[i])}};
      for (std::size_t rep = 0; rep < repeats; ++rep) {
        try {
          g.aris.push_back(ari(kmeans(data, grid.kmeans_k[i], repeat_seed(seed, rep), grid.kmeans_max_iter).labels, truth));
        } catch (const Error&) {
          g.aris.push_back(0.0);
          ++g.failures;
        }
      }
      g.runtime_ms = elapsed_ms(start) / static_cast<double>(repeats);
      summarize(g);
    });
  }
  report.best = argmax_mean(report.grid);
  return report;
}

void BenchmarkReport::sort() {
  std::stable_sort(entries.begin(), entries.end(), [](const MethodReport& a, const MethodReport& b) {
    if (a.dataset != b.dataset) return a.dataset < b.dataset;
    return to_string(a.method) < to_string(b.method);
  });
}

namespace {

std::string format_params(const std::map<std::string, double>& params) {
  std::ostringstream os;
  os << std::setprecision(6);
  bool first = true;
  for (const auto& [key, value] : params) {
    os << (first ? "" : ";") << key << '=' << value;
    first = false;
  }
  return os.str();
}

}  // namespace

nlohmann::json BenchmarkReport::to_json(bool with_timing) const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : entries) {
    nlohmann::json grid = nlohmann::json::array();
    for (const auto& g : e.grid) {
      nlohmann::json point{{"params", g.params}, {"aris", g.aris}, {"failures", g.failures},
                           {"mean_ari", g.mean_ari}, {"std_ari", g.std_ari}};
      if (with_timing) point["runtime_ms"] = g.runtime_ms;
      grid.push_back(std::move(point));
    }
    const auto& b = e.best_point();
    out.push_back({{"dataset", e.dataset},
                   {"method", std::string(to_string(e.method))},
                   {"best", {{"params", b.params}, {"mean_ari", b.mean_ari}, {"std_ari", b.std_ari}}},
                   {"grid", std::move(grid)}});
  }
  return nlohmann::json{{"format", "bsc-benchmark"}, {"version", 1}, {"entries", std::move(out)}};
}

std::string BenchmarkReport::to_csv(bool with_timing) const {
  std::ostringstream os;
  os << "dataset,method,params,mean_ari,std_ari,runtime_ms\n" << std::setprecision(10);
  for (const auto& e : entries) {
    const auto& b = e.best_point();
    os << e.dataset << ',' << to_string(e.method) << ',' << format_params(b.params) << ',' << b.mean_ari << ','
       << b.std_ari << ',';
    if (with_timing) os << b.runtime_ms;
    os << '\n';
  }
  return os.str();
}

std::string BenchmarkReport::to_table_csv() const {
  std::vector<std::string> datasets;
  std::vector<Method> methods;
  for (const auto& e : entries) {
    if (std::find(datasets.begin(), datasets.end(), e.dataset) == datasets.end()) datasets.push_back(e.dataset);
    if (std::find(methods.begin(), methods.end(), e.method) == methods.end()) methods.push_back(e.method);
  }
  std::ostringstream os;
  os << "dataset";
  for (Method m : methods) os << ',' << to_string(m);
  os << '\n' << std::setprecision(10);
  for (const auto& ds : datasets) {
    os << ds;
    for (Method m : methods) {
      os << ',';
      for (const auto& e : entries) {
        if (e.dataset == ds && e.method == m) os << e.best_point().mean_ari;
      }
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace bsc
