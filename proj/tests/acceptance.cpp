// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "bsc/clustering.hpp"
#include "bsc/data.hpp"
#include "bsc/density.hpp"
#include "bsc/eval.hpp"
#include "bsc/graph.hpp"
#include "bsc/partition.hpp"
#include "bsc/setops.hpp"
#include "oracles.hpp"

using namespace bsc;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(precision);
  os << v;
  return os.str();
}

// ---- 1 ----------------------------------------------------------------------

Outcome synthetic_table() {
  const auto start = Clock::now();
  struct Target {
    SyntheticKind kind;
    double threshold;
  };
  const Target targets[] = {{SyntheticKind::moons, 0.95},
                            {SyntheticKind::circles, 0.95},
                            {SyntheticKind::aniso, 0.95},
                            {SyntheticKind::varied, 0.85}};
  ParamGrid grid;
  bool ok = true;
  std::string detail;
  for (const auto& t : targets) {
    Dataset ds = gen_synthetic(t.kind, 1500, default_noise(t.kind), 0);
    ds.name = std::string(to_string(t.kind));
    const MethodReport r = benchmark(ds, Method::forest, grid, 10, 0);
    const double best = r.best_point().mean_ari;
    ok = ok && best >= t.threshold;
    detail += ds.name + "=" + fmt(best) + "(>=" + fmt(t.threshold, 2) + ") ";
  }
  const double secs = seconds_since(start);
  ok = ok && secs < 15 * 60;
  detail += "time=" + fmt(secs, 1) + "s(<900s)";
  return {ok, detail};
}

// ---- 2 ----------------------------------------------------------------------

Outcome iris_table() {
  Dataset iris = read_csv(std::string(BSC_DATA_DIR) + "/iris.csv");
  iris.name = "iris";
  if (iris.points.size() != 150 || iris.points.dim() != 4) return {false, "iris.csv is not 150x4"};
  const MethodReport r = benchmark(iris, Method::forest, ParamGrid{}, 10, 0);
  const double best = r.best_point().mean_ari;
  return {best >= 0.70, "iris=" + fmt(best) + "(>=0.70)"};
}

// ---- 3 ----------------------------------------------------------------------

Outcome ari_oracle() {
  Rng rng(3);
  double worst = 0.0;
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 1 + rng.index(200);
    const int ka = 1 + static_cast<int>(rng.index(8));
    const int kb = 1 + static_cast<int>(rng.index(8));
    std::vector<int> a(n);
    std::vector<int> b(n);
    for (auto& v : a) v = static_cast<int>(rng.index(static_cast<std::size_t>(ka)));
    for (auto& v : b) v = static_cast<int>(rng.index(static_cast<std::size_t>(kb)));
    worst = std::max(worst, std::abs(ari(a, b) - oracle::pair_count_ari(a, b)));
  }
  return {worst <= 1e-12, "max |ari - pair_count| = " + std::to_string(worst) + " (<=1e-12)"};
}

// ---- 4 ----------------------------------------------------------------------

Outcome normalization() {
  Rng rng(4);
  double worst_mass = 0.0;
  double lo = 1e9;
  double hi = -1e9;
  for (int f = 0; f < 100; ++f) {
    const std::size_t d = 1 + rng.index(3);
    const std::size_t n = 100 + rng.index(400);
    PointSet pts(d);
    std::vector<double> x(d);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& v : x) v = rng.normal() * (1.0 + static_cast<double>(f % 3));
      pts.push_back(x);
    }
    ForestParams fp;
    fp.trees = 1 + rng.index(10);
    fp.tree.splits = rng.index(200);
    fp.tree.candidates = 1 + rng.index(5);
    fp.tree.mode = rng.index(2) ? SplitMode::pure : SplitMode::adaptive;
    fp.seed = static_cast<std::uint64_t>(f);
    fp.threads = 1;
    const DensityForest forest = fit_forest(pts, fp);
    for (const auto& t : forest.trees()) {
      const double mass = std::accumulate(t.cell_mass.begin(), t.cell_mass.end(), t.outside_mass);
      worst_mass = std::max(worst_mass, std::abs(mass - 1.0));
    }
    // Scaled data always lies in the root, so the integral over the root is 1.
    const Box& root = forest.root();
    Rng mc(1000 + static_cast<std::uint64_t>(f));
    const int samples = 200000;
    double sum = 0.0;
    std::vector<double> y(d);
    for (int s = 0; s < samples; ++s) {
      for (std::size_t k = 0; k < d; ++k) y[k] = root.lower[k] + root.side(k) * mc.uniform();
      sum += forest.eval_scaled(y);
    }
    const double integral = root.volume() * sum / samples;
    lo = std::min(lo, integral);
    hi = std::max(hi, integral);
  }
  const bool ok = worst_mass <= 1e-12 && lo >= 0.99 && hi <= 1.01;
  return {ok, "max |sum mass - 1| = " + std::to_string(worst_mass) + ", MC integral in [" + fmt(lo) + ", " + fmt(hi) +
                  "] (within [0.99, 1.01])"};
}

// ---- 5 ----------------------------------------------------------------------

Outcome uncertainty_control() {
  const auto start = Clock::now();
  const GaussianMixture mix = GaussianMixture::two_gaussians();
  const Lattice lattice(Box({-2.6, -1.6}, {2.6, 1.6}), 256);
  const GridDensity gd = GridDensity::sample(lattice, [&](std::span<const double> x) { return mix.density(x); });
  const double fmax = gd.max_value();
  const Dataset sample = mix.sample(5000, 5);
  ForestParams fp;
  fp.trees = 20;
  fp.tree.splits = 2000;
  fp.tree.mode = SplitMode::adaptive;
  fp.seed = 5;
  const DensityForest forest = fit_forest(sample.points, fp);
  std::vector<double> diam = forest.leaf_diameters_raw();
  std::nth_element(diam.begin(), diam.begin() + static_cast<std::ptrdiff_t>(diam.size() / 2), diam.end());
  const double sigma = 2.0 * diam[diam.size() / 2];
  const double eps = 0.1 * fmax;
  bool ok = true;
  std::string detail;
  for (double frac : {0.3, 0.5, 0.7}) {
    const auto r = check_uncertainty_control(gd, sample.points, forest, frac * fmax, eps, sigma);
    ok = ok && r.violation_fraction() <= 0.01;
    detail += "rho=" + fmt(frac, 1) + "f: " + fmt(100 * r.violation_fraction(), 3) + "% ";
  }
  const double secs = seconds_since(start);
  ok = ok && secs < 300;
  detail += "(<=1%) sigma=" + fmt(sigma) + " time=" + fmt(secs, 1) + "s(<300s)";
  return {ok, detail};
}

// ---- 6 ----------------------------------------------------------------------

Outcome graph_oracles() {
  Rng rng(6);
  int cc_ok = 0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng.index(300);
    EpsGraph g{n, 1.0, std::vector<std::vector<std::size_t>>(n)};
    const std::size_t edges = rng.index(2 * n);
    for (std::size_t e = 0; e < edges; ++e) {
      const std::size_t a = rng.index(n);
      const std::size_t b = rng.index(n);
      if (a == b) continue;
      g.adjacency[a].push_back(b);
      g.adjacency[b].push_back(a);
    }
    cc_ok += oracle::same_partition(connected_components(g).labels, oracle::bfs_components(g.adjacency)) ? 1 : 0;
  }

  int eg_ok = 0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t d = 1 + rng.index(4);
    const std::size_t n = 50 + rng.index(450);
    PointSet pts(d);
    std::vector<double> x(d);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& v : x) v = std::round(40.0 * rng.uniform()) / 40.0;  // lattice points force exact-radius ties
      pts.push_back(x);
    }
    const double eps = 0.025 * static_cast<double>(1 + rng.index(8));
    const EpsGraph a = eps_graph(pts, eps);
    const EpsGraph b = eps_graph_brute(pts, eps);
    bool same = a.n == b.n;
    for (std::size_t i = 0; same && i < n; ++i) {
      auto ea = a.adjacency[i];
      auto eb = b.adjacency[i];
      std::sort(ea.begin(), ea.end());
      std::sort(eb.begin(), eb.end());
      same = ea == eb;
    }
    eg_ok += same ? 1 : 0;
  }

  int knn_ok = 0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t d = 1 + rng.index(3);
    const std::size_t nr = 5 + rng.index(150);
    PointSet refs(d);
    PointSet queries(d);
    std::vector<double> x(d);
    for (std::size_t i = 0; i < nr; ++i) {
      for (auto& v : x) v = std::round(10.0 * rng.uniform()) / 10.0;
      refs.push_back(x);
    }
    for (std::size_t i = 0; i < 60; ++i) {
      for (auto& v : x) v = std::round(10.0 * rng.uniform()) / 10.0;
      queries.push_back(x);
    }
    std::vector<int> labels(nr);
    for (auto& l : labels) l = static_cast<int>(rng.index(4));
    const std::size_t k = 1 + rng.index(std::min<std::size_t>(nr, 7));
    knn_ok += knn_classify(queries, refs, labels, k) == oracle::knn_full_sort(queries, refs, labels, k) ? 1 : 0;
  }
  const bool ok = cc_ok == 200 && eg_ok == 50 && knn_ok == 50;
  return {ok, "components " + std::to_string(cc_ok) + "/200, eps_graph " + std::to_string(eg_ok) + "/50, knn " +
                  std::to_string(knn_ok) + "/50"};
}

// ---- 7 ----------------------------------------------------------------------

template <typename Pred>
GridSet mask_from(const Lattice& lat, Pred pred) {
  GridSet s = GridSet::empty(lat);
  std::vector<double> x(lat.dim());
  for (std::size_t i = 0; i < lat.node_count(); ++i) {
    lat.position_into(i, x);
    s.mask[i] = pred(x) ? 1 : 0;
  }
  return s;
}

// Largest gap between the set's boundary and the circle of radius r, seen from
// the nodes: members beyond r and non-members inside r.
double disk_error(const GridSet& s, double r) {
  double err = 0.0;
  std::vector<double> x(2);
  for (std::size_t i = 0; i < s.lattice.node_count(); ++i) {
    s.lattice.position_into(i, x);
    const double d = std::hypot(x[0], x[1]);
    if (s.mask[i] && d > r) err = std::max(err, d - r);
    if (!s.mask[i] && d < r) err = std::max(err, r - d);
  }
  return err;
}

Outcome setops_oracles() {
  const Lattice lat(Box::cube(2, 1.0), 256);
  const double h = lat.max_step();
  const double R = 0.5;
  const double delta = 0.2;
  const GridSet disk = mask_from(lat, [&](const auto& x) { return std::hypot(x[0], x[1]) <= R; });
  const double plus_err = disk_error(tube(disk, delta, TubeSign::plus), R + delta);
  const double minus_err = disk_error(tube(disk, delta, TubeSign::minus), R - delta);
  const double psi_err = std::abs(psi_star(disk, delta) - delta);

  // Symmetric difference of two shifted disks against the lens formula. One
  // lattice step of boundary displacement moves the area by perimeter * h.
  const double s = 0.3;
  const GridSet shifted = mask_from(lat, [&](const auto& x) { return std::hypot(x[0] - s, x[1]) <= R; });
  const double lens = 2 * R * R * std::acos(s / (2 * R)) - 0.5 * s * std::sqrt(4 * R * R - s * s);
  const double analytic = 2 * std::numbers::pi * R * R - 2 * lens;
  const double sd_err = std::abs(sym_diff_measure(disk, shifted) - analytic);
  const double sd_tol = 2 * (2 * std::numbers::pi * R) * h;

  const Lattice small(Box::cube(2, 1.0), 64);
  Rng rng(7);
  int dual_ok = 0;
  for (int t = 0; t < 100; ++t) {
    GridSet a = GridSet::empty(small);
    const double p = rng.uniform();
    for (auto& m : a.mask) m = rng.uniform() < p ? 1 : 0;
    const double d = 0.01 + 0.3 * rng.uniform();
    dual_ok += tube(a, d, TubeSign::minus).mask == tube(a.complement(), d, TubeSign::plus).complement().mask ? 1 : 0;
  }
  const bool ok = plus_err <= h && minus_err <= h && psi_err <= h && sd_err <= sd_tol && dual_ok == 100;
  return {ok, "step=" + fmt(h, 5) + " plus_err=" + fmt(plus_err, 5) + " minus_err=" + fmt(minus_err, 5) +
                  " psi_err=" + fmt(psi_err, 5) + " symdiff_err=" + fmt(sd_err, 5) + "(<=" + fmt(sd_tol, 5) +
                  ") duality " + std::to_string(dual_ok) + "/100"};
}

// ---- 8 ----------------------------------------------------------------------

Outcome level_recovery() {
  int ok = 0;
  double worst_excess = -1e9;
  for (std::uint64_t trial = 0; trial < 50; ++trial) {
    Rng rng(8000 + trial);
    const double rho_s = 0.1 + 0.8 * rng.uniform();
    const double eps = 0.002 + 0.02 * rng.uniform();
    const double top = rho_s + (10 + 10 * rng.uniform()) * eps;
    // Two groups in the plane joined by a bridge whose weakest point is rho_s.
    PointSet pts(2);
    std::vector<double> levels;
    auto add = [&](double x, double y, double level) {
      const double p[2] = {x, y};
      pts.push_back(p);
      levels.push_back(level);
    };
    for (int i = 0; i < 40; ++i) {
      add(-2.0 - rng.uniform(), rng.uniform() - 0.5, top - eps * rng.uniform());
      add(2.0 + rng.uniform(), rng.uniform() - 0.5, top - eps * rng.uniform());
    }
    const int steps = 100;
    const int weakest = 1 + static_cast<int>(rng.index(steps - 1));
    for (int i = 1; i < steps; ++i) {
      // Levels fall linearly towards the weakest point, so the bridge splits exactly once.
      const double level = rho_s + (top - rho_s) * std::abs(i - weakest) / steps;
      add(-2.0 + 4.0 * i / steps, 0.0, level);
    }
    const double tau = 0.06;
    // The groups themselves must stay tau-connected at every level.
    add(-2.0, 0.0, top);
    add(2.0, 0.0, top);
    for (double y = -0.5; y <= 0.5; y += 0.05) {
      for (double x = 0.0; x <= 1.0; x += 0.05) {
        add(-2.0 - x, y, top);
        add(2.0 + x, y, top);
      }
    }
    const PointLevelFamily family(pts, levels);
    const ClusterResult r = algorithm1_scan(family, tau, eps, rho_s * rng.uniform());
    const bool good = r.cluster_count == 2 && r.rho_out >= rho_s && r.rho_out <= rho_s + 3 * eps;
    ok += good ? 1 : 0;
    worst_excess = std::max(worst_excess, (r.rho_out - rho_s) / eps);
  }
  return {ok == 50, std::to_string(ok) + "/50 trials in [rho_s, rho_s + 3 eps], max (rho_out - rho_s)/eps = " +
                        fmt(worst_excess, 3)};
}

// ---- 9 ----------------------------------------------------------------------

Outcome adaptive_splitting() {
  Rng gen(9);
  PointSet pts(2);
  for (int i = 0; i < 1000; ++i) {
    const double x[2] = {std::clamp(-0.5 + 0.1 * gen.normal(), -1.0, 1.0), std::clamp(0.3 + 0.1 * gen.normal(), -1.0, 1.0)};
    pts.push_back(x);
  }
  double pure = 0.0;
  double adaptive = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng a(seed);
    Rng b(seed);
    pure += static_cast<double>(nonempty_cell_count(build_partition(Box::cube(2, 1.0), 1000, SplitMode::pure, &pts, a), pts));
    adaptive += static_cast<double>(
        nonempty_cell_count(build_partition(Box::cube(2, 1.0), 1000, SplitMode::adaptive, &pts, b), pts));
  }
  pure /= 50;
  adaptive /= 50;
  return {adaptive > pure, "mean nonempty leaves adaptive=" + fmt(adaptive, 1) + " pure=" + fmt(pure, 1)};
}

// ---- 10 ---------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Maps every regular file under dir to its bytes.
std::vector<std::pair<std::string, std::string>> snapshot(const fs::path& dir) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out.emplace_back(fs::relative(e.path(), dir).string(), slurp(e.path()));
  }
  std::sort(out.begin(), out.end());
  return out;
}

Outcome cli_determinism() {
  const fs::path root = fs::temp_directory_path() / "bsc_acceptance_cli";
  fs::remove_all(root);
  const std::string cli = BSC_CLI_PATH;
  const std::string data_dir = BSC_DATA_DIR;
  auto run_all = [&](const fs::path& out) -> int {
    fs::create_directories(out);
    // Same command lines in both runs; only the working directory differs.
    const std::string o = ".";
    const std::vector<std::string> cmds = {
        cli + " gen --kind moons --n 1500 --seed 7 -o " + o + "/moons.csv",
        cli + " gen --kind varied --n 600 --seed 3 -o " + o + "/varied.csv",
        cli + " fit -i " + o + "/moons.csv -o " + o + "/forest.json -m 10 -r 0.2 --seed 4",
        cli + " cluster -i " + o + "/moons.csv --labels " + o + "/labels.csv --meta " + o + "/meta.json --svg " + o +
            "/moons.svg -r 0.05 --eps-quantile 0.03 --clusters 2 --seed 4",
        cli + " benchmark --suite csv --csv " + o + "/varied.csv," + data_dir +
            "/iris.csv --methods forest,dbscan,kmeans --repeats 2 -m 10 --ratios 0.1,0.3 --eps-quantiles 0.03,0.1"
            " --knns 1,5 --clusters-grid 2,3 --seed 1 --out-json " + o + "/bench.json --out-csv " + o +
            "/bench.csv --out-table " + o + "/table.csv",
        cli + " validate -n 2000 -p 800 -m 5 --resolution 96 --seed 2 -o " + o + "/validate.json --grid-dir " + o +
            "/grids",
    };
    for (const auto& c : cmds) {
      const int rc = std::system(("cd \"" + out.string() + "\" && " + c + " > /dev/null 2>&1").c_str());
      if (rc != 0) {
        std::cerr << "command failed (" << rc << "): " << c << '\n';
        return rc;
      }
    }
    return 0;
  };
  if (run_all(root / "a") != 0 || run_all(root / "b") != 0) return {false, "a CLI command failed"};
  const auto a = snapshot(root / "a");
  const auto b = snapshot(root / "b");
  bool same = a.size() == b.size();
  std::string diff;
  for (std::size_t i = 0; same && i < a.size(); ++i) {
    if (a[i] != b[i]) {
      same = false;
      diff = a[i].first;
    }
  }
  fs::remove_all(root);
  return {same && a.size() >= 14, std::to_string(a.size()) + " files compared" + (diff.empty() ? "" : ", differs: " + diff)};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all = {
      {1, "synthetic best mean ARI", synthetic_table},
      {2, "iris best mean ARI", iris_table},
      {3, "ARI pair-counting oracle", ari_oracle},
      {4, "density normalisation", normalization},
      {5, "uncertainty control", uncertainty_control},
      {6, "graph oracles", graph_oracles},
      {7, "set-operation oracles", setops_oracles},
      {8, "level recovery", level_recovery},
      {9, "adaptive splitting", adaptive_splitting},
      {10, "CLI determinism", cli_determinism},
  };
  // Optional arguments select criteria by number.
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto start = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << "CRITERION " << c.id << " [" << c.name << "]: " << (o.pass ? "PASS" : "FAIL") << " | " << o.detail
              << " | " << fmt(seconds_since(start), 1) << "s" << std::endl;
  }
  std::cout << (failed == 0 ? "ALL CRITERIA PASS" : std::to_string(failed) + " CRITERIA FAILED") << std::endl;
  return failed == 0 ? 0 : 1;
}
