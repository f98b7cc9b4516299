#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "bsc/clustering.hpp"
#include "bsc/data.hpp"
#include "bsc/density.hpp"
#include "bsc/eval.hpp"
#include "bsc/setops.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitNoResult = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> parse_doubles(const std::string& text, const std::string& what) {
  std::vector<double> out;
  for (const auto& s : split_list(text)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(s, &used));
      if (used != s.size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      throw UsageError(what + ": '" + s + "' is not a number");
    }
  }
  return out;
}

std::vector<std::size_t> parse_sizes(const std::string& text, const std::string& what) {
  std::vector<std::size_t> out;
  for (double v : parse_doubles(text, what)) {
    if (v < 0 || v != std::floor(v)) throw UsageError(what + ": expected non-negative integers");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

bsc::SplitMode parse_mode(const std::string& s) {
  if (s == "adaptive") return bsc::SplitMode::adaptive;
  if (s == "pure") return bsc::SplitMode::pure;
  throw UsageError("unknown split mode '" + s + "' (valid: pure, adaptive)");
}

std::string json_token(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_array()) {
    std::string out;
    for (const auto& e : v) out += (out.empty() ? "" : ",") + json_token(e);
    return out;
  }
  return v.dump();
}

// Rebuilds the argument list as: config-file options, then BSC_SEED, then the
// user's own flags. Every option keeps its last value, which gives
// defaults < file < environment < flags.
std::vector<std::string> layered_args(int argc, char** argv) {
  std::vector<std::string> user(argv + 1, argv + argc);
  std::string config_path;
  for (std::size_t i = 0; i < user.size(); ++i) {
    if (user[i] == "--config" && i + 1 < user.size()) config_path = user[i + 1];
    if (user[i].rfind("--config=", 0) == 0) config_path = user[i].substr(9);
  }
  if (user.empty() || user[0].rfind("-", 0) == 0) return user;

  std::vector<std::string> out{user[0]};
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw UsageError("cannot open config file '" + config_path + "'");
    json cfg;
    try {
      in >> cfg;
    } catch (const json::exception& e) {
      throw UsageError("config file '" + config_path + "': " + e.what());
    }
    if (!cfg.is_object()) throw UsageError("config file '" + config_path + "' must hold a JSON object");
    for (const auto& [key, value] : cfg.items()) {
      if (key == "config") continue;
      if (value.is_boolean()) {
        out.push_back("--" + key + "=" + json_token(value));
      } else {
        out.push_back("--" + key);
        out.push_back(json_token(value));
      }
    }
  }
  if (const char* env = std::getenv("BSC_SEED"); env != nullptr && *env != '\0') {
    out.push_back("--seed");
    out.push_back(env);
  }
  out.insert(out.end(), user.begin() + 1, user.end());
  return out;
}

std::ofstream open_for_write(const std::string& path) {
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw bsc::Error("cannot open '" + path + "' for writing");
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  auto out = open_for_write(path);
  out << text;
  if (!out) throw bsc::Error("write to '" + path + "' failed");
}

std::string dataset_name(const std::string& path) { return fs::path(path).stem().string(); }

bsc::Dataset load_dataset(const std::string& path) {
  if (!fs::exists(path)) throw UsageError("input file '" + path + "' does not exist");
  bsc::Dataset ds = bsc::read_csv(path);
  ds.name = dataset_name(path);
  return ds;
}

// Scatter of the first two coordinates, one palette colour per label.
std::string scatter_svg(const bsc::PointSet& points, const bsc::Labeling& labels) {
  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  constexpr double size = 600.0;
  constexpr double pad = 20.0;
  const std::size_t d = points.dim();
  double lo[2] = {0.0, 0.0};
  double hi[2] = {1.0, 1.0};
  for (std::size_t k = 0; k < 2 && k < d; ++k) {
    lo[k] = hi[k] = points.empty() ? 0.0 : points[0][k];
    for (std::size_t i = 0; i < points.size(); ++i) {
      lo[k] = std::min(lo[k], points[i][k]);
      hi[k] = std::max(hi[k], points[i][k]);
    }
    if (hi[k] == lo[k]) hi[k] = lo[k] + 1.0;
  }
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double x = points[i][0];
    const double y = d > 1 ? points[i][1] : 0.0;
    const double px = pad + (x - lo[0]) / (hi[0] - lo[0]) * (size - 2 * pad);
    const double py = size - pad - (d > 1 ? (y - lo[1]) / (hi[1] - lo[1]) : 0.5) * (size - 2 * pad);
    const int l = labels[i];
    const char* colour = l < 0 ? "#000000" : palette[static_cast<std::size_t>(l) % 10];
    os << "<circle cx=\"" << px << "\" cy=\"" << py << "\" r=\"2\" fill=\"" << colour << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

json scan_log_json(const std::vector<bsc::ScanEntry>& log) {
  json out = json::array();
  for (const auto& e : log) out.push_back({{"level", e.level}, {"components", e.components}});
  return out;
}

struct ForestOptions {
  std::size_t trees = 100;
  double ratio = 0.3;
  std::size_t candidates = 5;
  std::string mode = "adaptive";
  double holdout = 0.3;
  std::uint64_t seed = 0;
  std::size_t threads = 0;

  void add(CLI::App* cmd) {
    cmd->add_option("-m,--trees", trees, "number of trees m")->capture_default_str();
    cmd->add_option("-r,--ratio", ratio, "split ratio r, p = floor(n r)")->capture_default_str();
    cmd->add_option("-k,--candidates", candidates, "candidate partitions per tree")->capture_default_str();
    cmd->add_option("--mode", mode, "pure or adaptive splitting")->capture_default_str();
    cmd->add_option("--holdout", holdout, "holdout fraction for ANLL scoring")->capture_default_str();
    cmd->add_option("--seed", seed, "master seed (env BSC_SEED)")->capture_default_str();
    cmd->add_option("--threads", threads, "worker threads, 0 = all cores")->capture_default_str();
  }
};

// ---- gen -------------------------------------------------------------------

struct GenOptions {
  std::string kind;
  std::size_t n = 1500;
  double noise = -1.0;
  std::uint64_t seed = 0;
  std::string out;
};

int run_gen(const GenOptions& o) {
  const auto kind = bsc::parse_synthetic_kind(o.kind);
  if (!kind) throw UsageError("unknown kind '" + o.kind + "' (valid: " + bsc::synthetic_kind_names() + ")");
  const double noise = o.noise < 0.0 ? bsc::default_noise(*kind) : o.noise;
  const bsc::Dataset ds = bsc::gen_synthetic(*kind, o.n, noise, o.seed);
  if (const auto parent = fs::path(o.out).parent_path(); !parent.empty()) fs::create_directories(parent);
  bsc::write_csv(o.out, ds);
  return 0;
}

// ---- fit -------------------------------------------------------------------

struct FitOptions {
  std::string input;
  std::string out;
  long long splits = -1;
  ForestOptions forest;
};

int run_fit(const FitOptions& o) {
  const bsc::Dataset ds = load_dataset(o.input);
  bsc::ForestParams fp;
  fp.trees = o.forest.trees;
  fp.tree.candidates = o.forest.candidates;
  fp.tree.mode = parse_mode(o.forest.mode);
  fp.tree.holdout_fraction = o.forest.holdout;
  fp.tree.splits = o.splits >= 0 ? static_cast<std::size_t>(o.splits)
                                 : static_cast<std::size_t>(std::floor(static_cast<double>(ds.points.size()) * o.forest.ratio));
  fp.seed = o.forest.seed;
  fp.threads = o.forest.threads;
  const bsc::DensityForest forest = bsc::fit_forest(ds.points, fp);
  write_text(o.out, forest.to_json().dump(1) + "\n");
  return 0;
}

// ---- cluster ---------------------------------------------------------------

struct ClusterOptions {
  std::string input;
  std::string labels_out;
  std::string meta_out;
  std::string svg_out;
  double q = 0.1;
  std::size_t knn = 1;
  std::size_t clusters = 2;
  double eps_quantile = 0.05;
  ForestOptions forest;
};

int run_cluster(const ClusterOptions& o) {
  const bsc::Dataset ds = load_dataset(o.input);
  bsc::ForestClusterParams p;
  p.trees = o.forest.trees;
  p.split_ratio = o.forest.ratio;
  p.background_quantile = o.q;
  p.candidates = o.forest.candidates;
  p.knn = o.knn;
  p.clusters = o.clusters;
  p.eps_quantile = o.eps_quantile;
  p.mode = parse_mode(o.forest.mode);
  p.holdout_fraction = o.forest.holdout;
  p.seed = o.forest.seed;
  p.threads = o.forest.threads;

  json params{{"m", p.trees},           {"r", p.split_ratio}, {"q", p.background_quantile},
              {"k", p.candidates},      {"kN", p.knn},        {"k_c", p.clusters},
              {"q_eps", p.eps_quantile}, {"mode", o.forest.mode}, {"holdout", p.holdout_fraction},
              {"seed", p.seed}};

  bsc::ClusterResult result;
  try {
    result = bsc::cluster_forest(ds.points, p);
  } catch (const bsc::NoValidLevel& e) {
    std::cerr << "bsc cluster: " << e.what() << "\nscan_log:\n";
    for (const auto& s : e.scan_log) std::cerr << "  level=" << s.level << " components=" << s.components << '\n';
    if (!o.meta_out.empty()) {
      json meta{{"input", o.input}, {"params", params}, {"error", e.what()}, {"scan_log", scan_log_json(e.scan_log)}};
      write_text(o.meta_out, meta.dump(1) + "\n");
    }
    return kExitNoResult;
  }

  std::ostringstream labels;
  labels << "index,label\n";
  for (std::size_t i = 0; i < result.labels.size(); ++i) labels << i << ',' << result.labels[i] << '\n';
  write_text(o.labels_out, labels.str());

  json meta{{"input", o.input},
            {"n", ds.points.size()},
            {"params", params},
            {"rho_out", result.rho_out},
            {"graph_radius", result.graph_radius},
            {"clusters", result.cluster_count},
            {"scan_log", scan_log_json(result.scan_log)}};
  if (ds.truth) meta["ari"] = bsc::ari(result.labels, *ds.truth);
  if (!o.meta_out.empty()) write_text(o.meta_out, meta.dump(1) + "\n");
  if (!o.svg_out.empty()) write_text(o.svg_out, scatter_svg(ds.points, result.labels));
  if (ds.truth) std::cout << "ARI " << meta["ari"].get<double>() << '\n';
  return 0;
}

// ---- benchmark -------------------------------------------------------------

struct BenchmarkOptions {
  std::string suite = "synthetic";
  std::string csv;
  std::string methods = "forest,dbscan,kmeans";
  std::size_t repeats = 10;
  std::size_t n = 1500;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  bool standardize = false;
  bool timings = false;
  std::string ratios;
  std::string eps_quantiles;
  std::string knns;
  std::string clusters;
  std::string dbscan_eps;
  std::string kmeans_k;
  std::size_t trees = 100;
  std::size_t candidates = 5;
  double q = 0.1;
  std::string mode = "adaptive";
  std::string out_json;
  std::string out_csv;
  std::string out_table;
};

int run_benchmark(const BenchmarkOptions& o) {
  std::vector<bsc::Method> methods;
  for (const auto& name : split_list(o.methods)) {
    const auto m = bsc::parse_method(name);
    if (!m) throw UsageError("unknown method '" + name + "' (valid: forest, dbscan, kmeans)");
    methods.push_back(*m);
  }
  if (methods.empty()) throw UsageError("method list is empty");

  std::vector<bsc::Dataset> datasets;
  if (o.suite == "synthetic") {
    for (auto kind : {bsc::SyntheticKind::circles, bsc::SyntheticKind::moons, bsc::SyntheticKind::varied,
                      bsc::SyntheticKind::aniso}) {
      bsc::Dataset ds = bsc::gen_synthetic(kind, o.n, bsc::default_noise(kind), o.seed);
      ds.name = std::string(bsc::to_string(kind));
      datasets.push_back(std::move(ds));
    }
  } else if (o.suite == "csv") {
    for (const auto& path : split_list(o.csv)) datasets.push_back(load_dataset(path));
    if (datasets.empty()) throw UsageError("--suite csv needs --csv with at least one file");
  } else {
    throw UsageError("unknown suite '" + o.suite + "' (valid: synthetic, csv)");
  }

  bsc::ParamGrid grid;
  if (!o.ratios.empty()) grid.split_ratio = parse_doubles(o.ratios, "--ratios");
  if (!o.eps_quantiles.empty()) grid.eps_quantile = parse_doubles(o.eps_quantiles, "--eps-quantiles");
  if (!o.knns.empty()) grid.knn = parse_sizes(o.knns, "--knns");
  if (!o.clusters.empty()) grid.clusters = parse_sizes(o.clusters, "--clusters-grid");
  if (!o.dbscan_eps.empty()) grid.dbscan_eps = parse_doubles(o.dbscan_eps, "--dbscan-eps");
  if (!o.kmeans_k.empty()) grid.kmeans_k = parse_sizes(o.kmeans_k, "--kmeans-k");
  grid.trees = o.trees;
  grid.candidates = o.candidates;
  grid.background_quantile = o.q;
  grid.mode = parse_mode(o.mode);
  grid.standardize = o.standardize;
  grid.threads = o.threads;

  bsc::BenchmarkReport report;
  for (const auto& ds : datasets) {
    for (bsc::Method m : methods) {
      std::cerr << "benchmark " << ds.name << " / " << bsc::to_string(m) << " (" << grid.size(m) << " grid points)\n";
      try {
        report.entries.push_back(bsc::benchmark(ds, m, grid, o.repeats, o.seed));
        const auto& best = report.entries.back().best_point();
        std::cerr << "  best mean ARI " << best.mean_ari << '\n';
      } catch (const bsc::Error& e) {
        std::cerr << "  skipped: " << e.what() << '\n';
      }
    }
  }
  report.sort();

  if (!o.out_json.empty()) write_text(o.out_json, report.to_json(o.timings).dump(1) + "\n");
  if (!o.out_csv.empty()) write_text(o.out_csv, report.to_csv(o.timings));
  if (!o.out_table.empty()) write_text(o.out_table, report.to_table_csv());
  std::cout << report.to_table_csv();
  return 0;
}

// ---- validate --------------------------------------------------------------

struct ValidateOptions {
  std::string mixture;
  std::size_t n = 5000;
  std::size_t splits = 2000;
  std::size_t trees = 20;
  std::size_t candidates = 5;
  std::string mode = "adaptive";
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  std::string levels = "0.3,0.5,0.7";
  std::string rho;
  double eps_fraction = 0.1;
  double eps = -1.0;
  double sigma = -1.0;
  std::size_t resolution = 256;
  std::string out = "validate.json";
  std::string grid_dir;
};

int run_validate(const ValidateOptions& o) {
  const bsc::GaussianMixture mix =
      o.mixture.empty() ? bsc::GaussianMixture::two_gaussians() : bsc::GaussianMixture::parse(o.mixture);
  const std::size_t d = mix.dim();
  if (d > 2) throw bsc::UnsupportedDimension("validate supports d <= 2, mixture has d = " + std::to_string(d));

  // Box covering every component out to four standard deviations.
  std::vector<double> lo(d, 0.0);
  std::vector<double> hi(d, 0.0);
  for (std::size_t k = 0; k < d; ++k) {
    lo[k] = hi[k] = mix.components()[0].mean[k];
    for (const auto& c : mix.components()) {
      lo[k] = std::min(lo[k], c.mean[k] - 4.0 * c.stddev);
      hi[k] = std::max(hi[k], c.mean[k] + 4.0 * c.stddev);
    }
  }
  const bsc::Lattice lattice(bsc::Box(lo, hi), o.resolution);
  const bsc::GridDensity gd =
      bsc::GridDensity::sample(lattice, [&](std::span<const double> x) { return mix.density(x); });
  const double fmax = gd.max_value();

  const bsc::Dataset sample = mix.sample(o.n, o.seed);
  bsc::ForestParams fp;
  fp.trees = o.trees;
  fp.tree.candidates = o.candidates;
  fp.tree.splits = o.splits;
  fp.tree.mode = parse_mode(o.mode);
  fp.seed = o.seed;
  fp.threads = o.threads;
  const bsc::DensityForest forest = bsc::fit_forest(sample.points, fp);

  double sigma = o.sigma;
  if (sigma <= 0.0) {
    std::vector<double> diam = forest.leaf_diameters_raw();
    std::nth_element(diam.begin(), diam.begin() + static_cast<std::ptrdiff_t>(diam.size() / 2), diam.end());
    sigma = 2.0 * diam[diam.size() / 2];
  }
  const double eps = o.eps > 0.0 ? o.eps : o.eps_fraction * fmax;

  std::vector<double> rhos;
  if (!o.rho.empty()) {
    rhos = parse_doubles(o.rho, "--rho");
  } else {
    for (double f : parse_doubles(o.levels, "--levels")) rhos.push_back(f * fmax);
  }
  if (rhos.empty()) throw UsageError("no levels to check");

  if (!o.grid_dir.empty()) {
    fs::create_directories(o.grid_dir);
    bsc::write_grid_binary((fs::path(o.grid_dir) / "density.bin").string(), gd);
  }

  json levels = json::array();
  double worst = 0.0;
  for (std::size_t i = 0; i < rhos.size(); ++i) {
    bsc::UncertaintySets sets;
    const auto r = bsc::check_uncertainty_control(gd, sample.points, forest, rhos[i], eps, sigma, &sets);
    worst = std::max(worst, r.violation_fraction());
    levels.push_back({{"rho", r.rho},
                      {"rho_fraction", r.rho / fmax},
                      {"nodes", r.nodes},
                      {"inner_nodes", r.inner_nodes},
                      {"outer_nodes", r.outer_nodes},
                      {"estimate_nodes", r.estimate_nodes},
                      {"foreground_points", r.foreground_points},
                      {"inner_violations", r.inner_violations},
                      {"outer_violations", r.outer_violations},
                      {"inner_fraction", r.inner_fraction()},
                      {"outer_fraction", r.outer_fraction()},
                      {"violation_fraction", r.violation_fraction()}});
    if (!o.grid_dir.empty()) {
      const std::string tag = "level" + std::to_string(i);
      bsc::write_grid_binary((fs::path(o.grid_dir) / (tag + "_inner.bin")).string(), sets.inner);
      bsc::write_grid_binary((fs::path(o.grid_dir) / (tag + "_outer.bin")).string(), sets.outer);
      bsc::write_grid_binary((fs::path(o.grid_dir) / (tag + "_estimate.bin")).string(), sets.estimate);
    }
  }

  json report{{"mixture", o.mixture.empty() ? "default" : o.mixture},
              {"n", o.n},
              {"forest", {{"m", o.trees}, {"p", o.splits}, {"k", o.candidates}, {"mode", o.mode}, {"seed", o.seed}}},
              {"grid", {{"resolution", o.resolution}, {"lower", lo}, {"upper", hi}}},
              {"density_max", fmax},
              {"eps", eps},
              {"sigma", sigma},
              {"max_violation_fraction", worst},
              {"levels", levels}};
  write_text(o.out, report.dump(1) + "\n");
  std::cout << "max violation fraction " << worst << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Best-scored random forest density clustering"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string config;

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "write a synthetic dataset as CSV");
  gen_cmd->add_option("--kind", gen.kind, "circles, moons, varied or aniso")->required();
  gen_cmd->add_option("-n,--n", gen.n, "sample size")->capture_default_str();
  gen_cmd->add_option("--noise", gen.noise, "noise level, negative = kind default")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "seed (env BSC_SEED)")->capture_default_str();
  gen_cmd->add_option("-o,--out", gen.out, "output CSV")->required();
  gen_cmd->add_option("--config", config, "JSON file of option defaults");

  FitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit", "fit a density forest and write it as JSON");
  fit_cmd->add_option("-i,--input", fit.input, "input CSV")->required();
  fit_cmd->add_option("-o,--out", fit.out, "output forest JSON")->required();
  fit_cmd->add_option("-p,--splits", fit.splits, "splits per tree, overrides --ratio");
  fit.forest.add(fit_cmd);
  fit_cmd->add_option("--config", config, "JSON file of option defaults");

  ClusterOptions cl;
  auto* cl_cmd = app.add_subcommand("cluster", "cluster a CSV dataset with the forest pipeline");
  cl_cmd->add_option("-i,--input", cl.input, "input CSV")->required();
  cl_cmd->add_option("--labels", cl.labels_out, "output labels CSV")->required();
  cl_cmd->add_option("--meta", cl.meta_out, "output meta JSON");
  cl_cmd->add_option("--svg", cl.svg_out, "output SVG scatter");
  cl_cmd->add_option("-q,--background-quantile", cl.q, "background density quantile q")->capture_default_str();
  cl_cmd->add_option("--knn", cl.knn, "kN for background assignment")->capture_default_str();
  cl_cmd->add_option("--clusters", cl.clusters, "cluster count k_c")->capture_default_str();
  cl_cmd->add_option("--eps-quantile", cl.eps_quantile, "pairwise-distance quantile q_eps")->capture_default_str();
  cl.forest.add(cl_cmd);
  cl_cmd->add_option("--config", config, "JSON file of option defaults");

  BenchmarkOptions bm;
  auto* bm_cmd = app.add_subcommand("benchmark", "best mean ARI over parameter grids");
  bm_cmd->add_option("--suite", bm.suite, "synthetic or csv")->capture_default_str();
  bm_cmd->add_option("--csv", bm.csv, "comma-separated CSV files for --suite csv");
  bm_cmd->add_option("--methods", bm.methods, "comma-separated: forest, dbscan, kmeans")->capture_default_str();
  bm_cmd->add_option("--repeats", bm.repeats, "runs per grid point")->capture_default_str();
  bm_cmd->add_option("-n,--n", bm.n, "synthetic sample size")->capture_default_str();
  bm_cmd->add_option("--seed", bm.seed, "seed (env BSC_SEED)")->capture_default_str();
  bm_cmd->add_option("--threads", bm.threads, "worker threads, 0 = all cores")->capture_default_str();
  bm_cmd->add_flag("--standardize", bm.standardize, "z-score every axis first");
  bm_cmd->add_flag("--timings", bm.timings, "include runtimes (breaks byte-identical reruns)");
  bm_cmd->add_option("--ratios", bm.ratios, "forest grid: split ratios r");
  bm_cmd->add_option("--eps-quantiles", bm.eps_quantiles, "forest grid: q_eps values");
  bm_cmd->add_option("--knns", bm.knns, "forest grid: kN values");
  bm_cmd->add_option("--clusters-grid", bm.clusters, "forest grid: k_c values");
  bm_cmd->add_option("--dbscan-eps", bm.dbscan_eps, "DBSCAN grid: eps values");
  bm_cmd->add_option("--kmeans-k", bm.kmeans_k, "k-means grid: k values");
  bm_cmd->add_option("-m,--trees", bm.trees, "trees m")->capture_default_str();
  bm_cmd->add_option("-k,--candidates", bm.candidates, "candidates per tree")->capture_default_str();
  bm_cmd->add_option("-q,--background-quantile", bm.q, "background quantile q")->capture_default_str();
  bm_cmd->add_option("--mode", bm.mode, "pure or adaptive splitting")->capture_default_str();
  bm_cmd->add_option("--out-json", bm.out_json, "full report JSON");
  bm_cmd->add_option("--out-csv", bm.out_csv, "best grid point per (dataset, method)");
  bm_cmd->add_option("--out-table", bm.out_table, "best mean ARI, datasets x methods");
  bm_cmd->add_option("--config", config, "JSON file of option defaults");

  ValidateOptions va;
  auto* va_cmd = app.add_subcommand("validate", "check level-set uncertainty control on a known mixture");
  va_cmd->add_option("--mixture", va.mixture, "w:m1,m2:s;... (default two Gaussians at +-1)");
  va_cmd->add_option("-n,--n", va.n, "sample size")->capture_default_str();
  va_cmd->add_option("-p,--splits", va.splits, "splits per tree")->capture_default_str();
  va_cmd->add_option("-m,--trees", va.trees, "trees")->capture_default_str();
  va_cmd->add_option("-k,--candidates", va.candidates, "candidates per tree")->capture_default_str();
  va_cmd->add_option("--mode", va.mode, "pure or adaptive splitting")->capture_default_str();
  va_cmd->add_option("--seed", va.seed, "seed (env BSC_SEED)")->capture_default_str();
  va_cmd->add_option("--threads", va.threads, "worker threads, 0 = all cores")->capture_default_str();
  va_cmd->add_option("--levels", va.levels, "levels as fractions of the density maximum")->capture_default_str();
  va_cmd->add_option("--rho", va.rho, "absolute levels, overrides --levels");
  va_cmd->add_option("--eps-fraction", va.eps_fraction, "eps as a fraction of the density maximum")
      ->capture_default_str();
  va_cmd->add_option("--eps", va.eps, "absolute eps, overrides --eps-fraction");
  va_cmd->add_option("--sigma", va.sigma, "dilation radius, default 2x median leaf diameter");
  va_cmd->add_option("--resolution", va.resolution, "lattice nodes per axis")->capture_default_str();
  va_cmd->add_option("-o,--out", va.out, "report JSON")->capture_default_str();
  va_cmd->add_option("--grid-dir", va.grid_dir, "directory for binary grid snapshots");
  va_cmd->add_option("--config", config, "JSON file of option defaults");

  try {
    std::vector<std::string> args = layered_args(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "bsc: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*gen_cmd) return run_gen(gen);
    if (*fit_cmd) return run_fit(fit);
    if (*cl_cmd) return run_cluster(cl);
    if (*bm_cmd) return run_benchmark(bm);
    if (*va_cmd) return run_validate(va);
  } catch (const UsageError& e) {
    std::cerr << "bsc: " << e.what() << '\n';
    return kExitUsage;
  } catch (const bsc::NoValidLevel& e) {
    std::cerr << "bsc: " << e.what() << '\n';
    return kExitNoResult;
  } catch (const std::exception& e) {
    std::cerr << "bsc: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
