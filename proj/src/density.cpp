#include "bsc/density.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "bsc/parallel.hpp"

namespace bsc {

DensityTree fit_tree(Partition partition, const PointSet& data) {
  if (data.empty()) throw InvalidInput("fit_tree: empty data");
  if (data.dim() != partition.root().dim()) throw InvalidInput("fit_tree: data dimension differs from root");
  const std::size_t cells = partition.cell_count();
  std::vector<std::size_t> counts(cells, 0);
  std::size_t outside = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::size_t c = partition.locate(data[i]);
    if (c == Partition::outside) {
      ++outside;
    } else {
      ++counts[c];
    }
  }
  const auto n = static_cast<double>(data.size());
  DensityTree tree{std::move(partition), {}, {}, 0.0, data.size()};
  tree.cell_mass.resize(cells);
  tree.cell_density.resize(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    tree.cell_mass[c] = static_cast<double>(counts[c]) / n;
    tree.cell_density[c] = tree.cell_mass[c] / tree.partition.cells()[c].volume();
  }
  tree.outside_mass = static_cast<double>(outside) / n;
  return tree;
}

BestScoredTree best_scored_tree(const PointSet& data, const Box& root, const TreeParams& params,
                                std::uint64_t seed, std::size_t tree_index) {
  if (params.candidates == 0) throw InvalidInput("best_scored_tree: need at least one candidate (k >= 1)");
  if (data.size() < 2) throw InvalidInput("best_scored_tree: need at least two points");
  if (!(params.holdout_fraction > 0.0 && params.holdout_fraction < 1.0)) {
    throw InvalidInput("best_scored_tree: holdout fraction must lie in (0, 1)");
  }

  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng split_rng = Rng::stream(seed, tree_index, 0);
  split_rng.shuffle(std::span<std::size_t>(order));
  auto holdout_n = static_cast<std::size_t>(std::llround(params.holdout_fraction * static_cast<double>(n)));
  holdout_n = std::clamp<std::size_t>(holdout_n, 1, n - 1);
  const std::span<const std::size_t> all(order);
  const PointSet holdout = data.subset(all.first(holdout_n));
  const PointSet train = data.subset(all.subspan(holdout_n));

  BestScoredTree result{DensityTree{Partition(root), {}, {}, 0.0, 0}, {}, 0};
  result.candidate_anll.reserve(params.candidates);
  std::optional<Partition> best;
  double best_score = 0.0;
  for (std::size_t c = 0; c < params.candidates; ++c) {
    Rng rng = Rng::stream(seed, tree_index, c + 1);
    Partition partition = build_partition(root, params.splits, params.mode, &train, rng);
    const DensityTree candidate = fit_tree(partition, train);
    const double score = anll([&](std::span<const double> x) { return candidate.eval(x); }, holdout);
    result.candidate_anll.push_back(score);
    if (!best || score < best_score) {
      best_score = score;
      result.winner = c;
      best = std::move(partition);
    }
  }
  result.tree = fit_tree(std::move(*best), data);
  return result;
}

DensityForest::DensityForest(std::vector<DensityTree> trees, AffineTransform transform)
    : trees_(std::move(trees)), transform_(std::move(transform)) {
  if (trees_.empty()) throw InvalidInput("DensityForest: need at least one tree");
  root_ = trees_.front().partition.root();
  for (const auto& t : trees_) {
    if (t.partition.root().lower != root_.lower || t.partition.root().upper != root_.upper) {
      throw InvalidInput("DensityForest: trees do not share a root box");
    }
  }
  if (transform_.dim() != root_.dim()) throw InvalidInput("DensityForest: transform dimension differs from root");
}

double DensityForest::eval_scaled(std::span<const double> y) const {
  double sum = 0.0;
  for (const auto& t : trees_) sum += t.eval(y);
  return sum / static_cast<double>(trees_.size());
}

double DensityForest::eval(std::span<const double> x) const {
  std::vector<double> y(dim());
  transform_.apply_into(x, y);
  return eval_scaled(y);
}

std::vector<double> DensityForest::eval_all(const PointSet& points) const {
  std::vector<double> out(points.size());
  std::vector<double> y(dim());
  for (std::size_t i = 0; i < points.size(); ++i) {
    transform_.apply_into(points[i], y);
    out[i] = eval_scaled(y);
  }
  return out;
}

std::vector<double> DensityForest::leaf_diameters_raw() const {
  std::vector<double> out;
  for (const auto& t : trees_) {
    for (const Box& cell : t.partition.cells()) {
      double sum = 0.0;
      for (std::size_t k = 0; k < dim(); ++k) {
        if (transform_.degenerate[k]) continue;
        const double side = cell.side(k) / std::abs(transform_.scale[k]);
        sum += side * side;
      }
      out.push_back(std::sqrt(sum));
    }
  }
  return out;
}

nlohmann::json DensityForest::to_json() const {
  nlohmann::json j;
  j["format"] = "bsc-forest";
  j["version"] = 1;
  j["dim"] = dim();
  j["root"] = {{"lower", root_.lower}, {"upper", root_.upper}};
  std::vector<int> degenerate(transform_.degenerate.begin(), transform_.degenerate.end());
  j["transform"] = {{"offset", transform_.offset},
                    {"scale", transform_.scale},
                    {"fixed", transform_.fixed},
                    {"degenerate", degenerate}};
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : trees_) {
    nlohmann::json splits = nlohmann::json::array();
    for (const auto& s : t.partition.splits()) splits.push_back({s.cell, s.dim, s.ratio});
    trees.push_back({{"splits", splits},
                     {"cell_mass", t.cell_mass},
                     {"outside_mass", t.outside_mass},
                     {"n_fit", t.n_fit}});
  }
  j["trees"] = std::move(trees);
  return j;
}

DensityForest DensityForest::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "bsc-forest") throw InvalidInput("forest JSON: unexpected format tag");
    const Box root(j.at("root").at("lower").get<std::vector<double>>(),
                   j.at("root").at("upper").get<std::vector<double>>());
    AffineTransform t;
    const auto& tj = j.at("transform");
    t.offset = tj.at("offset").get<std::vector<double>>();
    t.scale = tj.at("scale").get<std::vector<double>>();
    t.fixed = tj.at("fixed").get<std::vector<double>>();
    for (int flag : tj.at("degenerate").get<std::vector<int>>()) t.degenerate.push_back(flag != 0);
    if (t.scale.size() != t.offset.size() || t.fixed.size() != t.offset.size() ||
        t.degenerate.size() != t.offset.size()) {
      throw InvalidInput("forest JSON: transform arrays differ in length");
    }

    std::vector<DensityTree> trees;
    for (const auto& tr : j.at("trees")) {
      Partition partition(root);
      for (const auto& s : tr.at("splits")) {
        partition.apply(SplitRecord{s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>(), s.at(2).get<double>()});
      }
      DensityTree tree{std::move(partition), tr.at("cell_mass").get<std::vector<double>>(), {},
                       tr.at("outside_mass").get<double>(), tr.at("n_fit").get<std::size_t>()};
      if (tree.cell_mass.size() != tree.partition.cell_count()) {
        throw InvalidInput("forest JSON: cell_mass length differs from leaf count");
      }
      tree.cell_density.resize(tree.cell_mass.size());
      for (std::size_t c = 0; c < tree.cell_mass.size(); ++c) {
        tree.cell_density[c] = tree.cell_mass[c] / tree.partition.cells()[c].volume();
      }
      trees.push_back(std::move(tree));
    }
    return DensityForest(std::move(trees), std::move(t));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("forest JSON: ") + e.what());
  }
}

DensityForest fit_forest(const PointSet& data, const ForestParams& params) {
  if (data.empty()) throw InvalidInput("fit_forest: empty data");
  if (params.trees == 0) throw InvalidInput("fit_forest: need at least one tree (m >= 1)");
  ScaledPoints scaled = scale_to_box(data, params.margin);
  const Box root = Box::cube(data.dim(), 1.0);
  std::vector<std::optional<DensityTree>> slots(params.trees);
  parallel_for(params.trees, params.threads, [&](std::size_t t) {
    slots[t] = best_scored_tree(scaled.points, root, params.tree, params.seed, t).tree;
  });
  std::vector<DensityTree> trees;
  trees.reserve(params.trees);
  for (auto& s : slots) trees.push_back(std::move(*s));
  return DensityForest(std::move(trees), std::move(scaled.transform));
}

}  // namespace bsc
