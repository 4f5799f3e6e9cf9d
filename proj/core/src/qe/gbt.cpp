#include "mtloop/qe/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "mtloop/error.hpp"

namespace mtloop::qe {

using nlohmann::json;

double RegressionTree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes[i].leaf()) i = x[nodes[i].feature] < nodes[i].threshold ? i + 1 : nodes[i].right;
  return nodes[i].value;
}

int RegressionTree::depth() const {
  auto walk = [&](auto&& self, std::size_t i) -> std::pair<int, std::size_t> {
    if (nodes[i].leaf()) return {0, i + 1};
    auto [dl, end_left] = self(self, i + 1);
    auto [dr, end_right] = self(self, static_cast<std::size_t>(nodes[i].right));
    (void)end_left;
    return {1 + std::max(dl, dr), end_right};
  };
  return nodes.empty() ? 0 : walk(walk, 0).first;
}

void GbtParams::validate() const {
  if (rounds < 1) throw Error("rounds must be at least 1");
  if (!(eta > 0.0 && eta <= 1.0)) throw Error("eta must be in (0, 1]");
  if (max_depth < 0) throw Error("max_depth must be non-negative");
}

GbtParams default_gbt_params(FeatureKind kind, Direction direction) {
  const bool chr_en = direction == Direction::ChrEn;
  if (kind == FeatureKind::Smt) return chr_en ? GbtParams{5, 0.1, 100} : GbtParams{3, 0.1, 80};
  return chr_en ? GbtParams{4, 0.5, 40} : GbtParams{5, 0.1, 40};
}

double GradientBoostedEnsemble::raw_predict(std::span<const double> x, std::size_t rounds) const {
  double sum = 0.0;
  for (std::size_t t = 0; t < std::min(rounds, trees.size()); ++t) sum += trees[t].predict(x);
  return base_prediction + params.eta * sum;
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<std::vector<double>>& x, const std::vector<double>& residual, int max_depth)
      : x_(x), r_(residual), max_depth_(max_depth) {}

  RegressionTree build() {
    std::vector<std::size_t> all(r_.size());
    std::iota(all.begin(), all.end(), 0);
    grow(all, 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
  };

  void grow(const std::vector<std::size_t>& rows, int depth) {
    const std::size_t self = tree_.nodes.size();
    tree_.nodes.emplace_back();
    double sum = 0.0;
    for (std::size_t i : rows) sum += r_[i];
    const double mean = sum / static_cast<double>(rows.size());

    const Split s = depth < max_depth_ ? best_split(rows, sum) : Split{};
    if (s.feature < 0) {
      tree_.nodes[self].value = mean;
      return;
    }
    std::vector<std::size_t> left, right;
    for (std::size_t i : rows) (x_[i][s.feature] < s.threshold ? left : right).push_back(i);
    tree_.nodes[self].feature = s.feature;
    tree_.nodes[self].threshold = s.threshold;
    grow(left, depth + 1);
    tree_.nodes[self].right = static_cast<int>(tree_.nodes.size());
    grow(right, depth + 1);
  }

  Split best_split(const std::vector<std::size_t>& rows, double sum) const {
    const double n = static_cast<double>(rows.size());
    double sse = 0.0;
    for (std::size_t i : rows) sse += (r_[i] - sum / n) * (r_[i] - sum / n);
    // Gains at rounding level would add splits that change nothing.
    const double min_gain = 1e-12 * std::max(1.0, sse);
    Split best;
    best.gain = min_gain;
    std::vector<std::size_t> order = rows;
    for (std::size_t f = 0; f < x_[rows[0]].size(); ++f) {
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return x_[a][f] < x_[b][f]; });
      double left_sum = 0.0;
      for (std::size_t p = 0; p + 1 < order.size(); ++p) {
        left_sum += r_[order[p]];
        const double lo = x_[order[p]][f];
        const double hi = x_[order[p + 1]][f];
        if (!(lo < hi)) continue;
        const double nl = static_cast<double>(p + 1);
        const double nr = n - nl;
        const double right_sum = sum - left_sum;
        const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr - sum * sum / n;
        if (gain > best.gain) {
          double t = lo + (hi - lo) / 2.0;
          if (!(t > lo)) t = hi;
          best = {static_cast<int>(f), t, gain};
        }
      }
    }
    return best;
  }

  const std::vector<std::vector<double>>& x_;
  const std::vector<double>& r_;
  int max_depth_;
  RegressionTree tree_;
};

}  // namespace

GradientBoostedEnsemble gbt_train(std::span<const FeatureVector> features, std::span<const double> targets,
                                  const GbtParams& params) {
  params.validate();
  if (features.empty()) throw Error("empty training data");
  if (features.size() != targets.size()) throw Error("parallel length mismatch");
  const FeatureKind kind = features[0].kind;
  const std::size_t dim = features[0].values.size();
  for (const auto& f : features) {
    if (f.kind != kind || f.values.size() != dim) throw Error("feature dimension mismatch");
    for (double v : f.values)
      if (!std::isfinite(v)) throw Error("non-finite feature");
  }

  std::vector<std::size_t> order(features.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (features[a].values != features[b].values) return features[a].values < features[b].values;
    return targets[a] < targets[b];
  });
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (std::size_t i : order) {
    x.push_back(features[i].values);
    y.push_back(targets[i]);
  }

  GradientBoostedEnsemble model;
  model.kind = kind;
  model.dimension = dim;
  model.params = params;
  model.base_prediction = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());

  std::vector<double> residual(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) residual[i] = y[i] - model.base_prediction;
  for (int round = 0; round < params.rounds; ++round) {
    RegressionTree tree = TreeBuilder(x, residual, params.max_depth).build();
    for (std::size_t i = 0; i < y.size(); ++i) residual[i] -= params.eta * tree.predict(x[i]);
    model.trees.push_back(std::move(tree));
  }
  return model;
}

GradientBoostedEnsemble gbt_train(const QEDataset& data, const GbtParams& params) {
  data.validate();
  std::vector<FeatureVector> features;
  std::vector<double> targets;
  for (const auto& r : data.rows) {
    features.push_back(r.features);
    targets.push_back(r.bleu);
  }
  return gbt_train(features, targets, params);
}

double gbt_predict(const GradientBoostedEnsemble& model, const FeatureVector& f) {
  if (f.kind != model.kind || f.values.size() != model.dimension) throw Error("feature dimension mismatch");
  return std::clamp(model.raw_predict(f.values, model.trees.size()), 0.0, 100.0);
}

std::vector<double> staged_mse(const GradientBoostedEnsemble& model, std::span<const FeatureVector> features,
                               std::span<const double> targets) {
  if (features.size() != targets.size() || features.empty()) throw Error("parallel length mismatch");
  std::vector<double> pred(features.size(), model.base_prediction);
  std::vector<double> out;
  auto mse = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - targets[i]) * (pred[i] - targets[i]);
    return s / static_cast<double>(pred.size());
  };
  out.push_back(mse());
  for (const auto& tree : model.trees) {
    for (std::size_t i = 0; i < pred.size(); ++i) pred[i] += model.params.eta * tree.predict(features[i].values);
    out.push_back(mse());
  }
  return out;
}

std::string to_json(const GradientBoostedEnsemble& model) {
  json trees = json::array();
  for (const auto& tree : model.trees) {
    json nodes = json::array();
    for (const auto& n : tree.nodes)
      nodes.push_back(n.leaf() ? json{{"v", n.value}} : json{{"f", n.feature}, {"t", n.threshold}});
    trees.push_back(std::move(nodes));
  }
  const json j = {{"format", "mtloop-qe-gbt"},
                  {"v", 1},
                  {"kind", to_string(model.kind)},
                  {"dimension", model.dimension},
                  {"base", model.base_prediction},
                  {"eta", model.params.eta},
                  {"max_depth", model.params.max_depth},
                  {"rounds", model.params.rounds},
                  {"trees", trees}};
  return j.dump();
}

GradientBoostedEnsemble gbt_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("format") != "mtloop-qe-gbt" || j.at("v") != 1) throw FormatError("not a QE model");
    GradientBoostedEnsemble m;
    m.kind = parse_feature_kind(j.at("kind").get<std::string>());
    m.dimension = j.at("dimension");
    m.base_prediction = j.at("base");
    m.params = {j.at("max_depth"), j.at("eta"), j.at("rounds")};
    m.params.validate();
    for (const auto& jt : j.at("trees")) {
      RegressionTree tree;
      // Rebuild right-child links from the preorder listing.
      auto parse = [&](auto&& self, std::size_t i) -> std::size_t {
        if (i >= jt.size()) throw FormatError("truncated tree");
        const json& node = jt[i];
        if (node.contains("v")) {
          tree.nodes[i].value = node.at("v");
          return i + 1;
        }
        tree.nodes[i].feature = node.at("f");
        tree.nodes[i].threshold = node.at("t");
        if (tree.nodes[i].feature < 0 || static_cast<std::size_t>(tree.nodes[i].feature) >= m.dimension)
          throw FormatError("split feature out of range");
        const std::size_t right = self(self, i + 1);
        tree.nodes[i].right = static_cast<int>(right);
        return self(self, right);
      };
      tree.nodes.resize(jt.size());
      if (parse(parse, 0) != jt.size()) throw FormatError("trailing tree nodes");
      m.trees.push_back(std::move(tree));
    }
    if (static_cast<int>(m.trees.size()) != m.params.rounds) throw FormatError("tree count does not match rounds");
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("QE model: ") + e.what());
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw FormatError(std::string("QE model: ") + e.what());
  }
}

void save_gbt(const GradientBoostedEnsemble& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << to_json(model) << '\n';
}

GradientBoostedEnsemble load_gbt(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return gbt_from_json(ss.str());
}

}  // namespace mtloop::qe
