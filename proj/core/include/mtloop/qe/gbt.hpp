#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mtloop/corpus.hpp"
#include "mtloop/qe/dataset.hpp"
#include "mtloop/qe/features.hpp"

namespace mtloop::qe {

// Axis-aligned regression tree stored in preorder. An internal node sends
// x[feature] < threshold to nodes[i + 1] and the rest to nodes[right].
struct RegressionTree {
  struct Node {
    int feature = -1;  // -1 for a leaf
    double threshold = 0.0;
    int right = -1;
    double value = 0.0;  // leaf output

    bool leaf() const { return feature < 0; }
    friend bool operator==(const Node&, const Node&) = default;
  };
  std::vector<Node> nodes;

  double predict(std::span<const double> x) const;
  int depth() const;  // a single leaf has depth 0

  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;
};

struct GbtParams {
  int max_depth = 5;
  double eta = 0.1;
  int rounds = 100;

  void validate() const;
  friend bool operator==(const GbtParams&, const GbtParams&) = default;
};

// Tuned settings per system: Chr-En SMT (5, 0.1, 100), En-Chr SMT
// (3, 0.1, 80), Chr-En NMT (4, 0.5, 40), En-Chr NMT (5, 0.1, 40).
GbtParams default_gbt_params(FeatureKind kind, Direction direction);

struct GradientBoostedEnsemble {
  FeatureKind kind = FeatureKind::Smt;
  std::size_t dimension = 0;
  double base_prediction = 0.0;
  GbtParams params;
  std::vector<RegressionTree> trees;

  // base + eta * sum of the first `rounds` trees, unclipped.
  double raw_predict(std::span<const double> x, std::size_t rounds) const;

  friend bool operator==(const GradientBoostedEnsemble&, const GradientBoostedEnsemble&) = default;
};

// Squared-error boosting from the target mean. Each round fits a greedy
// tree to the residuals: candidate thresholds are midpoints between
// consecutive distinct values, a split needs a strictly positive SSE
// reduction, ties go to the lower feature index and then the lower
// threshold. Rows are put in a canonical order first, so the model does not
// depend on the input order. A one-row dataset gives trees that are single
// zero leaves.
GradientBoostedEnsemble gbt_train(std::span<const FeatureVector> features, std::span<const double> targets,
                                  const GbtParams& params);
GradientBoostedEnsemble gbt_train(const QEDataset& data, const GbtParams& params);

// Clipped to [0, 100]. Throws on a kind or dimension mismatch.
double gbt_predict(const GradientBoostedEnsemble& model, const FeatureVector& f);

// Training MSE of the unclipped model after 0, 1, ..., rounds trees.
std::vector<double> staged_mse(const GradientBoostedEnsemble& model, std::span<const FeatureVector> features,
                               std::span<const double> targets);

// Versioned JSON; trees are preorder node lists.
std::string to_json(const GradientBoostedEnsemble& model);
GradientBoostedEnsemble gbt_from_json(const std::string& text);
void save_gbt(const GradientBoostedEnsemble& model, const std::filesystem::path& path);
GradientBoostedEnsemble load_gbt(const std::filesystem::path& path);

}  // namespace mtloop::qe
