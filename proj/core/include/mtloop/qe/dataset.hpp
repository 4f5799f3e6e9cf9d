#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "mtloop/corpus.hpp"
#include "mtloop/qe/features.hpp"

namespace mtloop::qe {

struct QERow {
  FeatureVector features;
  double bleu = 0.0;          // smoothed sentence BLEU against the reference, [0, 100]
  std::size_t pair_index = 0; // position in the source corpus
  int fold = 0;
};

struct QEDataset {
  FeatureKind kind = FeatureKind::Smt;
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<int> fold_of;   // fold of every corpus pair
  std::vector<QERow> rows;    // ordered by pair_index

  // Throws on an empty or mixed-kind dataset, or out-of-range labels.
  void validate() const;
};

inline constexpr std::uint64_t kDefaultFoldSeed = 17;

// Fisher-Yates shuffle of 0..n-1 with mt19937_64(seed), then position p goes
// to fold p % k. Fold sizes differ by at most one and the first n % k folds
// get the extra item.
std::vector<int> assign_folds(std::size_t n, int k, std::uint64_t seed = kDefaultFoldSeed);

// A trained system reduced to what the dataset needs: the output tokens and
// their features.
struct Decoded {
  TokenSeq target;
  FeatureVector features;
};
using Translator = std::function<Decoded(const TokenSeq& source)>;
using Trainer = std::function<Translator(const ParallelCorpus& train)>;

// Trains the toy systems with default settings and featurizes their output.
Trainer smt_trainer();
Trainer nmt_trainer();

struct KFoldOptions {
  int k = 17;
  std::uint64_t seed = kDefaultFoldSeed;
  unsigned threads = 0;  // 0: hardware concurrency, capped at k
};

// For every fold, trains on the other folds and labels the fold's pairs
// with features and sentence BLEU. Folds run concurrently; the result does
// not depend on the thread count. Throws if k < 2 or k > |corpus|.
QEDataset build_kfold_dataset(const ParallelCorpus& corpus, const Trainer& trainer, const KFoldOptions& options = {});

// JSON with the fold assignment and one object per row.
void save_dataset(const QEDataset& data, const std::filesystem::path& path);
QEDataset load_dataset(const std::filesystem::path& path);

}  // namespace mtloop::qe
