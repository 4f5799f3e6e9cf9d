#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mtloop/corpus.hpp"
#include "mtloop/models.hpp"
#include "mtloop/qe/dataset.hpp"
#include "mtloop/smt/model.hpp"

namespace mtloop::hitl {

// Ordered (archaic, replacement) pairs applied to English text.
struct ArchaicMap {
  std::vector<std::pair<std::string, std::string>> terms;

  static ArchaicMap defaults();  // thy -> your, thou -> you
  // Keys must be non-empty lowercase words without duplicates, and no
  // replacement may contain a key as a word, so one pass is a fixed point.
  void validate() const;
};

// Two tab-separated columns per line; blank lines and '#' comments skipped.
ArchaicMap load_archaic_map(const std::filesystem::path& path);
ArchaicMap parse_archaic_map(std::string_view content);

// Whole-word, case-insensitive, single left-to-right pass. A capitalized
// original gets a capitalized replacement. Words are runs of ASCII letters,
// digits and non-ASCII bytes.
std::string normalize_archaic(std::string_view text, const ArchaicMap& map);
TokenSeq normalize_archaic(const TokenSeq& tokens, const ArchaicMap& map);
// Normalizes the English side only.
ParallelCorpus normalize_english(const ParallelCorpus& corpus, const ArchaicMap& map);

// train followed by `repeat` copies of corrections. repeat must be 1, 5 or
// 10 and both corpora must share a direction.
ParallelCorpus merge_corrections(const ParallelCorpus& train, const ParallelCorpus& corrections, int repeat);

struct RetrainConfig {
  smt::SmtTrainOptions smt;
  smt::DecoderOptions decoder;
  int repeat = 1;
  ArchaicMap archaic = ArchaicMap::defaults();
  double guard_rail = 0.1;  // largest BLEU drop still accepted
  bool retrain_nmt = true;  // toy NMT members from the new lexical tables
  bool rebuild_qe = false;  // k-fold SMT QE data and GBT on the merged corpus
  qe::KFoldOptions kfold;
};

struct DirectionReport {
  Direction direction = Direction::ChrEn;
  double bleu_before = 0.0;
  double bleu_after = 0.0;
  std::size_t corrections_used = 0;
  int repeat_factor = 1;
  bool swapped = false;
  std::string error;  // non-empty when training or evaluation failed
};

struct RetrainReport {
  std::vector<DirectionReport> directions;

  bool ok() const;
  std::string to_json() const;
  std::string summary() const;
};

// Before-model on train, after-model on merge_corrections(train,
// corrections); both scored with corpus BLEU on dev. When registry is given
// and bleu_after >= bleu_before - guard_rail, the after-models replace the
// direction's serving models in one step. All corpora are in `direction`.
DirectionReport retrain_direction(const ParallelCorpus& train, const ParallelCorpus& dev,
                                  const ParallelCorpus& corrections, const RetrainConfig& config,
                                  ModelRegistry* registry = nullptr);

// Both directions from chr-en oriented corpora.
RetrainReport retrain(const ParallelCorpus& train, const ParallelCorpus& dev, const ParallelCorpus& corrections,
                      const RetrainConfig& config, ModelRegistry* registry = nullptr);

}  // namespace mtloop::hitl
