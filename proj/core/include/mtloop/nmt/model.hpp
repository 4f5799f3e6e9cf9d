#pragma once

#include <filesystem>
#include <memory>
#include <vector>

#include "mtloop/corpus.hpp"
#include "mtloop/nmt/decoder.hpp"
#include "mtloop/smt/lexical.hpp"

namespace mtloop::nmt {

// Ensemble of toy decoders, one per lexical table.
struct NmtModel {
  Direction direction = Direction::ChrEn;
  std::vector<smt::LexicalTable> members;
  std::shared_ptr<const Decoder> decoder;

  NmtHypothesis translate(const TokenSeq& source, const BeamOptions& options = {}) const;
};

inline const std::vector<int> kDefaultMemberIterations = {3, 6, 12};

NmtModel make_toy_nmt(Direction direction, std::vector<smt::LexicalTable> members);
// One member per EM iteration count.
NmtModel train_toy_nmt(const ParallelCorpus& corpus, const std::vector<int>& em_iterations = kDefaultMemberIterations);

// Directory layout: model.json plus member-<i>.lex.
void save_nmt(const NmtModel& model, const std::filesystem::path& dir);
NmtModel load_nmt(const std::filesystem::path& dir);

}  // namespace mtloop::nmt
