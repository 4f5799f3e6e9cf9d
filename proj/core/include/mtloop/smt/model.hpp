#pragma once

#include <filesystem>

#include "mtloop/corpus.hpp"
#include "mtloop/smt/decoder.hpp"
#include "mtloop/smt/lexical.hpp"
#include "mtloop/smt/lm.hpp"
#include "mtloop/smt/phrase_table.hpp"

namespace mtloop::smt {

struct SmtTrainOptions {
  int em_iterations = 10;
  int max_phrase_length = kDefaultMaxPhraseLength;
  int lm_order = 3;
  double lm_discount = 0.75;

  friend bool operator==(const SmtTrainOptions&, const SmtTrainOptions&) = default;
};

// Everything needed to decode one direction. Immutable once trained or
// loaded; safe to share between concurrent decodes.
struct SmtModel {
  Direction direction = Direction::ChrEn;
  SmtTrainOptions options;
  LexicalTable forward;  // t(target | source)
  LexicalTable reverse;  // t(source | target)
  PhraseTable phrases;
  NGramLM lm;
  SmtWeights weights;

  SmtHypothesis translate(const TokenSeq& source, const DecoderOptions& decoder = {}) const {
    return decode(source, phrases, lm, weights, decoder);
  }

  friend bool operator==(const SmtModel&, const SmtModel&) = default;
};

// Alignment, phrase extraction and LM training on the target side.
SmtModel train_smt(const ParallelCorpus& corpus, const SmtTrainOptions& options = {});

// Model directory layout: model.json, weights.json, phrase-table,
// reordering-table, lm.arpa, lex.f2e, lex.e2f.
void save_smt(const SmtModel& model, const std::filesystem::path& dir);
SmtModel load_smt(const std::filesystem::path& dir);

void save_weights(const SmtWeights& weights, const std::filesystem::path& path);
SmtWeights load_weights(const std::filesystem::path& path);

}  // namespace mtloop::smt
