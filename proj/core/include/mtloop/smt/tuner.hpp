#pragma once

#include <vector>

#include "mtloop/corpus.hpp"
#include "mtloop/smt/decoder.hpp"

namespace mtloop::smt {

// 21 evenly spaced points on [-1, 1].
std::vector<double> default_tuning_grid();

struct TuneOptions {
  std::vector<double> grid = default_tuning_grid();
  int sweeps = 3;
  DecoderOptions decoder;
};

struct TuneResult {
  SmtWeights weights;
  double initial_bleu = 0.0;
  double final_bleu = 0.0;
  int evaluations = 0;
};

// Corpus BLEU of the decoder's output on dev.
double dev_bleu(const ParallelCorpus& dev, const PhraseTable& table, const NGramLM& lm,
                const SmtWeights& weights, const DecoderOptions& options = {});

// Greedy coordinate line search: each sweep visits every weight in order and
// moves it to the grid value with the highest dev corpus BLEU. A move is only
// accepted on strict improvement, so dev BLEU never decreases.
TuneResult tune_weights(const ParallelCorpus& dev, const PhraseTable& table, const NGramLM& lm,
                        const SmtWeights& initial, const TuneOptions& options = {});

}  // namespace mtloop::smt
