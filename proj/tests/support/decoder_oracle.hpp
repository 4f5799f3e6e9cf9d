#pragma once

#include "mtloop/smt/decoder.hpp"

namespace mtloop::oracle {

struct OracleResult {
  TokenSeq target;
  double score = 0.0;
  long derivations = 0;
};

// Enumerates every segmentation of the source into table phrases (plus
// pass-through for words with no single-word entry), in every order, and
// scores each complete derivation from scratch. Unlimited distortion.
OracleResult exhaustive_decode(const TokenSeq& source, const smt::PhraseTable& table, const smt::NGramLM& lm,
                               const smt::SmtWeights& weights);

}  // namespace mtloop::oracle

namespace mtloop::oracle {

struct DecoderInstance {
  TokenSeq source;
  smt::PhraseTable table;
  smt::NGramLM lm;
  smt::SmtWeights weights;
};

// Source of 1..max_source tokens over a 4-word vocabulary, at most
// max_entries phrase entries drawn from source substrings, an LM trained on
// random target sentences and random weights in [-1, 1].
DecoderInstance random_decoder_instance(unsigned seed, int max_source = 5, int max_entries = 8);

}  // namespace mtloop::oracle
