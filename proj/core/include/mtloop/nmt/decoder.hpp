#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "mtloop/corpus.hpp"

namespace mtloop::nmt {

using Matrix = std::vector<std::vector<double>>;

// One decoding step: a distribution over the next token and attention over
// the source positions.
struct StepDistribution {
  std::map<std::string, double, std::less<>> probabilities;  // (0, 1], sums to 1
  std::vector<double> attention_row;                          // length L_s, sums to 1
  // Decoders whose attention depends on the emitted token (posterior
  // attention) put per-token rows here; attention_row is the fallback.
  std::map<std::string, std::vector<double>, std::less<>> token_attention;

  double prob(std::string_view token) const;
  const std::vector<double>& row_for(std::string_view token) const;
};

// Anything that can extend a target prefix. Implementations are immutable
// and deterministic for a fixed (source, prefix).
class Decoder {
 public:
  virtual ~Decoder() = default;
  virtual StepDistribution step(const TokenSeq& source, const TokenSeq& prefix) const = 0;
  virtual const std::string& eos() const = 0;
  // Sorted static vocabulary including eos. Source-dependent copy tokens are
  // not listed.
  virtual std::vector<std::string> vocabulary() const = 0;
};

struct NmtHypothesis {
  TokenSeq target;                    // without the end-of-sequence token
  std::vector<double> token_logprobs; // one per target token, natural log
  double eos_logprob = 0.0;           // 0 when truncated
  Matrix attention;                   // L_t rows of L_s entries
  bool truncated = false;

  double log_prob() const;            // sum of token_logprobs
  double search_score() const { return log_prob() + eos_logprob; }
};

struct BeamOptions {
  int beam = 5;
  int max_len = 0;  // decoding steps including eos; 0 means 2 * L_s + 5
};

// Beam search without length normalization. Finished hypotheses are ranked
// by token log-probabilities plus the end-of-sequence log-probability; ties
// go to the lexicographically smaller target. If nothing finishes within
// max_len steps the best live hypothesis is returned with truncated = true.
NmtHypothesis beam_search(const Decoder& decoder, const TokenSeq& source, const BeamOptions& options = {});

// Per-step arithmetic mean of member probabilities (renormalized) and of
// member attention rows. Throws on an empty list or differing vocabularies.
std::shared_ptr<const Decoder> ensemble(std::vector<std::shared_ptr<const Decoder>> members);

// The attention matrix of a hypothesis (row-stochastic, L_t x L_s).
const Matrix& soft_alignment(const NmtHypothesis& h);

}  // namespace mtloop::nmt
