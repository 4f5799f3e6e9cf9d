#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "mtloop/corpus.hpp"
#include "mtloop/smt/lexical.hpp"
#include "mtloop/smt/lm.hpp"
#include "mtloop/smt/phrase_table.hpp"

namespace mtloop::smt {

// Log-linear weights. The translation model carries one weight per phrase
// score, in phrase-table order.
struct SmtWeights {
  static constexpr std::size_t kCount = 9;

  double distortion = 0.3;
  double lm = 0.5;
  double lexical_reordering = 0.3;
  double phrase_penalty = 0.2;
  std::array<double, 4> translation_model{0.2, 0.2, 0.2, 0.2};
  double word_penalty = -0.5;

  // [distortion, lm, lexical_reordering, phrase_penalty, tm0..tm3, word_penalty]
  std::array<double, kCount> to_array() const;
  static SmtWeights from_array(const std::array<double, kCount>& values);
  static std::string_view name(std::size_t index);

  // Throws unless every weight is finite and at least one is nonzero.
  void validate() const;

  friend bool operator==(const SmtWeights&, const SmtWeights&) = default;
};

struct ComponentScores {
  double distortion = 0.0;          // -sum |start_i - end_{i-1} - 1|
  double lm = 0.0;                  // natural-log LM probability incl. </s>
  double lexical_reordering = 0.0;  // log orientation probabilities
  double phrase_penalty = 0.0;      // -(number of phrases)
  double translation_model = 0.0;   // sum of sub-weight * log phrase score
  double word_penalty = 0.0;        // -(target length)
  // Unweighted sums of the four log phrase scores.
  std::array<double, 4> translation_model_raw{};

  ComponentScores& operator+=(const ComponentScores& other);
};

// Weighted total; the translation model component is already weighted by
// its sub-weights and enters with coefficient 1.
double weighted_total(const ComponentScores& c, const SmtWeights& w);

struct Segment {
  Span source;
  Span target;
};

struct SmtHypothesis {
  TokenSeq target;
  double total_score = 0.0;
  ComponentScores components;
  std::vector<Segment> segmentation;  // in target order
  Alignment hard_alignment;           // (source index, target index), sorted
};

inline constexpr int kUnlimitedDistortion = -1;

struct DecoderOptions {
  int beam = 100;
  int distortion_limit = 6;  // kUnlimitedDistortion disables the limit
  int table_limit = 20;      // translation options kept per source span
};

// Stack decoding with hypothesis recombination and histogram pruning.
// Source words without a single-word entry pass through verbatim.
// Throws on an empty source or beam < 1.
SmtHypothesis decode(const TokenSeq& source, const PhraseTable& table, const NGramLM& lm,
                     const SmtWeights& weights, const DecoderOptions& options = {});

// Log phrase scores given to pass-through translations.
inline constexpr double kPassThroughScore = LexicalTable::kFloor;

}  // namespace mtloop::smt
