#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "mtloop/nmt/decoder.hpp"
#include "mtloop/smt/decoder.hpp"

namespace mtloop::qe {

enum class FeatureKind { Smt, Nmt };

std::string_view to_string(FeatureKind kind);
FeatureKind parse_feature_kind(std::string_view s);  // "smt" | "nmt"

inline constexpr std::size_t kSmtFeatureCount = 15;
inline constexpr std::size_t kNmtFeatureCount = 6;
std::size_t feature_count(FeatureKind kind);
// Column names in vector order, e.g. "lm/L_t".
const std::vector<std::string_view>& feature_names(FeatureKind kind);

struct FeatureVector {
  FeatureKind kind = FeatureKind::Smt;
  std::vector<double> values;

  // Throws unless the length matches the kind, L_t >= 1 and all entries are finite.
  void validate() const;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

// [L_t, total, distortion, lm, lex_reorder, phrase_pen, trans_model,
//  word_pen, then the last seven divided by L_t]. The component slots hold
// unweighted log-scores; trans_model is the sum of the four raw phrase
// scores. total is the weighted model score the decoder maximized.
FeatureVector smt_features(const smt::SmtHypothesis& h);

// -(1/L_t) sum_i sum_j a_ij ln a_ij, with 0 ln 0 = 0.
// Throws on an empty matrix, ragged rows or a row sum off by more than 1e-4.
double attention_entropy(const nmt::Matrix& attention);

// [L_t, logP, logP/L_t, exp(logP), exp(logP/L_t), attention entropy].
FeatureVector nmt_features(const nmt::NmtHypothesis& h);

}  // namespace mtloop::qe
