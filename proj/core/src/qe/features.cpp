#include "mtloop/qe/features.hpp"

#include <cmath>
#include <numeric>

#include "mtloop/error.hpp"

namespace mtloop::qe {

std::string_view to_string(FeatureKind kind) { return kind == FeatureKind::Smt ? "smt" : "nmt"; }

FeatureKind parse_feature_kind(std::string_view s) {
  if (s == "smt") return FeatureKind::Smt;
  if (s == "nmt") return FeatureKind::Nmt;
  throw Error("unknown feature kind: " + std::string(s));
}

std::size_t feature_count(FeatureKind kind) { return kind == FeatureKind::Smt ? kSmtFeatureCount : kNmtFeatureCount; }

const std::vector<std::string_view>& feature_names(FeatureKind kind) {
  static const std::vector<std::string_view> smt = {
      "L_t",          "total",         "distortion",      "lm",
      "lex_reorder",  "phrase_pen",    "trans_model",     "word_pen",
      "total/L_t",    "distortion/L_t", "lm/L_t",          "lex_reorder/L_t",
      "phrase_pen/L_t", "trans_model/L_t", "word_pen/L_t"};
  static const std::vector<std::string_view> nmt = {"L_t", "logP", "logP/L_t", "exp(logP)", "exp(logP/L_t)",
                                                    "attention_entropy"};
  return kind == FeatureKind::Smt ? smt : nmt;
}

void FeatureVector::validate() const {
  if (values.size() != feature_count(kind)) throw Error("feature dimension mismatch");
  if (values[0] < 1.0) throw Error("zero-length hypothesis");
  for (double v : values)
    if (!std::isfinite(v)) throw Error("non-finite feature");
}

FeatureVector smt_features(const smt::SmtHypothesis& h) {
  if (h.target.empty()) throw Error("zero-length hypothesis");
  const auto& c = h.components;
  const double tm = std::accumulate(c.translation_model_raw.begin(), c.translation_model_raw.end(), 0.0);
  const double len = static_cast<double>(h.target.size());
  const double raw[] = {h.total_score, c.distortion, c.lm, c.lexical_reordering, c.phrase_penalty, tm,
                        c.word_penalty};
  FeatureVector f{FeatureKind::Smt, {len}};
  f.values.insert(f.values.end(), std::begin(raw), std::end(raw));
  for (double v : raw) f.values.push_back(v / len);
  return f;
}

double attention_entropy(const nmt::Matrix& attention) {
  if (attention.empty() || attention[0].empty()) throw Error("empty attention matrix");
  const std::size_t cols = attention[0].size();
  double sum = 0.0;
  for (const auto& row : attention) {
    if (row.size() != cols) throw Error("ragged attention matrix");
    double z = 0.0;
    for (double a : row) {
      if (a < 0.0 || !std::isfinite(a)) throw Error("attention weight out of range");
      z += a;
      if (a > 0.0) sum -= a * std::log(a);
    }
    if (std::abs(z - 1.0) > 1e-4) throw Error("attention row does not sum to 1");
  }
  return sum / static_cast<double>(attention.size());
}

FeatureVector nmt_features(const nmt::NmtHypothesis& h) {
  if (h.target.empty()) throw Error("zero-length hypothesis");
  if (h.attention.size() != h.target.size()) throw Error("attention rows do not match target length");
  const double len = static_cast<double>(h.target.size());
  const double lp = h.log_prob();
  return {FeatureKind::Nmt, {len, lp, lp / len, std::exp(lp), std::exp(lp / len), attention_entropy(h.attention)}};
}

}  // namespace mtloop::qe
