#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mtloop/corpus.hpp"

namespace mtloop::smt {

inline constexpr std::string_view kBos = "<s>";
inline constexpr std::string_view kEos = "</s>";
inline constexpr std::string_view kUnk = "<unk>";

// Back-off n-gram model. Trained models are interpolated Kneser-Ney with a
// single absolute discount; the interpolation weights are stored as ARPA
// back-off weights so the ARPA file reproduces the model exactly.
class NGramLM {
 public:
  static NGramLM train(const std::vector<TokenSeq>& sentences, int order = 3, double discount = 0.75);

  int order() const { return order_; }

  // Natural-log P(word | history). Only the last order-1 history words are
  // used; out-of-vocabulary words map to <unk>.
  double log_prob(std::span<const std::string> history, std::string_view word) const;

  // Natural-log probability of "<s> tokens </s>"; 0 for an empty sequence.
  double sentence_log_prob(const TokenSeq& tokens) const;

  // Log probability of `tokens` continuing `history` (no sentence end),
  // e.g. for scoring a phrase in isolation.
  double score_continuation(std::span<const std::string> history, std::span<const std::string> tokens) const;

  bool contains(std::string_view word) const;
  // Every symbol the model can predict: training words, </s> and <unk>.
  std::vector<std::string> vocabulary() const;

  void save_arpa(const std::filesystem::path& path) const;
  static NGramLM load_arpa(const std::filesystem::path& path);

  friend bool operator==(const NGramLM&, const NGramLM&) = default;

 private:
  struct Entry {
    double log_prob = 0.0;     // natural log
    double log_backoff = 0.0;  // natural log
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  const Entry* lookup(std::span<const std::string> words) const;
  std::string_view map_word(std::string_view word) const;

  int order_ = 3;
  // grams_[n-1] holds n-grams keyed by their space-joined words.
  std::vector<std::unordered_map<std::string, Entry>> grams_;
};

}  // namespace mtloop::smt
