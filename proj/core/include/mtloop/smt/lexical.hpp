#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mtloop/corpus.hpp"

namespace mtloop::smt {

// Word translation probabilities t(target | source), one row per source word.
class LexicalTable {
 public:
  static constexpr double kFloor = 1e-7;

  using Row = std::map<std::string, double, std::less<>>;

  // t(target | source), kFloor when the pair was never observed.
  double prob(std::string_view target, std::string_view source) const;
  const Row* row(std::string_view source) const;
  void set(std::string source, std::string target, double p);

  const std::map<std::string, Row, std::less<>>& rows() const { return rows_; }
  // Union of all target words over all rows, sorted.
  std::vector<std::string> target_vocabulary() const;
  bool empty() const { return rows_.empty(); }

  // Largest |sum(row) - 1| over all rows.
  double max_row_deviation() const;

  // Text format: "source target probability" per line, UTF-8.
  void save(const std::filesystem::path& path) const;
  static LexicalTable load(const std::filesystem::path& path);

  friend bool operator==(const LexicalTable&, const LexicalTable&) = default;

 private:
  std::map<std::string, Row, std::less<>> rows_;
};

// IBM Model 1 EM from a uniform start. Deterministic in corpus order.
// Throws on an empty corpus or iterations < 1.
LexicalTable train_lexical(const ParallelCorpus& corpus, int iterations);

// (source index, target index)
using Link = std::pair<int, int>;
// Sorted, duplicate free.
using Alignment = std::vector<Link>;

// Model 1 Viterbi links: every target position picks its most probable
// source position under t(target | source); ties go to the lowest index.
Alignment viterbi_source_to_target(const SentencePair& pair, const LexicalTable& forward);
// Every source position picks its most probable target position under the
// reverse table t(source | target).
Alignment viterbi_target_to_source(const SentencePair& pair, const LexicalTable& reverse);

// Intersection of the two Viterbi directions grown with grow-diag.
Alignment symmetrize(const Alignment& s2t, const Alignment& t2s, int source_len, int target_len);

// forward: t(target | source); reverse: t(source | target).
Alignment align(const SentencePair& pair, const LexicalTable& forward, const LexicalTable& reverse);

}  // namespace mtloop::smt
