#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mtloop/corpus.hpp"
#include "mtloop/smt/lexical.hpp"

namespace mtloop::smt {

// Half-open token range [begin, end).
struct Span {
  int begin = 0;
  int end = 0;

  int size() const { return end - begin; }
  friend bool operator==(const Span&, const Span&) = default;
  friend auto operator<=>(const Span&, const Span&) = default;
};

// Orientation of a phrase relative to the previously translated one.
enum class Orientation { Monotone = 0, Swap = 1, Discontinuous = 2 };

// Orientation implied by two consecutively translated source spans; the
// first phrase of a sentence follows the virtual span [-1, 0).
Orientation orientation_between(Span previous, Span current);

struct ExtractedPhrase {
  Span source;
  Span target;
  Alignment links;  // relative to the phrase corners
  Orientation orientation = Orientation::Discontinuous;
};

inline constexpr int kDefaultMaxPhraseLength = 4;

// All boxes up to max_len tokens per side that contain at least one link and
// that no link leaves. Sorted by (source, target) span.
std::vector<ExtractedPhrase> extract_phrases(const SentencePair& pair, const Alignment& links,
                                             int max_len = kDefaultMaxPhraseLength);

// Scores in file order: phi(t|s), lex(t|s), phi(s|t), lex(s|t).
using PhraseScores = std::array<double, 4>;

struct ReorderingProbs {
  std::array<double, 3> p{1.0 / 3, 1.0 / 3, 1.0 / 3};  // indexed by Orientation

  double operator[](Orientation o) const { return p[static_cast<int>(o)]; }
  friend bool operator==(const ReorderingProbs&, const ReorderingProbs&) = default;
};

struct PhraseEntry {
  TokenSeq target;
  PhraseScores scores{};
  Alignment links;  // phrase-internal, may be empty when unknown
  ReorderingProbs reordering;

  friend bool operator==(const PhraseEntry&, const PhraseEntry&) = default;
};

class PhraseTable {
 public:
  explicit PhraseTable(int max_phrase_length = kDefaultMaxPhraseLength)
      : max_phrase_length_(max_phrase_length) {}

  // Adds an entry; source/target longer than the length cap or scores
  // outside (0, 1] are rejected.
  void add(const TokenSeq& source, PhraseEntry entry);

  // Entries for a space-joined source phrase, nullptr when absent.
  const std::vector<PhraseEntry>* find(std::string_view joined_source) const;
  const std::vector<PhraseEntry>* find(const TokenSeq& source) const;

  int max_phrase_length() const { return max_phrase_length_; }
  std::size_t source_count() const { return entries_.size(); }
  std::size_t entry_count() const;
  const std::map<std::string, std::vector<PhraseEntry>, std::less<>>& entries() const { return entries_; }

  // "source ||| target ||| s1 s2 s3 s4 ||| i-j ..." (alignment field optional on read).
  void save(const std::filesystem::path& path) const;
  // "source ||| target ||| monotone swap discontinuous".
  void save_reordering(const std::filesystem::path& path) const;
  static PhraseTable load(const std::filesystem::path& path, int max_phrase_length = kDefaultMaxPhraseLength);
  void load_reordering(const std::filesystem::path& path);

  friend bool operator==(const PhraseTable&, const PhraseTable&) = default;

 private:
  PhraseEntry* find_mutable(std::string_view joined_source, const TokenSeq& target);

  int max_phrase_length_;
  std::map<std::string, std::vector<PhraseEntry>, std::less<>> entries_;
};

// Extracts phrases from every pair (aligned with `align`) and scores them
// with relative frequencies, lexical weights and smoothed orientation
// distributions.
PhraseTable build_phrase_table(const ParallelCorpus& corpus, const LexicalTable& forward,
                               const LexicalTable& reverse, int max_len = kDefaultMaxPhraseLength);

}  // namespace mtloop::smt
