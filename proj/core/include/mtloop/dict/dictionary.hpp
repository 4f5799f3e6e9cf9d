#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mtloop/corpus.hpp"

namespace mtloop::dict {

struct DictEntry {
  std::string headword;
  Language language = Language::Chr;
  std::string gloss;
  std::string notes;

  friend bool operator==(const DictEntry&, const DictEntry&) = default;
};

inline constexpr int kDefaultLookupLimit = 15;

enum class MatchTier { Exact = 0, Prefix = 1, Substring = 2, Gloss = 3 };

// Case folding used for matching: Latin letters (ASCII and Latin-1) are
// lowercased, every other codepoint, syllabary included, is kept as is.
std::string fold_case(std::string_view s);

// Immutable headword/gloss index; safe for concurrent lookups.
class Dictionary {
 public:
  Dictionary() = default;
  explicit Dictionary(std::vector<DictEntry> entries);

  // Best matches for one token. Tiers: exact headword, headword prefix,
  // headword substring, gloss substring; within a tier shorter headwords
  // (in codepoints) come first, then byte order of headword, gloss, notes.
  // Empty tokens match nothing. Throws if limit < 1.
  std::vector<DictEntry> lookup(std::string_view token, int limit = kDefaultLookupLimit) const;

  // Tier of an entry for a token, or -1 when it does not match at all.
  static int tier(const DictEntry& e, std::string_view folded_token);

  std::size_t size() const { return entries_.size(); }
  const std::vector<DictEntry>& entries() const { return entries_; }

 private:
  struct Key {
    std::string folded_headword;
    std::string folded_gloss;
    std::size_t length = 0;  // headword codepoints
  };
  std::vector<DictEntry> entries_;
  std::vector<Key> keys_;
  std::vector<std::size_t> by_headword_;  // entry indices sorted by folded headword
};

// Tab-separated, header "headword\tlanguage\tgloss\tnotes"; the notes column
// may be omitted or empty. Throws FormatError on malformed rows.
Dictionary load_tsv(const std::filesystem::path& path);
Dictionary parse_tsv(std::string_view content);

}  // namespace mtloop::dict
