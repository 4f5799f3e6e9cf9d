#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mtloop/text/metrics.hpp"

namespace mtloop {

using text::TokenSeq;

enum class Direction { ChrEn, EnChr };

std::string_view to_string(Direction d);
// Accepts "chr-en" / "en-chr"; throws Error otherwise.
Direction parse_direction(std::string_view s);
Direction reversed(Direction d);
enum class Language { Chr, En };
std::string_view to_string(Language l);
Language parse_language(std::string_view s);  // "chr" | "en"

// Language code ("chr" or "en") of the source / target side.
std::string_view source_language(Direction d);
std::string_view target_language(Direction d);

struct SentencePair {
  TokenSeq source;
  TokenSeq target;

  friend bool operator==(const SentencePair&, const SentencePair&) = default;
};

struct ParallelCorpus {
  Direction direction = Direction::ChrEn;
  std::vector<SentencePair> pairs;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }

  // Same pairs with source and target swapped.
  ParallelCorpus reversed() const;

  // Throws unless the corpus is non-empty and no pair has an empty side.
  void validate() const;

  friend bool operator==(const ParallelCorpus&, const ParallelCorpus&) = default;
};

// Pair files hold one pair per line, "source ||| target", UTF-8. Both sides
// are tokenized with the 13a rules. Blank lines are skipped.
ParallelCorpus read_pair_file(const std::filesystem::path& path, Direction direction);
ParallelCorpus parse_pairs(std::string_view content, Direction direction);
void write_pair_file(const std::filesystem::path& path, const ParallelCorpus& corpus);

// Reads a UTF-8 file line by line without the trailing newline / CR.
std::vector<std::string> read_lines(const std::filesystem::path& path);

}  // namespace mtloop
