#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mtloop/nmt/decoder.hpp"

namespace mtloop::nmt {

// One line of a hypothesis interchange file. Lets decoders outside this
// library feed the QE pipeline. See docs/hypotheses.md for the schema.
struct HypothesisRecord {
  TokenSeq source;
  NmtHypothesis hypothesis;
};

std::string to_json_line(const HypothesisRecord& record);
// Throws FormatError on malformed or inconsistent records (row sums off by
// more than 1e-6, length mismatches, positive log-probabilities).
HypothesisRecord parse_json_line(std::string_view line);

void write_hypotheses(const std::filesystem::path& path, const std::vector<HypothesisRecord>& records);
std::vector<HypothesisRecord> read_hypotheses(const std::filesystem::path& path);

}  // namespace mtloop::nmt
