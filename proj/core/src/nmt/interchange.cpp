#include "mtloop/nmt/interchange.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "mtloop/error.hpp"

namespace mtloop::nmt {

using nlohmann::json;

std::string to_json_line(const HypothesisRecord& record) {
  const NmtHypothesis& h = record.hypothesis;
  json j = {{"v", 1},
            {"source", record.source},
            {"target", h.target},
            {"token_logprobs", h.token_logprobs},
            {"eos_logprob", h.eos_logprob},
            {"attention", h.attention},
            {"truncated", h.truncated}};
  return j.dump();
}

HypothesisRecord parse_json_line(std::string_view line) {
  HypothesisRecord rec;
  try {
    const json j = json::parse(line);
    if (j.at("v").get<int>() != 1) throw FormatError("hypothesis record: unsupported version");
    rec.source = j.at("source").get<TokenSeq>();
    auto& h = rec.hypothesis;
    h.target = j.at("target").get<TokenSeq>();
    h.token_logprobs = j.at("token_logprobs").get<std::vector<double>>();
    h.eos_logprob = j.value("eos_logprob", 0.0);
    h.attention = j.at("attention").get<Matrix>();
    h.truncated = j.value("truncated", false);
  } catch (const json::exception& e) {
    throw FormatError(std::string("hypothesis record: ") + e.what());
  }
  const auto& h = rec.hypothesis;
  if (h.token_logprobs.size() != h.target.size()) throw FormatError("hypothesis record: token_logprobs length");
  for (double lp : h.token_logprobs)
    if (!(lp <= 0.0) || !std::isfinite(lp)) throw FormatError("hypothesis record: log-probability out of range");
  if (h.attention.size() != h.target.size()) throw FormatError("hypothesis record: attention row count");
  for (const auto& row : h.attention) {
    if (row.size() != rec.source.size()) throw FormatError("hypothesis record: attention row length");
    double z = 0.0;
    for (double a : row) {
      if (!(a >= 0.0)) throw FormatError("hypothesis record: negative attention");
      z += a;
    }
    if (std::abs(z - 1.0) > 1e-6) throw FormatError("hypothesis record: attention row does not sum to 1");
  }
  return rec;
}

void write_hypotheses(const std::filesystem::path& path, const std::vector<HypothesisRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& r : records) out << to_json_line(r) << '\n';
}

std::vector<HypothesisRecord> read_hypotheses(const std::filesystem::path& path) {
  std::vector<HypothesisRecord> out;
  for (const auto& line : read_lines(path)) {
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    out.push_back(parse_json_line(line));
  }
  return out;
}

}  // namespace mtloop::nmt
