#include "mtloop/corpus.hpp"

#include <fstream>
#include <sstream>

#include "mtloop/error.hpp"
#include "mtloop/text/utf8.hpp"

namespace mtloop {

std::string_view to_string(Direction d) { return d == Direction::ChrEn ? "chr-en" : "en-chr"; }

Direction parse_direction(std::string_view s) {
  if (s == "chr-en") return Direction::ChrEn;
  if (s == "en-chr") return Direction::EnChr;
  throw Error("unknown direction '" + std::string(s) + "'");
}

Direction reversed(Direction d) { return d == Direction::ChrEn ? Direction::EnChr : Direction::ChrEn; }

std::string_view to_string(Language l) { return l == Language::Chr ? "chr" : "en"; }

Language parse_language(std::string_view s) {
  if (s == "chr") return Language::Chr;
  if (s == "en") return Language::En;
  throw Error("unknown language: " + std::string(s));
}

std::string_view source_language(Direction d) { return d == Direction::ChrEn ? "chr" : "en"; }
std::string_view target_language(Direction d) { return d == Direction::ChrEn ? "en" : "chr"; }

ParallelCorpus ParallelCorpus::reversed() const {
  ParallelCorpus out;
  out.direction = mtloop::reversed(direction);
  out.pairs.reserve(pairs.size());
  for (const auto& p : pairs) out.pairs.push_back({p.target, p.source});
  return out;
}

void ParallelCorpus::validate() const {
  if (pairs.empty()) throw Error("parallel corpus is empty");
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].source.empty() || pairs[i].target.empty()) {
      throw Error("pair " + std::to_string(i) + " has an empty side");
    }
  }
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

ParallelCorpus parse_pairs(std::string_view content, Direction direction) {
  ParallelCorpus corpus;
  corpus.direction = direction;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    const auto sep = line.find(" ||| ");
    if (sep == std::string::npos) {
      throw FormatError("line " + std::to_string(lineno) + ": expected 'source ||| target'");
    }
    SentencePair pair{text::tokenize_13a(line.substr(0, sep)), text::tokenize_13a(line.substr(sep + 5))};
    if (pair.source.empty() || pair.target.empty()) {
      throw FormatError("line " + std::to_string(lineno) + ": empty side");
    }
    corpus.pairs.push_back(std::move(pair));
  }
  return corpus;
}

ParallelCorpus read_pair_file(const std::filesystem::path& path, Direction direction) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_pairs(buf.str(), direction);
}

void write_pair_file(const std::filesystem::path& path, const ParallelCorpus& corpus) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  for (const auto& p : corpus.pairs) {
    out << text::join(p.source) << " ||| " << text::join(p.target) << '\n';
  }
}

}  // namespace mtloop
