#include "mtloop/hitl/retrain.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mtloop/error.hpp"
#include "mtloop/qe/gbt.hpp"

namespace mtloop::hitl {

using nlohmann::json;

namespace {

bool word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

char lower(char c) { return c >= 'A' && c <= 'Z' ? static_cast<char>(c + 32) : c; }
char upper(char c) { return c >= 'a' && c <= 'z' ? static_cast<char>(c - 32) : c; }

// Lowercase words of a string, in order.
std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!word_byte(static_cast<unsigned char>(s[i]))) {
      ++i;
      continue;
    }
    std::string w;
    for (; i < s.size() && word_byte(static_cast<unsigned char>(s[i])); ++i) w += lower(s[i]);
    out.push_back(std::move(w));
  }
  return out;
}

TokenSeq& english_side(SentencePair& p, Direction d) { return d == Direction::ChrEn ? p.target : p.source; }

}  // namespace

ArchaicMap ArchaicMap::defaults() { return {{{"thy", "your"}, {"thou", "you"}}}; }

void ArchaicMap::validate() const {
  std::set<std::string> keys;
  for (const auto& [key, replacement] : terms) {
    if (key.empty()) throw Error("archaic map: empty term");
    const auto w = words(key);
    if (w.size() != 1 || w[0] != key) throw Error("archaic map: term '" + key + "' is not one lowercase word");
    if (!keys.insert(key).second) throw Error("archaic map: duplicate term '" + key + "'");
  }
  for (const auto& [key, replacement] : terms)
    for (const auto& w : words(replacement))
      if (keys.count(w)) throw Error("archaic map: replacement '" + replacement + "' contains term '" + w + "'");
}

ArchaicMap parse_archaic_map(std::string_view content) {
  ArchaicMap map;
  std::istringstream in{std::string(content)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
      throw FormatError("archaic map line " + std::to_string(line_no) + ": expected two tab-separated columns");
    map.terms.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  try {
    map.validate();
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw FormatError(e.what());
  }
  return map;
}

ArchaicMap load_archaic_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_archaic_map(ss.str());
}

std::string normalize_archaic(std::string_view text, const ArchaicMap& map) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (!word_byte(static_cast<unsigned char>(text[i]))) {
      out += text[i++];
      continue;
    }
    const std::size_t start = i;
    while (i < text.size() && word_byte(static_cast<unsigned char>(text[i]))) ++i;
    const std::string_view word = text.substr(start, i - start);
    std::string folded(word);
    std::transform(folded.begin(), folded.end(), folded.begin(), lower);
    const auto hit = std::find_if(map.terms.begin(), map.terms.end(), [&](const auto& t) { return t.first == folded; });
    if (hit == map.terms.end()) {
      out += word;
      continue;
    }
    std::string replacement = hit->second;
    if (!replacement.empty() && word[0] >= 'A' && word[0] <= 'Z') replacement[0] = upper(replacement[0]);
    out += replacement;
  }
  return out;
}

TokenSeq normalize_archaic(const TokenSeq& tokens, const ArchaicMap& map) {
  TokenSeq out;
  out.reserve(tokens.size());
  for (const auto& tok : tokens) {
    std::string n = normalize_archaic(tok, map);
    if (n == tok) {
      out.push_back(tok);
      continue;
    }
    // A replacement may span several tokens.
    for (auto& t : text::tokenize_13a(n)) out.push_back(std::move(t));
  }
  return out;
}

ParallelCorpus normalize_english(const ParallelCorpus& corpus, const ArchaicMap& map) {
  ParallelCorpus out = corpus;
  for (auto& p : out.pairs) {
    TokenSeq& side = english_side(p, out.direction);
    side = normalize_archaic(side, map);
  }
  return out;
}

ParallelCorpus merge_corrections(const ParallelCorpus& train, const ParallelCorpus& corrections, int repeat) {
  if (repeat != 1 && repeat != 5 && repeat != 10) throw Error("repeat factor must be 1, 5 or 10");
  if (!corrections.empty() && corrections.direction != train.direction)
    throw Error("corrections and training corpus differ in direction");
  ParallelCorpus out = train;
  out.pairs.reserve(train.size() + static_cast<std::size_t>(repeat) * corrections.size());
  for (int r = 0; r < repeat; ++r) out.pairs.insert(out.pairs.end(), corrections.pairs.begin(), corrections.pairs.end());
  return out;
}

bool RetrainReport::ok() const {
  return std::all_of(directions.begin(), directions.end(), [](const auto& d) { return d.error.empty(); });
}

std::string RetrainReport::to_json() const {
  json arr = json::array();
  for (const auto& d : directions) {
    json j = {{"direction", std::string(to_string(d.direction))},
              {"bleu_before", d.bleu_before},
              {"bleu_after", d.bleu_after},
              {"corrections_used", d.corrections_used},
              {"repeat_factor", d.repeat_factor},
              {"swapped", d.swapped}};
    j["error"] = d.error.empty() ? json(nullptr) : json(d.error);
    arr.push_back(std::move(j));
  }
  return json{{"v", 1}, {"directions", std::move(arr)}}.dump(2);
}

std::string RetrainReport::summary() const {
  std::string out;
  char buf[256];
  for (const auto& d : directions) {
    if (!d.error.empty()) {
      out += std::string(to_string(d.direction)) + ": failed, " + d.error + "\n";
      continue;
    }
    std::snprintf(buf, sizeof buf, "%s: BLEU %.2f -> %.2f (%+.2f), %zu corrections x%d, %s\n",
                  std::string(to_string(d.direction)).c_str(), d.bleu_before, d.bleu_after,
                  d.bleu_after - d.bleu_before, d.corrections_used, d.repeat_factor,
                  d.swapped ? "model swapped" : "model kept");
    out += buf;
  }
  return out;
}

DirectionReport retrain_direction(const ParallelCorpus& train, const ParallelCorpus& dev,
                                  const ParallelCorpus& corrections, const RetrainConfig& config,
                                  ModelRegistry* registry) {
  if (dev.empty()) throw Error("retrain: dev set is empty");
  if (dev.direction != train.direction) throw Error("retrain: dev and training corpus differ in direction");
  config.archaic.validate();

  DirectionReport report;
  report.direction = train.direction;
  report.corrections_used = corrections.size();
  report.repeat_factor = config.repeat;

  const ParallelCorpus before_corpus = normalize_english(train, config.archaic);
  const ParallelCorpus after_corpus =
      merge_corrections(before_corpus, normalize_english(corrections, config.archaic), config.repeat);
  const ParallelCorpus dev_n = normalize_english(dev, config.archaic);

  std::vector<TokenSeq> refs;
  for (const auto& p : dev_n.pairs) refs.push_back(p.target);
  auto score = [&](const smt::SmtModel& m) {
    std::vector<TokenSeq> hyps;
    for (const auto& p : dev_n.pairs) hyps.push_back(m.translate(p.source, config.decoder).target);
    return text::corpus_bleu(hyps, refs).value;
  };

  DirectionModels updated;
  try {
    const smt::SmtModel before = smt::train_smt(before_corpus, config.smt);
    auto after = std::make_shared<const smt::SmtModel>(smt::train_smt(after_corpus, config.smt));
    report.bleu_before = score(before);
    report.bleu_after = score(*after);
    report.swapped = registry != nullptr && report.bleu_after >= report.bleu_before - config.guard_rail;
    if (!report.swapped) return report;

    updated = registry->get(train.direction);
    updated.smt = after;
    if (config.retrain_nmt) updated.nmt = std::make_shared<const nmt::NmtModel>(nmt::train_toy_nmt(after_corpus));
    if (config.rebuild_qe) {
      const qe::QEDataset data = qe::build_kfold_dataset(after_corpus, qe::smt_trainer(), config.kfold);
      updated.smt_qe = std::make_shared<const qe::GradientBoostedEnsemble>(
          qe::gbt_train(data, qe::default_gbt_params(qe::FeatureKind::Smt, train.direction)));
    }
  } catch (const std::exception& e) {
    report.error = e.what();
    report.swapped = false;
    return report;
  }
  registry->set(train.direction, std::move(updated));
  return report;
}

RetrainReport retrain(const ParallelCorpus& train, const ParallelCorpus& dev, const ParallelCorpus& corrections,
                      const RetrainConfig& config, ModelRegistry* registry) {
  RetrainReport report;
  report.directions.push_back(retrain_direction(train, dev, corrections, config, registry));
  report.directions.push_back(
      retrain_direction(train.reversed(), dev.reversed(), corrections.reversed(), config, registry));
  return report;
}

}  // namespace mtloop::hitl
