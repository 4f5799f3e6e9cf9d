#include "mtloop/smt/phrase_table.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "mtloop/error.hpp"

namespace mtloop::smt {
namespace {

constexpr double kOrientationSmoothing = 0.5;

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t pos = 0;
  while (true) {
    const auto hit = line.find(" ||| ", pos);
    if (hit == std::string::npos) {
      fields.push_back(line.substr(pos));
      break;
    }
    fields.push_back(line.substr(pos, hit - pos));
    pos = hit + 5;
  }
  return fields;
}

TokenSeq split_tokens(const std::string& s) {
  TokenSeq out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Orientation orientation_between(Span previous, Span current) {
  if (current.begin == previous.end) return Orientation::Monotone;
  if (current.end == previous.begin) return Orientation::Swap;
  return Orientation::Discontinuous;
}

std::vector<ExtractedPhrase> extract_phrases(const SentencePair& pair, const Alignment& links,
                                             int max_len) {
  const int slen = static_cast<int>(pair.source.size());
  const int tlen = static_cast<int>(pair.target.size());
  const std::set<Link> link_set(links.begin(), links.end());
  for (const auto& [i, j] : links) {
    if (i < 0 || j < 0 || i >= slen || j >= tlen) throw Error("extract_phrases: link out of range");
  }

  std::vector<ExtractedPhrase> out;
  for (int s1 = 0; s1 < slen; ++s1) {
    for (int s2 = s1 + 1; s2 <= std::min(slen, s1 + max_len); ++s2) {
      for (int t1 = 0; t1 < tlen; ++t1) {
        for (int t2 = t1 + 1; t2 <= std::min(tlen, t1 + max_len); ++t2) {
          bool consistent = true;
          bool any_inside = false;
          for (const auto& [i, j] : links) {
            const bool in_src = i >= s1 && i < s2;
            const bool in_tgt = j >= t1 && j < t2;
            if (in_src != in_tgt) {
              consistent = false;
              break;
            }
            any_inside = any_inside || in_src;
          }
          if (!consistent || !any_inside) continue;

          ExtractedPhrase phrase;
          phrase.source = {s1, s2};
          phrase.target = {t1, t2};
          for (const auto& [i, j] : links) {
            if (i >= s1 && i < s2) phrase.links.emplace_back(i - s1, j - t1);
          }
          if ((s1 == 0 && t1 == 0) || link_set.contains({s1 - 1, t1 - 1})) {
            phrase.orientation = Orientation::Monotone;
          } else if (link_set.contains({s2, t1 - 1})) {
            phrase.orientation = Orientation::Swap;
          } else {
            phrase.orientation = Orientation::Discontinuous;
          }
          out.push_back(std::move(phrase));
        }
      }
    }
  }
  return out;
}

void PhraseTable::add(const TokenSeq& source, PhraseEntry entry) {
  if (source.empty() || entry.target.empty()) throw Error("phrase table: empty phrase");
  if (static_cast<int>(source.size()) > max_phrase_length_ ||
      static_cast<int>(entry.target.size()) > max_phrase_length_) {
    throw Error("phrase table: phrase exceeds maximum length");
  }
  for (double s : entry.scores) {
    if (!(s > 0.0 && s <= 1.0)) throw Error("phrase table: score outside (0, 1]");
  }
  entries_[text::join(source)].push_back(std::move(entry));
}

const std::vector<PhraseEntry>* PhraseTable::find(std::string_view joined_source) const {
  const auto it = entries_.find(joined_source);
  return it == entries_.end() ? nullptr : &it->second;
}

const std::vector<PhraseEntry>* PhraseTable::find(const TokenSeq& source) const {
  return find(text::join(source));
}

std::size_t PhraseTable::entry_count() const {
  std::size_t n = 0;
  for (const auto& [src, list] : entries_) n += list.size();
  return n;
}

PhraseEntry* PhraseTable::find_mutable(std::string_view joined_source, const TokenSeq& target) {
  const auto it = entries_.find(joined_source);
  if (it == entries_.end()) return nullptr;
  for (auto& e : it->second) {
    if (e.target == target) return &e;
  }
  return nullptr;
}

void PhraseTable::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  for (const auto& [src, list] : entries_) {
    for (const auto& e : list) {
      out << src << " ||| " << text::join(e.target) << " |||";
      for (double s : e.scores) out << ' ' << format_double(s);
      if (!e.links.empty()) {
        out << " |||";
        for (const auto& [i, j] : e.links) out << ' ' << i << '-' << j;
      }
      out << '\n';
    }
  }
}

void PhraseTable::save_reordering(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  for (const auto& [src, list] : entries_) {
    for (const auto& e : list) {
      out << src << " ||| " << text::join(e.target) << " |||";
      for (double p : e.reordering.p) out << ' ' << format_double(p);
      out << '\n';
    }
  }
}

PhraseTable PhraseTable::load(const std::filesystem::path& path, int max_phrase_length) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  PhraseTable table(max_phrase_length);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto where = [&] { return path.string() + ":" + std::to_string(lineno) + ": "; };
    const auto fields = split_fields(line);
    if (fields.size() != 3 && fields.size() != 4) throw FormatError(where() + "expected 3 or 4 fields");
    PhraseEntry entry;
    entry.target = split_tokens(fields[1]);
    std::istringstream scores(fields[2]);
    for (double& s : entry.scores) {
      if (!(scores >> s)) throw FormatError(where() + "expected four scores");
    }
    if (fields.size() == 4) {
      std::istringstream links(fields[3]);
      std::string link;
      while (links >> link) {
        const auto dash = link.find('-');
        if (dash == std::string::npos) throw FormatError(where() + "malformed alignment point");
        entry.links.emplace_back(std::stoi(link.substr(0, dash)), std::stoi(link.substr(dash + 1)));
      }
    }
    try {
      table.add(split_tokens(fields[0]), std::move(entry));
    } catch (const Error& e) {
      throw FormatError(where() + e.what());
    }
  }
  return table;
}

void PhraseTable::load_reordering(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 3) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected 3 fields");
    }
    ReorderingProbs probs;
    std::istringstream values(fields[2]);
    for (double& p : probs.p) {
      if (!(values >> p) || !(p > 0.0 && p <= 1.0)) {
        throw FormatError(path.string() + ":" + std::to_string(lineno) + ": bad orientation probability");
      }
    }
    if (PhraseEntry* e = find_mutable(text::join(split_tokens(fields[0])), split_tokens(fields[1]))) {
      e->reordering = probs;
    }
  }
}

PhraseTable build_phrase_table(const ParallelCorpus& corpus, const LexicalTable& forward,
                               const LexicalTable& reverse, int max_len) {
  struct Stats {
    double count = 0.0;
    double lex_ts = 0.0;
    double lex_st = 0.0;
    std::array<double, 3> orientations{};
    Alignment links;
  };
  // source phrase -> target phrase -> stats, both ordered for determinism.
  std::map<std::string, std::map<std::string, Stats>> stats;
  std::map<std::string, double> target_counts;

  for (const auto& pair : corpus.pairs) {
    const Alignment links = align(pair, forward, reverse);
    for (const auto& ph : extract_phrases(pair, links, max_len)) {
      const TokenSeq src(pair.source.begin() + ph.source.begin, pair.source.begin() + ph.source.end);
      const TokenSeq tgt(pair.target.begin() + ph.target.begin, pair.target.begin() + ph.target.end);

      std::vector<std::vector<int>> by_target(tgt.size()), by_source(src.size());
      for (const auto& [i, j] : ph.links) {
        by_target[j].push_back(i);
        by_source[i].push_back(j);
      }
      double lex_ts = 1.0;
      for (std::size_t j = 0; j < tgt.size(); ++j) {
        double sum = 0.0;
        if (by_target[j].empty()) {
          for (const auto& s : src) sum += forward.prob(tgt[j], s);
          lex_ts *= sum / static_cast<double>(src.size());
        } else {
          for (int i : by_target[j]) sum += forward.prob(tgt[j], src[i]);
          lex_ts *= sum / static_cast<double>(by_target[j].size());
        }
      }
      double lex_st = 1.0;
      for (std::size_t i = 0; i < src.size(); ++i) {
        double sum = 0.0;
        if (by_source[i].empty()) {
          for (const auto& t : tgt) sum += reverse.prob(src[i], t);
          lex_st *= sum / static_cast<double>(tgt.size());
        } else {
          for (int j : by_source[i]) sum += reverse.prob(src[i], tgt[j]);
          lex_st *= sum / static_cast<double>(by_source[i].size());
        }
      }

      const std::string src_key = text::join(src);
      const std::string tgt_key = text::join(tgt);
      Stats& s = stats[src_key][tgt_key];
      if (s.count == 0.0) s.links = ph.links;
      s.count += 1.0;
      s.lex_ts = std::max(s.lex_ts, lex_ts);
      s.lex_st = std::max(s.lex_st, lex_st);
      s.orientations[static_cast<int>(ph.orientation)] += 1.0;
      target_counts[tgt_key] += 1.0;
    }
  }

  PhraseTable table(max_len);
  auto clamp_score = [](double v) { return std::clamp(v, LexicalTable::kFloor, 1.0); };
  for (const auto& [src_key, targets] : stats) {
    double src_count = 0.0;
    for (const auto& [tgt_key, s] : targets) src_count += s.count;
    for (const auto& [tgt_key, s] : targets) {
      PhraseEntry entry;
      entry.target = split_tokens(tgt_key);
      entry.scores = {clamp_score(s.count / src_count), clamp_score(s.lex_ts),
                      clamp_score(s.count / target_counts[tgt_key]), clamp_score(s.lex_st)};
      entry.links = s.links;
      const double total = s.orientations[0] + s.orientations[1] + s.orientations[2];
      for (int o = 0; o < 3; ++o) {
        entry.reordering.p[o] =
            (s.orientations[o] + kOrientationSmoothing) / (total + 3 * kOrientationSmoothing);
      }
      table.add(split_tokens(src_key), std::move(entry));
    }
  }
  return table;
}

}  // namespace mtloop::smt
