#include "mtloop/smt/lexical.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "mtloop/error.hpp"

namespace mtloop::smt {

double LexicalTable::prob(std::string_view target, std::string_view source) const {
  const auto r = rows_.find(source);
  if (r == rows_.end()) return kFloor;
  const auto it = r->second.find(target);
  if (it == r->second.end() || it->second <= 0.0) return kFloor;
  return it->second;
}

const LexicalTable::Row* LexicalTable::row(std::string_view source) const {
  const auto r = rows_.find(source);
  return r == rows_.end() ? nullptr : &r->second;
}

void LexicalTable::set(std::string source, std::string target, double p) {
  rows_[std::move(source)][std::move(target)] = p;
}

std::vector<std::string> LexicalTable::target_vocabulary() const {
  std::set<std::string> vocab;
  for (const auto& [src, row] : rows_) {
    for (const auto& [tgt, p] : row) vocab.insert(tgt);
  }
  return {vocab.begin(), vocab.end()};
}

double LexicalTable::max_row_deviation() const {
  double worst = 0.0;
  for (const auto& [src, row] : rows_) {
    double sum = 0.0;
    for (const auto& [tgt, p] : row) sum += p;
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  return worst;
}

void LexicalTable::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  char buf[64];
  for (const auto& [src, row] : rows_) {
    for (const auto& [tgt, p] : row) {
      std::snprintf(buf, sizeof buf, "%.17g", p);
      out << src << ' ' << tgt << ' ' << buf << '\n';
    }
  }
}

LexicalTable LexicalTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  LexicalTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string src, tgt;
    double p = 0.0;
    if (!(fields >> src >> tgt >> p)) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": malformed lexical entry");
    }
    table.set(std::move(src), std::move(tgt), p);
  }
  return table;
}

LexicalTable train_lexical(const ParallelCorpus& corpus, int iterations) {
  if (iterations < 1) throw Error("train_lexical: iterations must be >= 1");
  if (corpus.empty()) throw Error("train_lexical: empty corpus");

  // Intern words so the inner loop works on integers.
  std::unordered_map<std::string, int> src_ids, tgt_ids;
  std::vector<std::string> src_words, tgt_words;
  auto intern = [](std::unordered_map<std::string, int>& ids, std::vector<std::string>& words,
                   const std::string& w) {
    auto [it, inserted] = ids.emplace(w, static_cast<int>(words.size()));
    if (inserted) words.push_back(w);
    return it->second;
  };
  std::vector<std::pair<std::vector<int>, std::vector<int>>> sentences;
  sentences.reserve(corpus.size());
  for (const auto& p : corpus.pairs) {
    std::vector<int> s, t;
    for (const auto& w : p.source) s.push_back(intern(src_ids, src_words, w));
    for (const auto& w : p.target) t.push_back(intern(tgt_ids, tgt_words, w));
    sentences.emplace_back(std::move(s), std::move(t));
  }

  // Sparse rows over co-occurring target words, keyed (source, target).
  std::vector<std::unordered_map<int, double>> t(src_words.size());
  const double uniform = 1.0 / static_cast<double>(tgt_words.size());
  for (const auto& [s, tg] : sentences) {
    for (int si : s) {
      for (int tj : tg) t[si].emplace(tj, uniform);
    }
  }

  std::vector<std::unordered_map<int, double>> counts(src_words.size());
  std::vector<double> totals(src_words.size());
  for (int iter = 0; iter < iterations; ++iter) {
    for (auto& row : counts) {
      for (auto& [k, v] : row) v = 0.0;
    }
    std::fill(totals.begin(), totals.end(), 0.0);
    for (const auto& [s, tg] : sentences) {
      for (int tj : tg) {
        double z = 0.0;
        for (int si : s) z += t[si][tj];
        if (z <= 0.0) continue;
        for (int si : s) {
          const double c = t[si][tj] / z;
          counts[si][tj] += c;
          totals[si] += c;
        }
      }
    }
    for (std::size_t si = 0; si < t.size(); ++si) {
      if (totals[si] <= 0.0) continue;
      for (auto& [tj, p] : t[si]) p = counts[si][tj] / totals[si];
    }
  }

  LexicalTable table;
  for (std::size_t si = 0; si < t.size(); ++si) {
    for (const auto& [tj, p] : t[si]) table.set(src_words[si], tgt_words[tj], p);
  }
  return table;
}

Alignment viterbi_source_to_target(const SentencePair& pair, const LexicalTable& forward) {
  Alignment links;
  for (std::size_t j = 0; j < pair.target.size(); ++j) {
    int best = 0;
    double best_p = -1.0;
    for (std::size_t i = 0; i < pair.source.size(); ++i) {
      const double p = forward.prob(pair.target[j], pair.source[i]);
      if (p > best_p) {
        best_p = p;
        best = static_cast<int>(i);
      }
    }
    if (!pair.source.empty()) links.emplace_back(best, static_cast<int>(j));
  }
  std::sort(links.begin(), links.end());
  return links;
}

Alignment viterbi_target_to_source(const SentencePair& pair, const LexicalTable& reverse) {
  Alignment links;
  for (std::size_t i = 0; i < pair.source.size(); ++i) {
    int best = 0;
    double best_p = -1.0;
    for (std::size_t j = 0; j < pair.target.size(); ++j) {
      const double p = reverse.prob(pair.source[i], pair.target[j]);
      if (p > best_p) {
        best_p = p;
        best = static_cast<int>(j);
      }
    }
    if (!pair.target.empty()) links.emplace_back(static_cast<int>(i), best);
  }
  std::sort(links.begin(), links.end());
  return links;
}

Alignment symmetrize(const Alignment& s2t, const Alignment& t2s, int source_len, int target_len) {
  const std::set<Link> a(s2t.begin(), s2t.end());
  const std::set<Link> b(t2s.begin(), t2s.end());
  std::set<Link> uni = a;
  uni.insert(b.begin(), b.end());
  std::set<Link> current;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::inserter(current, current.begin()));

  std::vector<char> src_aligned(source_len, 0), tgt_aligned(target_len, 0);
  for (const auto& [i, j] : current) {
    src_aligned[i] = 1;
    tgt_aligned[j] = 1;
  }

  static constexpr int kNeighbours[8][2] = {{-1, 0}, {0, -1}, {1, 0},  {0, 1},
                                            {-1, -1}, {-1, 1}, {1, -1}, {1, 1}};
  bool added = true;
  while (added) {
    added = false;
    for (int i = 0; i < source_len; ++i) {
      for (int j = 0; j < target_len; ++j) {
        if (!current.contains({i, j})) continue;
        for (const auto& d : kNeighbours) {
          const int ni = i + d[0];
          const int nj = j + d[1];
          if (ni < 0 || nj < 0 || ni >= source_len || nj >= target_len) continue;
          if ((src_aligned[ni] && tgt_aligned[nj]) || !uni.contains({ni, nj})) continue;
          if (current.insert({ni, nj}).second) {
            src_aligned[ni] = 1;
            tgt_aligned[nj] = 1;
            added = true;
          }
        }
      }
    }
  }
  return {current.begin(), current.end()};
}

Alignment align(const SentencePair& pair, const LexicalTable& forward, const LexicalTable& reverse) {
  return symmetrize(viterbi_source_to_target(pair, forward), viterbi_target_to_source(pair, reverse),
                    static_cast<int>(pair.source.size()), static_cast<int>(pair.target.size()));
}

}  // namespace mtloop::smt
