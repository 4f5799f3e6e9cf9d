#include "mtloop/smt/lm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "mtloop/error.hpp"

namespace mtloop::smt {
namespace {

constexpr double kLn10 = 2.302585092994045684;
constexpr double kBosLog10Prob = -99.0;

std::string join_words(std::span<const std::string> words) {
  std::string key;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) key.push_back(' ');
    key.append(words[i]);
  }
  return key;
}

}  // namespace

NGramLM NGramLM::train(const std::vector<TokenSeq>& sentences, int order, double discount) {
  if (sentences.empty()) throw Error("train_lm: empty corpus");
  if (order < 1) throw Error("train_lm: order must be >= 1");
  if (!(discount > 0.0 && discount < 1.0)) throw Error("train_lm: discount must be in (0, 1)");

  // Raw counts of every n-gram whose last word is not <s>; ordered maps keep
  // the floating-point accumulation order fixed.
  std::vector<std::map<std::vector<std::string>, double>> raw(order);
  std::set<std::string> words;
  for (const auto& sentence : sentences) {
    std::vector<std::string> padded;
    padded.reserve(sentence.size() + 2);
    padded.emplace_back(kBos);
    for (const auto& w : sentence) {
      padded.push_back(w);
      words.insert(w);
    }
    padded.emplace_back(kEos);
    for (std::size_t end = 1; end < padded.size(); ++end) {
      for (int n = 1; n <= order && static_cast<std::size_t>(n) <= end + 1; ++n) {
        std::vector<std::string> gram(padded.begin() + (end + 1 - n), padded.begin() + end + 1);
        raw[n - 1][gram] += 1.0;
      }
    }
  }
  words.insert(std::string(kEos));
  words.insert(std::string(kUnk));
  words.erase(std::string(kBos));
  const double vocab_size = static_cast<double>(words.size());

  // Adjusted counts: raw counts at the top order and for n-grams starting
  // with <s>; continuation counts (distinct left extensions) otherwise.
  std::vector<std::map<std::vector<std::string>, double>> adjusted(order);
  adjusted[order - 1] = raw[order - 1];
  for (int n = order - 1; n >= 1; --n) {
    for (const auto& [gram, c] : raw[n - 1]) {
      if (gram.front() == kBos) adjusted[n - 1][gram] = c;
    }
    for (const auto& [gram, c] : raw[n]) {
      std::vector<std::string> suffix(gram.begin() + 1, gram.end());
      if (suffix.front() == kBos) continue;
      adjusted[n - 1][suffix] += 1.0;
    }
  }

  // Per-context totals and type counts for each order.
  struct ContextStats {
    double total = 0.0;
    double types = 0.0;
  };
  std::vector<std::map<std::vector<std::string>, ContextStats>> contexts(order);
  for (int n = 1; n <= order; ++n) {
    for (const auto& [gram, c] : adjusted[n - 1]) {
      std::vector<std::string> ctx(gram.begin(), gram.end() - 1);
      auto& s = contexts[n - 1][ctx];
      s.total += c;
      s.types += 1.0;
    }
  }

  NGramLM lm;
  lm.order_ = order;
  lm.grams_.assign(order, {});

  // Interpolated probability, computed recursively down to the uniform floor.
  std::vector<std::map<std::vector<std::string>, double>> prob(order);
  auto lower_prob = [&](const std::vector<std::string>& gram, int n) -> double {
    // P_n(w | h) for the n-gram `gram` whether observed or not.
    double p = 1.0 / vocab_size;
    for (int m = 1; m <= n; ++m) {
      std::vector<std::string> g(gram.end() - m, gram.end());
      std::vector<std::string> ctx(g.begin(), g.end() - 1);
      const auto cs = contexts[m - 1].find(ctx);
      if (cs == contexts[m - 1].end()) continue;
      const auto it = adjusted[m - 1].find(g);
      const double c = it == adjusted[m - 1].end() ? 0.0 : it->second;
      const double gamma = discount * cs->second.types / cs->second.total;
      p = std::max(c - discount, 0.0) / cs->second.total + gamma * p;
    }
    return p;
  };

  for (int n = 1; n <= order; ++n) {
    for (const auto& [gram, c] : adjusted[n - 1]) {
      Entry e;
      e.log_prob = std::log(lower_prob(gram, n));
      lm.grams_[n - 1][join_words(gram)] = e;
    }
  }
  // Unigram entries for every predictable word, plus <s> as a context.
  for (const auto& w : words) {
    if (!lm.grams_[0].contains(w)) lm.grams_[0][w].log_prob = std::log(lower_prob({w}, 1));
  }
  lm.grams_[0][std::string(kBos)].log_prob = kBosLog10Prob * kLn10;

  // Back-off weight of a context = its interpolation weight one order up.
  for (int n = 2; n <= order; ++n) {
    for (const auto& [ctx, s] : contexts[n - 1]) {
      const auto it = lm.grams_[n - 2].find(join_words(ctx));
      if (it == lm.grams_[n - 2].end()) continue;
      it->second.log_backoff = std::log(discount * s.types / s.total);
    }
  }
  return lm;
}

std::string_view NGramLM::map_word(std::string_view word) const {
  return grams_.empty() || grams_[0].contains(std::string(word)) ? word : kUnk;
}

bool NGramLM::contains(std::string_view word) const {
  return !grams_.empty() && grams_[0].contains(std::string(word));
}

const NGramLM::Entry* NGramLM::lookup(std::span<const std::string> words) const {
  const auto n = words.size();
  if (n == 0 || n > grams_.size()) return nullptr;
  const auto it = grams_[n - 1].find(join_words(words));
  return it == grams_[n - 1].end() ? nullptr : &it->second;
}

double NGramLM::log_prob(std::span<const std::string> history, std::string_view word) const {
  const std::size_t keep = std::min<std::size_t>(history.size(), static_cast<std::size_t>(order_ - 1));
  std::vector<std::string> gram;
  gram.reserve(keep + 1);
  for (std::size_t i = history.size() - keep; i < history.size(); ++i) {
    gram.emplace_back(map_word(history[i]));
  }
  gram.emplace_back(map_word(word));

  double backoff = 0.0;
  std::span<const std::string> g(gram);
  while (!g.empty()) {
    if (const Entry* e = lookup(g)) return backoff + e->log_prob;
    if (const Entry* ctx = lookup(g.first(g.size() - 1))) backoff += ctx->log_backoff;
    g = g.subspan(1);
  }
  // Unreachable for trained models: <unk> always has a unigram entry.
  return backoff + std::log(1e-7);
}

double NGramLM::score_continuation(std::span<const std::string> history,
                                   std::span<const std::string> tokens) const {
  std::vector<std::string> context(history.begin(), history.end());
  double total = 0.0;
  for (const auto& w : tokens) {
    total += log_prob(context, w);
    context.push_back(w);
  }
  return total;
}

double NGramLM::sentence_log_prob(const TokenSeq& tokens) const {
  if (tokens.empty()) return 0.0;
  std::vector<std::string> context{std::string(kBos)};
  double total = 0.0;
  for (const auto& w : tokens) {
    total += log_prob(context, w);
    context.push_back(w);
  }
  total += log_prob(context, kEos);
  return total;
}

std::vector<std::string> NGramLM::vocabulary() const {
  std::vector<std::string> out;
  if (grams_.empty()) return out;
  for (const auto& [w, e] : grams_[0]) {
    if (w != kBos) out.push_back(w);
  }
  std::sort(out.begin(), out.end());
  return out;
}

void NGramLM::save_arpa(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "\n\\data\\\n";
  for (int n = 1; n <= order_; ++n) out << "ngram " << n << '=' << grams_[n - 1].size() << '\n';
  char buf[64];
  for (int n = 1; n <= order_; ++n) {
    out << "\n\\" << n << "-grams:\n";
    std::vector<std::string> keys;
    keys.reserve(grams_[n - 1].size());
    for (const auto& [k, e] : grams_[n - 1]) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    for (const auto& k : keys) {
      const Entry& e = grams_[n - 1].at(k);
      std::snprintf(buf, sizeof buf, "%.17g", e.log_prob / kLn10);
      out << buf << '\t' << k;
      if (n < order_ && e.log_backoff != 0.0) {
        std::snprintf(buf, sizeof buf, "%.17g", e.log_backoff / kLn10);
        out << '\t' << buf;
      }
      out << '\n';
    }
  }
  out << "\n\\end\\\n";
}

NGramLM NGramLM::load_arpa(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  NGramLM lm;
  std::vector<std::size_t> declared;
  std::string line;
  int section = 0;  // 0 = header, n = inside \n-grams:, -1 = done
  bool seen_data = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line == "\\data\\") {
      seen_data = true;
      continue;
    }
    if (line == "\\end\\") {
      section = -1;
      break;
    }
    if (line.rfind("ngram ", 0) == 0 && section == 0) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw FormatError("ARPA: malformed count line");
      const int n = std::stoi(line.substr(6, eq - 6));
      if (n != static_cast<int>(declared.size()) + 1) throw FormatError("ARPA: counts out of order");
      declared.push_back(std::stoul(line.substr(eq + 1)));
      continue;
    }
    if (line.front() == '\\' && line.size() > 8 && line.ends_with("-grams:")) {
      section = std::stoi(line.substr(1));
      if (section < 1 || section > static_cast<int>(declared.size())) {
        throw FormatError("ARPA: unexpected section " + line);
      }
      continue;
    }
    if (section < 1) throw FormatError("ARPA: content outside of an n-gram section");
    std::vector<std::string> parts;
    {
      std::size_t pos = 0;
      while (pos <= line.size()) {
        const auto tab = line.find('\t', pos);
        parts.push_back(line.substr(pos, tab == std::string::npos ? std::string::npos : tab - pos));
        if (tab == std::string::npos) break;
        pos = tab + 1;
      }
    }
    if (parts.size() < 2 || parts.size() > 3) throw FormatError("ARPA: malformed entry '" + line + "'");
    Entry e;
    e.log_prob = std::stod(parts[0]) * kLn10;
    if (parts.size() == 3) e.log_backoff = std::stod(parts[2]) * kLn10;
    if (lm.grams_.size() < declared.size()) lm.grams_.resize(declared.size());
    lm.grams_[section - 1][parts[1]] = e;
  }
  if (!seen_data || section != -1) throw FormatError("ARPA: missing \\data\\ or \\end\\");
  lm.order_ = static_cast<int>(declared.size());
  lm.grams_.resize(declared.size());
  for (std::size_t n = 0; n < declared.size(); ++n) {
    if (lm.grams_[n].size() != declared[n]) throw FormatError("ARPA: n-gram count mismatch");
  }
  return lm;
}

}  // namespace mtloop::smt
