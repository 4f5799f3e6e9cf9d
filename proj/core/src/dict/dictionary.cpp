#include "mtloop/dict/dictionary.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "mtloop/error.hpp"
#include "mtloop/text/utf8.hpp"

namespace mtloop::dict {

std::string fold_case(std::string_view s) {
  std::u32string cps = text::decode_utf8(s);
  for (char32_t& c : cps) {
    if ((c >= U'A' && c <= U'Z') || (c >= 0xC0 && c <= 0xDE && c != 0xD7)) c += 0x20;
  }
  return text::encode_utf8(cps);
}

Dictionary::Dictionary(std::vector<DictEntry> entries) : entries_(std::move(entries)) {
  for (const auto& e : entries_) keys_.push_back({fold_case(e.headword), fold_case(e.gloss), text::codepoint_length(e.headword)});
  by_headword_.resize(entries_.size());
  std::iota(by_headword_.begin(), by_headword_.end(), 0);
  std::stable_sort(by_headword_.begin(), by_headword_.end(),
                   [&](std::size_t a, std::size_t b) { return keys_[a].folded_headword < keys_[b].folded_headword; });
}

int Dictionary::tier(const DictEntry& e, std::string_view folded_token) {
  if (folded_token.empty()) return -1;
  const std::string h = fold_case(e.headword);
  if (h == folded_token) return static_cast<int>(MatchTier::Exact);
  if (h.starts_with(folded_token)) return static_cast<int>(MatchTier::Prefix);
  if (h.find(folded_token) != std::string::npos) return static_cast<int>(MatchTier::Substring);
  if (fold_case(e.gloss).find(folded_token) != std::string::npos) return static_cast<int>(MatchTier::Gloss);
  return -1;
}

std::vector<DictEntry> Dictionary::lookup(std::string_view token, int limit) const {
  if (limit < 1) throw Error("lookup limit must be at least 1");
  const std::string q = fold_case(token);
  if (q.empty()) return {};

  struct Hit {
    int tier;
    std::size_t index;
  };
  std::vector<Hit> hits;
  // Exact and prefix matches form one contiguous run of the sorted headwords.
  auto it = std::lower_bound(by_headword_.begin(), by_headword_.end(), q,
                             [&](std::size_t i, const std::string& v) { return keys_[i].folded_headword < v; });
  std::vector<bool> taken(entries_.size(), false);
  for (; it != by_headword_.end() && keys_[*it].folded_headword.starts_with(q); ++it) {
    hits.push_back({keys_[*it].folded_headword == q ? 0 : 1, *it});
    taken[*it] = true;
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (taken[i]) continue;
    if (keys_[i].folded_headword.find(q) != std::string::npos)
      hits.push_back({2, i});
    else if (keys_[i].folded_gloss.find(q) != std::string::npos)
      hits.push_back({3, i});
  }

  auto before = [&](const Hit& a, const Hit& b) {
    if (a.tier != b.tier) return a.tier < b.tier;
    const auto& ka = keys_[a.index];
    const auto& kb = keys_[b.index];
    if (ka.length != kb.length) return ka.length < kb.length;
    const auto& ea = entries_[a.index];
    const auto& eb = entries_[b.index];
    if (ea.headword != eb.headword) return ea.headword < eb.headword;
    if (ea.gloss != eb.gloss) return ea.gloss < eb.gloss;
    if (ea.notes != eb.notes) return ea.notes < eb.notes;
    return a.index < b.index;
  };
  const std::size_t n = std::min(hits.size(), static_cast<std::size_t>(limit));
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(n), hits.end(), before);
  std::vector<DictEntry> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(entries_[hits[i].index]);
  return out;
}

Dictionary parse_tsv(std::string_view content) {
  std::vector<DictEntry> entries;
  std::size_t line_no = 0;
  bool header = false;
  std::size_t start = 0;
  while (start <= content.size()) {
    std::size_t nl = content.find('\n', start);
    if (nl == std::string_view::npos) nl = content.size();
    std::string_view line = content.substr(start, nl - start);
    start = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::size_t p = 0;
    for (;;) {
      const std::size_t tab = line.find('\t', p);
      cols.emplace_back(line.substr(p, tab == std::string_view::npos ? std::string_view::npos : tab - p));
      if (tab == std::string_view::npos) break;
      p = tab + 1;
    }
    const std::string where = "dictionary line " + std::to_string(line_no);
    if (!header) {
      if (cols.size() < 3 || cols[0] != "headword" || cols[1] != "language" || cols[2] != "gloss" ||
          (cols.size() > 3 && cols[3] != "notes") || cols.size() > 4)
        throw FormatError(where + ": expected header headword/language/gloss/notes");
      header = true;
      continue;
    }
    if (cols.size() < 3 || cols.size() > 4) throw FormatError(where + ": expected 3 or 4 columns");
    if (cols[0].empty()) throw FormatError(where + ": empty headword");
    DictEntry e;
    e.headword = cols[0];
    try {
      e.language = parse_language(cols[1]);
    } catch (const Error&) {
      throw FormatError(where + ": unknown language '" + cols[1] + "'");
    }
    e.gloss = cols[2];
    if (cols.size() == 4) e.notes = cols[3];
    entries.push_back(std::move(e));
  }
  if (!header) throw FormatError("dictionary: missing header row");
  return Dictionary(std::move(entries));
}

Dictionary load_tsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_tsv(ss.str());
}

}  // namespace mtloop::dict
