#include <string>
#include <string_view>

#include "mtloop/text/metrics.hpp"
#include "mtloop/text/utf8.hpp"

namespace mtloop::text {
namespace {

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  std::string out;
  out.reserve(s.size());
  std::size_t pos = 0;
  while (true) {
    const std::size_t hit = s.find(from, pos);
    if (hit == std::string::npos) break;
    out.append(s, pos, hit - pos);
    out.append(to);
    pos = hit + from.size();
  }
  out.append(s, pos, std::string::npos);
  s = std::move(out);
}

bool is_digit(char32_t c) { return c >= U'0' && c <= U'9'; }
bool is_period_or_comma(char32_t c) { return c == U'.' || c == U','; }

// [\{-\~\[-\` -\&\(-\+\:-\@\/]
bool is_13a_symbol(char32_t c) {
  return (c >= 0x7B && c <= 0x7E) || (c >= 0x5B && c <= 0x60) || (c >= 0x20 && c <= 0x26) ||
         (c >= 0x28 && c <= 0x2B) || (c >= 0x3A && c <= 0x40) || c == U'/';
}

// Emulates re.sub for a two-character pattern (first)(second): matches are
// found left to right and never overlap.
template <class First, class Second, class Emit>
std::u32string sub_pairs(const std::u32string& in, First first, Second second, Emit emit) {
  std::u32string out;
  out.reserve(in.size() + in.size() / 2);
  std::size_t i = 0;
  while (i < in.size()) {
    if (i + 1 < in.size() && first(in[i]) && second(in[i + 1])) {
      emit(out, in[i], in[i + 1]);
      i += 2;
    } else {
      out.push_back(in[i]);
      ++i;
    }
  }
  return out;
}

}  // namespace

TokenSeq tokenize_13a(std::string_view line) {
  std::string s(line);
  replace_all(s, "<skipped>", "");
  replace_all(s, "-\n", "");
  replace_all(s, "\n", " ");
  replace_all(s, "&quot;", "\"");
  replace_all(s, "&amp;", "&");
  replace_all(s, "&lt;", "<");
  replace_all(s, "&gt;", ">");

  std::u32string cps = U" " + decode_utf8(s) + U" ";

  std::u32string spaced;
  spaced.reserve(cps.size() * 2);
  for (char32_t c : cps) {
    if (is_13a_symbol(c)) {
      spaced.push_back(U' ');
      spaced.push_back(c);
      spaced.push_back(U' ');
    } else {
      spaced.push_back(c);
    }
  }

  auto not_digit = [](char32_t c) { return !is_digit(c); };
  cps = sub_pairs(spaced, not_digit, is_period_or_comma,
                  [](std::u32string& out, char32_t a, char32_t b) {
                    out.push_back(a);
                    out.push_back(U' ');
                    out.push_back(b);
                    out.push_back(U' ');
                  });
  cps = sub_pairs(cps, is_period_or_comma, not_digit,
                  [](std::u32string& out, char32_t a, char32_t b) {
                    out.push_back(U' ');
                    out.push_back(a);
                    out.push_back(U' ');
                    out.push_back(b);
                  });
  cps = sub_pairs(cps, is_digit, [](char32_t c) { return c == U'-'; },
                  [](std::u32string& out, char32_t a, char32_t b) {
                    out.push_back(a);
                    out.push_back(U' ');
                    out.push_back(b);
                    out.push_back(U' ');
                  });

  TokenSeq tokens;
  std::u32string current;
  for (char32_t c : cps) {
    if (is_unicode_space(c)) {
      if (!current.empty()) {
        tokens.push_back(encode_utf8(current));
        current.clear();
      }
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) tokens.push_back(encode_utf8(current));
  return tokens;
}

std::string join(const TokenSeq& tokens, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.append(sep);
    out.append(tokens[i]);
  }
  return out;
}

}  // namespace mtloop::text
