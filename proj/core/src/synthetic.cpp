#include "mtloop/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <string>

#include "mtloop/error.hpp"
#include "mtloop/text/utf8.hpp"

namespace mtloop {

namespace {

// Draws from mt19937_64 through explicit arithmetic so corpora are identical
// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

 private:
  std::mt19937_64 engine_;
};

std::string syllabary_word(Rng& rng) {
  std::u32string cps;
  const std::size_t len = 2 + rng.below(3);
  for (std::size_t i = 0; i < len; ++i) cps.push_back(static_cast<char32_t>(0x13A0 + rng.below(85)));
  return text::encode_utf8(cps);
}

std::string latin_word(Rng& rng) {
  static constexpr std::string_view consonants = "bcdfghklmnprstvwy";
  static constexpr std::string_view vowels = "aeiou";
  std::string w;
  const std::size_t syllables = 1 + rng.below(3);
  for (std::size_t i = 0; i < syllables; ++i) {
    w += consonants[rng.below(consonants.size())];
    w += vowels[rng.below(vowels.size())];
  }
  if (rng.uniform() < 0.3) w += consonants[rng.below(consonants.size())];
  return w;
}

}  // namespace

ParallelCorpus synthetic_corpus(std::size_t pairs, std::uint64_t seed, const SyntheticOptions& o) {
  if (o.vocabulary < 1 || o.min_length < 1 || o.max_length < o.min_length) throw Error("invalid synthetic options");
  Rng rng(seed);

  std::vector<std::string> source_words;
  std::vector<std::vector<TokenSeq>> translations;
  std::vector<bool> postposed;
  std::set<std::string> seen_source, seen_target;
  auto fresh = [&](auto make, std::set<std::string>& seen) {
    for (;;) {
      std::string w = make(rng);
      if (seen.insert(w).second) return w;
    }
  };
  for (int i = 0; i < o.vocabulary; ++i) {
    source_words.push_back(fresh(syllabary_word, seen_source));
    std::vector<TokenSeq> options;
    const int variants = rng.uniform() < o.ambiguity ? 2 : 1;
    for (int v = 0; v < variants; ++v) {
      TokenSeq t = {fresh(latin_word, seen_target)};
      if (rng.uniform() < 0.2) t.push_back(fresh(latin_word, seen_target));
      options.push_back(std::move(t));
    }
    translations.push_back(std::move(options));
    postposed.push_back(rng.uniform() < o.swap_rate);
  }

  std::vector<double> cdf(o.vocabulary);
  double z = 0.0;
  for (int i = 0; i < o.vocabulary; ++i) cdf[i] = (z += std::pow(i + 1.0, -o.zipf_exponent));
  auto draw_word = [&] {
    const double u = rng.uniform() * z;
    return static_cast<std::size_t>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
  };

  ParallelCorpus corpus;
  corpus.direction = Direction::ChrEn;
  for (std::size_t p = 0; p < pairs; ++p) {
    const std::size_t len = o.min_length + rng.below(o.max_length - o.min_length + 1);
    std::vector<std::size_t> words(len);
    for (auto& w : words) w = draw_word();
    std::vector<TokenSeq> pieces;
    for (std::size_t i = 0; i < len; ++i) {
      const auto& opts = translations[words[i]];
      // Ambiguous words are resolved by their right neighbour, so only
      // bigrams seen in training are translated reliably.
      const bool second = opts.size() > 1 && i + 1 < len && words[i + 1] % 3 == 0;
      pieces.push_back(second ? opts[1] : opts[0]);
    }
    for (std::size_t i = 0; i + 1 < pieces.size(); ++i)
      if (postposed[words[i]]) {
        std::swap(pieces[i], pieces[i + 1]);
        ++i;
      }
    SentencePair pair;
    for (std::size_t w : words) pair.source.push_back(source_words[w]);
    for (const auto& piece : pieces) pair.target.insert(pair.target.end(), piece.begin(), piece.end());
    corpus.pairs.push_back(std::move(pair));
  }
  return corpus;
}

}  // namespace mtloop
