#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "mtloop/corpus.hpp"
#include "mtloop/error.hpp"
#include "mtloop/text/metrics.hpp"
#include "mtloop/text/utf8.hpp"

using namespace mtloop;
using namespace mtloop::text;

namespace {

// sacreBLEU 1.5.0, sentence_bleu(h, [r]) and corpus_bleu over the fixture
// files, tokenize="13a", smooth="exp".
constexpr std::array<double, 20> kSentenceGolden = {
    100.0,     78.254229, 40.936538, 49.760939, 59.460356, 23.64354,  35.531011,
    19.420577, 70.710678, 38.260294, 36.787944, 45.138644, 60.767958, 55.936849,
    52.47358,  55.032121, 40.668309, 31.947155, 100.0,     35.355339};
constexpr double kCorpusGolden = 52.82539387673488;
constexpr double kCorpusFirstFiveGolden = 70.05471156071332;

std::vector<TokenSeq> tokenized_lines(const char* name) {
  std::vector<TokenSeq> out;
  for (const auto& line : read_lines(std::string(MTLOOP_FIXTURE_DIR) + "/" + name)) {
    out.push_back(tokenize_13a(line));
  }
  return out;
}

}  // namespace

TEST(Tokenize13a, Examples) {
  EXPECT_EQ(tokenize_13a("the cat."), (TokenSeq{"the", "cat", "."}));
  EXPECT_TRUE(tokenize_13a("").empty());
  EXPECT_EQ(tokenize_13a("A  B"), (TokenSeq{"A", "B"}));
}

TEST(Tokenize13a, MatchesReferenceTokenizer) {
  EXPECT_EQ(tokenize_13a("Hello, world! It's 3.5-4 (approx)."),
            (TokenSeq{"Hello", ",", "world", "!", "It's", "3.5", "-", "4", "(", "approx", ")", "."}));
  EXPECT_EQ(tokenize_13a("ᏣᎳᎩ ᎦᏬᏂᎯᏍᏗ."), (TokenSeq{"ᏣᎳᎩ", "ᎦᏬᏂᎯᏍᏗ", "."}));
  EXPECT_EQ(tokenize_13a("a&quot;b&amp;c 1,000.50 x.y 5-3"),
            (TokenSeq{"a", "\"", "b", "&", "c", "1,000.50", "x", ".", "y", "5", "-", "3"}));
}

TEST(Tokenize13a, IdempotentOnJoinedOutput) {
  for (const auto& line : read_lines(std::string(MTLOOP_FIXTURE_DIR) + "/bleu_hyp.txt")) {
    const TokenSeq once = tokenize_13a(line);
    EXPECT_EQ(tokenize_13a(join(once)), once) << line;
  }
}

TEST(Tokenize13a, SyllabaryRoundTripsBitExact) {
  const std::string s = "ᎠᏂᏴᏫᏯ ᎤᎾᏓᏅᏖᎴ";
  EXPECT_EQ(join(tokenize_13a(s)), s);
}

TEST(SentenceBleu, Examples) {
  EXPECT_DOUBLE_EQ(sentence_bleu({"the", "cat", "sat"}, TokenSeq{"the", "cat", "sat"}).value, 100.0);
  EXPECT_EQ(sentence_bleu({}, TokenSeq{"a"}).value, 0.0);
  const BleuScore s = sentence_bleu({"the", "cat"}, TokenSeq{"the", "cat", "sat"});
  EXPECT_NEAR(s.value, 60.653065971263366, 1e-9);
  EXPECT_NEAR(s.brevity_penalty, std::exp(1.0 - 3.0 / 2.0), 1e-12);
  EXPECT_EQ(s.effective_order, 2);
}

TEST(SentenceBleu, FixtureGoldens) {
  const auto hyps = tokenized_lines("bleu_hyp.txt");
  const auto refs = tokenized_lines("bleu_ref.txt");
  ASSERT_EQ(hyps.size(), kSentenceGolden.size());
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    EXPECT_NEAR(sentence_bleu(hyps[i], refs[i]).value, kSentenceGolden[i], 1e-4) << "pair " << i;
  }
}

TEST(SentenceBleu, MultipleReferences) {
  const std::vector<TokenSeq> refs = {tokenize_13a("the cat sat on a mat"),
                                      tokenize_13a("a cat sat on the mat there")};
  EXPECT_NEAR(sentence_bleu(tokenize_13a("the cat sat on the mat"), refs).value, 95.54427922043672, 1e-9);
}

TEST(SentenceBleu, InvariantUnderReferencePermutation) {
  std::vector<TokenSeq> refs = {{"a", "b", "c", "d"}, {"a", "x", "c"}, {"b", "c", "d", "e", "f"}};
  const TokenSeq hyp = {"a", "b", "c", "e"};
  const double base = sentence_bleu(hyp, refs).value;
  std::sort(refs.begin(), refs.end());
  do {
    EXPECT_EQ(sentence_bleu(hyp, refs).value, base);
  } while (std::next_permutation(refs.begin(), refs.end()));
}

TEST(SentenceBleu, ValueMatchesDecomposition) {
  const auto hyps = tokenized_lines("bleu_hyp.txt");
  const auto refs = tokenized_lines("bleu_ref.txt");
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    const BleuScore s = sentence_bleu(hyps[i], refs[i]);
    double log_sum = 0.0;
    for (int n = 0; n < s.effective_order; ++n) log_sum += std::log(s.precisions[n]);
    const double expected = 100.0 * s.brevity_penalty * std::exp(log_sum / s.effective_order);
    EXPECT_NEAR(s.value, std::min(expected, 100.0), 1e-9);
  }
}

TEST(SentenceBleu, RequiresReference) {
  EXPECT_THROW(sentence_bleu({"a"}, std::span<const TokenSeq>{}), Error);
}

TEST(SentenceBleu, RangeUnderRandomInputs) {
  std::mt19937 rng(7);
  const std::vector<std::string> vocab = {"a", "b", "c", "d", "."};
  for (int trial = 0; trial < 500; ++trial) {
    auto make = [&](int max_len) {
      TokenSeq seq(rng() % (max_len + 1));
      for (auto& t : seq) t = vocab[rng() % vocab.size()];
      return seq;
    };
    const TokenSeq hyp = make(8);
    const std::vector<TokenSeq> refs = {make(8), make(8)};
    if (refs[0].empty() && refs[1].empty()) continue;
    const double v = sentence_bleu(hyp, refs).value;
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 100.0);
  }
}

TEST(CorpusBleu, FixtureGoldens) {
  const auto hyps = tokenized_lines("bleu_hyp.txt");
  const auto refs = tokenized_lines("bleu_ref.txt");
  EXPECT_NEAR(corpus_bleu(hyps, refs).value, kCorpusGolden, 1e-9);
  EXPECT_NEAR(corpus_bleu(std::span(hyps).first(5), std::span(refs).first(5)).value, kCorpusFirstFiveGolden,
              1e-9);
}

TEST(CorpusBleu, PerfectAndSinglePair) {
  const auto refs = tokenized_lines("bleu_ref.txt");
  EXPECT_DOUBLE_EQ(corpus_bleu(refs, refs).value, 100.0);
  const std::vector<TokenSeq> h = {tokenize_13a("the quick brown fox jumps over the dog")};
  const std::vector<TokenSeq> r = {tokenize_13a("the quick brown fox jumped over the lazy dog")};
  EXPECT_NEAR(corpus_bleu(h, r).value, sentence_bleu(h[0], r[0]).value, 1e-9);
}

TEST(CorpusBleu, ZeroOrderWithoutEffectiveOrder) {
  const std::vector<TokenSeq> h = {{"the", "cat"}};
  const std::vector<TokenSeq> r = {{"the", "cat", "sat"}};
  EXPECT_EQ(corpus_bleu(h, r).value, 0.0);
}

TEST(CorpusBleu, LengthMismatch) {
  const std::vector<TokenSeq> h = {{"a"}, {"b"}};
  const std::vector<TokenSeq> r = {{"a"}};
  try {
    corpus_bleu(h, r);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "parallel length mismatch");
  }
}

TEST(Pearson, Examples) {
  const std::vector<double> x = {1, 2, 3};
  EXPECT_NEAR(pearson(x, std::vector<double>{2, 4, 6}).r, 1.0, 1e-12);
  EXPECT_NEAR(pearson(x, std::vector<double>{6, 4, 2}).r, -1.0, 1e-12);
  const PearsonResult p = pearson(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 3, 2, 4});
  EXPECT_NEAR(p.r, 0.8, 1e-12);
  EXPECT_EQ(p.n, 4u);
}

TEST(Pearson, AffineInvariance) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(10), y(10);
    for (auto& v : x) v = u(rng);
    const double a = u(rng);
    const double b = u(rng);
    if (std::abs(a) < 1e-3) continue;
    for (int i = 0; i < 10; ++i) y[i] = a * x[i] + b;
    EXPECT_NEAR(pearson(x, y).r, a > 0 ? 1.0 : -1.0, 1e-9);
  }
}

TEST(Pearson, Degenerate) {
  try {
    pearson(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "degenerate sample");
  }
  EXPECT_THROW(pearson(std::vector<double>{1}, std::vector<double>{1}), Error);
}

TEST(Utf8, ReplacesInvalidBytes) {
  const std::u32string cps = decode_utf8("a\xff\xe1\x8e");
  EXPECT_EQ(cps, (std::u32string{U'a', 0xFFFD, 0xFFFD, 0xFFFD}));
  EXPECT_EQ(codepoint_length("ᏣᎳᎩ"), 3u);
  EXPECT_EQ(encode_utf8(decode_utf8("ᏣᎳᎩ x")), "ᏣᎳᎩ x");
}
