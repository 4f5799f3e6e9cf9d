#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "mtloop/smt/lm.hpp"

using namespace mtloop;
using namespace mtloop::smt;

namespace {

// Sum of P(w | h) over the whole predictable vocabulary, for every history
// drawn from (vocabulary minus </s>) plus <s> and an unseen word.
double worst_normalization_error(const NGramLM& lm) {
  std::vector<std::string> vocab = lm.vocabulary();
  std::vector<std::string> contexts = {std::string(kBos), "never-seen"};
  for (const auto& w : vocab)
    if (w != kEos) contexts.push_back(w);
  double worst = 0.0;
  for (const auto& h1 : contexts)
    for (const auto& h2 : contexts) {
      if (h2 == kBos && h1 != kBos) continue;
      for (const std::vector<std::string>& history :
           {std::vector<std::string>{}, std::vector<std::string>{h2}, std::vector<std::string>{h1, h2}}) {
        double z = 0.0;
        for (const auto& w : vocab) z += std::exp(lm.log_prob(history, w));
        worst = std::max(worst, std::abs(z - 1.0));
      }
    }
  return worst;
}

}  // namespace

TEST(NGramLM, SingleSentenceEnumeration) {
  const NGramLM lm = NGramLM::train({{"a", "a", "a"}});
  const auto vocab = lm.vocabulary();
  EXPECT_EQ(vocab.size(), 3u);  // a, </s>, <unk>
  const std::vector<std::string> history = {"a", "a"};
  double z = 0.0;
  for (const auto& w : vocab) z += std::exp(lm.log_prob(history, w));
  EXPECT_NEAR(z, 1.0, 1e-9);
  EXPECT_LT(lm.log_prob(history, "a"), 0.0);
  EXPECT_GT(lm.log_prob(history, "a"), lm.log_prob(history, "zzz"));
}

TEST(NGramLM, HandComputedKneserNey) {
  // Corpus "<s> a a a </s>" with D = 0.75 and a uniform base of 1/3 over
  // {a, </s>, <unk>}. Lower orders use continuation counts:
  //   unigrams: N(. a) = 2 (<s>, a), N(. </s>) = 1
  //     P1(a) = (2 - .75)/3 + (.75 * 2/3)(1/3)
  //   bigrams in context a: N(. a a) = 2 (<s>, a), N(. a </s>) = 1
  //     P2(a|a) = (2 - .75)/3 + (.75 * 2/3) P1(a)
  //   trigrams keep raw counts: c(a a a) = 1, c(a a </s>) = 1
  //     P3(a|a a) = (1 - .75)/2 + (.75 * 2/2) P2(a|a)
  const double p1 = (2 - 0.75) / 3 + (0.75 * 2 / 3) * (1.0 / 3);
  const double p2 = (2 - 0.75) / 3 + (0.75 * 2 / 3) * p1;
  const double p3 = (1 - 0.75) / 2 + (0.75 * 2 / 2) * p2;
  const NGramLM lm = NGramLM::train({{"a", "a", "a"}});
  const std::vector<std::string> h1 = {};
  const std::vector<std::string> h2 = {"a"};
  const std::vector<std::string> h3 = {"a", "a"};
  EXPECT_NEAR(std::exp(lm.log_prob(h1, "a")), p1, 1e-12);
  EXPECT_NEAR(std::exp(lm.log_prob(h2, "a")), p2, 1e-12);
  EXPECT_NEAR(std::exp(lm.log_prob(h3, "a")), p3, 1e-12);
}

TEST(NGramLM, NormalizedOnRandomCorpora) {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const int vsize = 3 + rng() % 10;
    std::vector<TokenSeq> corpus(5 + rng() % 20);
    for (auto& s : corpus) {
      const int len = 1 + rng() % 8;
      for (int i = 0; i < len; ++i) s.push_back("w" + std::to_string(rng() % vsize));
    }
    const NGramLM lm = NGramLM::train(corpus);
    EXPECT_LE(worst_normalization_error(lm), 1e-4) << "trial " << trial;
  }
}

TEST(NGramLM, NormalizedOnFiftyWordVocabulary) {
  std::mt19937 rng(99);
  std::vector<TokenSeq> corpus(120);
  for (auto& s : corpus) {
    const int len = 2 + rng() % 10;
    for (int i = 0; i < len; ++i) s.push_back("v" + std::to_string(rng() % 48));
  }
  const NGramLM lm = NGramLM::train(corpus);
  EXPECT_LE(lm.vocabulary().size(), 50u);
  EXPECT_LE(worst_normalization_error(lm), 1e-4);
}

TEST(NGramLM, UnknownContextBacksOffToUnigram) {
  const NGramLM lm = NGramLM::train({{"a", "b"}, {"b", "a", "c"}});
  const std::vector<std::string> unknown = {"zz", "yy"};
  const std::vector<std::string> none = {};
  for (const auto& w : lm.vocabulary()) {
    EXPECT_NEAR(lm.log_prob(unknown, w), lm.log_prob(none, w), 1e-12) << w;
  }
}

TEST(NGramLM, EmptySequence) {
  const NGramLM lm = NGramLM::train({{"a", "b"}});
  EXPECT_EQ(lm.sentence_log_prob({}), 0.0);
}

TEST(NGramLM, SentenceLogProbIsChainRule) {
  const NGramLM lm = NGramLM::train({{"a", "b", "c"}, {"b", "c", "a"}, {"c"}});
  const TokenSeq s = {"a", "c", "q"};
  std::vector<std::string> ctx = {std::string(kBos)};
  double total = 0;
  for (const auto& w : s) {
    total += lm.log_prob(ctx, w);
    ctx.push_back(w);
  }
  total += lm.log_prob(ctx, kEos);
  EXPECT_NEAR(lm.sentence_log_prob(s), total, 1e-12);
}

TEST(NGramLM, ArpaRoundTripIsExact) {
  const NGramLM lm = NGramLM::train({{"ᎣᏏᏲ", "ᏙᎯᏧ"}, {"ᏙᎯᏧ", "ᎣᏏᏲ", "ᏙᎯᏧ"}, {"ᏩᏙ"}});
  const auto path = std::filesystem::temp_directory_path() / "mtloop_lm.arpa";
  lm.save_arpa(path);
  const NGramLM loaded = NGramLM::load_arpa(path);
  EXPECT_EQ(loaded.order(), 3);
  for (const auto& s : std::vector<TokenSeq>{{"ᎣᏏᏲ"}, {"ᏩᏙ", "ᏙᎯᏧ", "x"}}) {
    EXPECT_NEAR(loaded.sentence_log_prob(s), lm.sentence_log_prob(s), 1e-9);
  }
  std::filesystem::remove(path);
}
