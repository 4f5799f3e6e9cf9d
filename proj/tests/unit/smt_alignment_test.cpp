#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "mtloop/error.hpp"
#include "mtloop/smt/lexical.hpp"
#include "mtloop/smt/phrase_table.hpp"

using namespace mtloop;
using namespace mtloop::smt;

namespace {

ParallelCorpus corpus_of(std::initializer_list<std::pair<const char*, const char*>> pairs) {
  ParallelCorpus c;
  for (const auto& [s, t] : pairs) c.pairs.push_back({text::tokenize_13a(s), text::tokenize_13a(t)});
  return c;
}

// All boxes (up to max_len per side) with at least one link inside and no
// link crossing the box boundary.
std::set<std::pair<Span, Span>> consistent_boxes(int slen, int tlen, const Alignment& links, int max_len) {
  std::set<std::pair<Span, Span>> out;
  for (int s1 = 0; s1 < slen; ++s1)
    for (int s2 = s1 + 1; s2 <= std::min(slen, s1 + max_len); ++s2)
      for (int t1 = 0; t1 < tlen; ++t1)
        for (int t2 = t1 + 1; t2 <= std::min(tlen, t1 + max_len); ++t2) {
          bool inside = false;
          bool ok = true;
          for (const auto& [i, j] : links) {
            const bool in_s = i >= s1 && i < s2;
            const bool in_t = j >= t1 && j < t2;
            if (in_s != in_t) ok = false;
            inside = inside || (in_s && in_t);
          }
          if (ok && inside) out.insert({{s1, s2}, {t1, t2}});
        }
  return out;
}

std::set<std::pair<Span, Span>> boxes_of(const std::vector<ExtractedPhrase>& phrases) {
  std::set<std::pair<Span, Span>> out;
  for (const auto& p : phrases) out.insert({p.source, p.target});
  return out;
}

}  // namespace

TEST(TrainLexical, SingleCooccurrence) {
  const LexicalTable t = train_lexical(corpus_of({{"a", "x"}}), 5);
  EXPECT_DOUBLE_EQ(t.prob("x", "a"), 1.0);
}

TEST(TrainLexical, TwoSentenceFixedPoint) {
  const LexicalTable t = train_lexical(corpus_of({{"a", "x"}, {"a b", "x y"}}), 20);
  EXPECT_GT(t.prob("x", "a"), 0.9);
  EXPECT_GT(t.prob("y", "b"), 0.9);
}

TEST(TrainLexical, HandIteratedFirstSteps) {
  // Iteration 1 from uniform t = 1/2: counts c(x|a) = 1 + 1/2, c(y|a) = 1/2,
  // c(x|b) = c(y|b) = 1/2, so t(x|a) = 3/4, t(y|b) = 1/2.
  const auto corpus = corpus_of({{"a", "x"}, {"a b", "x y"}});
  const LexicalTable one = train_lexical(corpus, 1);
  EXPECT_NEAR(one.prob("x", "a"), 0.75, 1e-12);
  EXPECT_NEAR(one.prob("y", "b"), 0.5, 1e-12);
  // Iteration 2: in "a b / x y", x splits 3/4 : 1/2 between a and b, y splits
  // 1/4 : 1/2. c(x|a) = 1 + 3/5, c(y|a) = 1/3, so t(x|a) = (8/5) / (29/15).
  const LexicalTable two = train_lexical(corpus, 2);
  EXPECT_NEAR(two.prob("x", "a"), (8.0 / 5.0) / (8.0 / 5.0 + 1.0 / 3.0), 1e-12);
}

TEST(TrainLexical, RowsNormalizedEveryIteration) {
  const auto corpus = corpus_of({{"ᎣᏏᏲ ᏙᎯᏧ", "hello how are you"},
                                 {"ᏙᎯᏧ", "how are you"},
                                 {"ᏩᏙ", "thank you"},
                                 {"ᎣᏏᏲ", "hello"}});
  for (int it = 1; it <= 10; ++it) {
    EXPECT_LE(train_lexical(corpus, it).max_row_deviation(), 1e-6) << it;
  }
}

TEST(TrainLexical, Preconditions) {
  EXPECT_THROW(train_lexical(corpus_of({{"a", "x"}}), 0), Error);
  EXPECT_THROW(train_lexical(ParallelCorpus{}, 3), Error);
}

TEST(TrainLexical, Deterministic) {
  const auto corpus = corpus_of({{"a b c", "x y z"}, {"b c", "y z"}, {"c a", "z x"}});
  EXPECT_EQ(train_lexical(corpus, 7), train_lexical(corpus, 7));
}

TEST(LexicalTable, SaveLoadRoundTrip) {
  const auto corpus = corpus_of({{"ᎣᏏᏲ ᏙᎯᏧ", "hello how are you"}, {"ᏙᎯᏧ", "how are you"}});
  const LexicalTable t = train_lexical(corpus, 4);
  const auto path = std::filesystem::temp_directory_path() / "mtloop_lex_roundtrip.txt";
  t.save(path);
  EXPECT_EQ(LexicalTable::load(path), t);
  std::filesystem::remove(path);
}

TEST(Align, SingleWord) {
  LexicalTable f, r;
  f.set("a", "x", 1.0);
  r.set("x", "a", 1.0);
  EXPECT_EQ(align({{"a"}, {"x"}}, f, r), (Alignment{{0, 0}}));
}

TEST(Align, DiagonalDominant) {
  LexicalTable f, r;
  const TokenSeq src = {"a", "b", "c", "d"};
  const TokenSeq tgt = {"w", "x", "y", "z"};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      f.set(src[i], tgt[j], i == j ? 0.7 : 0.1);
      r.set(tgt[j], src[i], i == j ? 0.7 : 0.1);
    }
  EXPECT_EQ(align({src, tgt}, f, r), (Alignment{{0, 0}, {1, 1}, {2, 2}, {3, 3}}));
}

TEST(Align, TwoByTwoEnumerationOracle) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  const SentencePair pair{{"a", "b"}, {"x", "y"}};
  for (int trial = 0; trial < 200; ++trial) {
    LexicalTable f, r;
    double ff[2][2], rr[2][2];
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        ff[i][j] = u(rng);
        rr[i][j] = u(rng);
        f.set(pair.source[i], pair.target[j], ff[i][j]);
        r.set(pair.target[j], pair.source[i], rr[i][j]);
      }
    // Every target word links to exactly one source word: 4 candidate sets.
    Alignment best_s2t;
    double best = -1;
    for (int a0 = 0; a0 < 2; ++a0)
      for (int a1 = 0; a1 < 2; ++a1) {
        const double score = ff[a0][0] * ff[a1][1];
        if (score > best) {
          best = score;
          best_s2t = {{a0, 0}, {a1, 1}};
        }
      }
    std::sort(best_s2t.begin(), best_s2t.end());
    Alignment best_t2s;
    best = -1;
    for (int b0 = 0; b0 < 2; ++b0)
      for (int b1 = 0; b1 < 2; ++b1) {
        const double score = rr[0][b0] * rr[1][b1];
        if (score > best) {
          best = score;
          best_t2s = {{0, b0}, {1, b1}};
        }
      }
    EXPECT_EQ(viterbi_source_to_target(pair, f), best_s2t);
    EXPECT_EQ(viterbi_target_to_source(pair, r), best_t2s);

    const Alignment sym = align(pair, f, r);
    std::set<Link> inter, uni(best_s2t.begin(), best_s2t.end());
    uni.insert(best_t2s.begin(), best_t2s.end());
    for (const auto& l : best_s2t)
      if (std::find(best_t2s.begin(), best_t2s.end(), l) != best_t2s.end()) inter.insert(l);
    for (const auto& l : inter) EXPECT_TRUE(std::find(sym.begin(), sym.end(), l) != sym.end());
    for (const auto& l : sym) EXPECT_TRUE(uni.count(l)) << l.first << "-" << l.second;
  }
}

TEST(Symmetrize, GrowDiagAddsNeighbours) {
  // Intersection {(0,0)}; (1,1) is a diagonal neighbour in the union and its
  // row and column are still unaligned.
  const Alignment s2t = {{0, 0}, {1, 1}};
  const Alignment t2s = {{0, 0}, {1, 0}};
  EXPECT_EQ(symmetrize(s2t, t2s, 2, 2), (Alignment{{0, 0}, {1, 0}, {1, 1}}));
}

TEST(ExtractPhrases, Examples) {
  const SentencePair pair{{"a", "b"}, {"x", "y"}};
  const auto diag = extract_phrases(pair, {{0, 0}, {1, 1}});
  EXPECT_EQ(boxes_of(diag), (std::set<std::pair<Span, Span>>{
                                {{0, 1}, {0, 1}}, {{1, 2}, {1, 2}}, {{0, 2}, {0, 2}}}));
  EXPECT_TRUE(extract_phrases(pair, {}).empty());
  const auto crossed = extract_phrases(pair, {{0, 1}, {1, 0}});
  // a-y and b-x are closed boxes on their own; the crossing only forbids the
  // monotone single-word pairs.
  EXPECT_EQ(boxes_of(crossed), (std::set<std::pair<Span, Span>>{
                                   {{0, 1}, {1, 2}}, {{1, 2}, {0, 1}}, {{0, 2}, {0, 2}}}));
}

TEST(ExtractPhrases, MatchesEnumerationOracle) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const int slen = 1 + rng() % 6;
    const int tlen = 1 + rng() % 6;
    SentencePair pair;
    for (int i = 0; i < slen; ++i) pair.source.push_back("s" + std::to_string(i));
    for (int j = 0; j < tlen; ++j) pair.target.push_back("t" + std::to_string(j));
    Alignment links;
    for (int i = 0; i < slen; ++i)
      for (int j = 0; j < tlen; ++j)
        if (rng() % 4 == 0) links.emplace_back(i, j);
    for (int max_len : {2, 4}) {
      EXPECT_EQ(boxes_of(extract_phrases(pair, links, max_len)), consistent_boxes(slen, tlen, links, max_len));
    }
  }
}

TEST(ExtractPhrases, OrientationAndRelativeLinks) {
  const SentencePair pair{{"a", "b"}, {"y", "x"}};
  const auto phrases = extract_phrases(pair, {{0, 1}, {1, 0}});
  ASSERT_FALSE(phrases.empty());
  for (const auto& p : phrases) {
    for (const auto& [i, j] : p.links) {
      EXPECT_GE(i, 0);
      EXPECT_LT(i, p.source.size());
      EXPECT_GE(j, 0);
      EXPECT_LT(j, p.target.size());
    }
  }
  EXPECT_EQ(orientation_between({-1, 0}, {0, 1}), Orientation::Monotone);
  EXPECT_EQ(orientation_between({1, 2}, {0, 1}), Orientation::Swap);
  EXPECT_EQ(orientation_between({-1, 0}, {1, 2}), Orientation::Discontinuous);
}

TEST(PhraseTable, BuildScoresInRangeAndRoundTrip) {
  const auto corpus = corpus_of({{"ᎣᏏᏲ ᏙᎯᏧ", "hello how are you"},
                                 {"ᏙᎯᏧ", "how are you"},
                                 {"ᏩᏙ", "thank you"},
                                 {"ᎣᏏᏲ", "hello"},
                                 {"ᏩᏙ ᎣᏏᏲ", "thank you hello"}});
  const LexicalTable f = train_lexical(corpus, 10);
  const LexicalTable r = train_lexical(corpus.reversed(), 10);
  const PhraseTable table = build_phrase_table(corpus, f, r);
  ASSERT_GT(table.entry_count(), 0u);
  for (const auto& [src, entries] : table.entries()) {
    for (const auto& e : entries) {
      for (double s : e.scores) {
        EXPECT_GT(s, 0.0);
        EXPECT_LE(s, 1.0);
      }
      EXPECT_LE(static_cast<int>(e.target.size()), kDefaultMaxPhraseLength);
      double z = 0;
      for (double p : e.reordering.p) z += p;
      EXPECT_NEAR(z, 1.0, 1e-9);
    }
  }
  const auto dir = std::filesystem::temp_directory_path() / "mtloop_pt_roundtrip";
  std::filesystem::create_directories(dir);
  table.save(dir / "phrase-table");
  table.save_reordering(dir / "reordering-table");
  PhraseTable loaded = PhraseTable::load(dir / "phrase-table");
  loaded.load_reordering(dir / "reordering-table");
  EXPECT_EQ(loaded, table);
  std::filesystem::remove_all(dir);
}

TEST(PhraseTable, RejectsInvalidEntries) {
  PhraseTable table(2);
  EXPECT_THROW(table.add({"a", "b", "c"}, PhraseEntry{{"x"}, {1, 1, 1, 1}, {}, {}}), Error);
  EXPECT_THROW(table.add({"a"}, PhraseEntry{{"x"}, {0, 1, 1, 1}, {}, {}}), Error);
  EXPECT_THROW(table.add({"a"}, PhraseEntry{{"x"}, {1.5, 1, 1, 1}, {}, {}}), Error);
}

TEST(PhraseTable, LoadsThreeFieldLines) {
  const auto path = std::filesystem::temp_directory_path() / "mtloop_pt_3field.txt";
  {
    std::ofstream out(path);
    out << "a b ||| x ||| 0.5 0.25 1 0.125\n";
  }
  const PhraseTable table = PhraseTable::load(path);
  const auto* entries = table.find("a b");
  ASSERT_NE(entries, nullptr);
  EXPECT_EQ(entries->front().target, (TokenSeq{"x"}));
  EXPECT_DOUBLE_EQ(entries->front().scores[3], 0.125);
  std::filesystem::remove(path);
}
