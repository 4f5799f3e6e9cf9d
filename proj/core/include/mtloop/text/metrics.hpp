#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mtloop::text {

// Surface tokens, case preserved, none containing whitespace.
using TokenSeq = std::vector<std::string>;

// mteval-v13a tokenization as used by sacreBLEU 1.5 (no case folding).
TokenSeq tokenize_13a(std::string_view line);

std::string join(const TokenSeq& tokens, std::string_view sep = " ");

inline constexpr int kBleuMaxOrder = 4;

struct BleuScore {
  double value = 0.0;                           // [0, 100]
  std::array<double, kBleuMaxOrder> precisions{};  // [0, 1], smoothed where applied
  double brevity_penalty = 1.0;
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;
  // Orders entering the geometric mean. Sentence-level scoring stops at the
  // first order with no hypothesis n-grams; corpus-level always uses 4.
  int effective_order = kBleuMaxOrder;
};

// Sufficient statistics of one segment against its references.
struct BleuStats {
  std::array<std::size_t, kBleuMaxOrder> correct{};
  std::array<std::size_t, kBleuMaxOrder> total{};
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;

  BleuStats& operator+=(const BleuStats& other);
};

BleuStats bleu_stats(const TokenSeq& hyp, std::span<const TokenSeq> refs);

// Exponential ("exp") smoothing: the k-th order with zero matches gets
// precision 1 / (2^k * total).
BleuScore bleu_from_stats(const BleuStats& stats, bool effective_order);

// Smoothed sentence BLEU with effective order; throws if refs is empty.
BleuScore sentence_bleu(const TokenSeq& hyp, std::span<const TokenSeq> refs);
BleuScore sentence_bleu(const TokenSeq& hyp, const TokenSeq& ref);

// Corpus BLEU over aggregated statistics, one reference per hypothesis.
BleuScore corpus_bleu(std::span<const TokenSeq> hyps, std::span<const TokenSeq> refs);
// Multi-reference variant: refs[r][i] is the r-th reference of segment i.
BleuScore corpus_bleu(std::span<const TokenSeq> hyps,
                      std::span<const std::vector<TokenSeq>> ref_streams);

struct PearsonResult {
  double r = 0.0;
  std::size_t n = 0;
};

// Product-moment correlation. Throws on length mismatch, n < 2 or zero
// variance ("degenerate sample").
PearsonResult pearson(std::span<const double> xs, std::span<const double> ys);

}  // namespace mtloop::text
