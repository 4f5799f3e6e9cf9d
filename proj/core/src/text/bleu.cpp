#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>

#include "mtloop/error.hpp"
#include "mtloop/text/metrics.hpp"

namespace mtloop::text {
namespace {

using NgramCounts = std::unordered_map<std::string, std::size_t>;

// Keys are space-joined n-grams prefixed by the order; tokens never contain
// whitespace so the key is unambiguous.
NgramCounts count_ngrams(const TokenSeq& tokens) {
  NgramCounts counts;
  for (int n = 1; n <= kBleuMaxOrder; ++n) {
    if (tokens.size() < static_cast<std::size_t>(n)) break;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      std::string key = std::to_string(n);
      for (int k = 0; k < n; ++k) {
        key.push_back(' ');
        key.append(tokens[i + k]);
      }
      ++counts[key];
    }
  }
  return counts;
}

int order_of(const std::string& key) { return key[0] - '0'; }

}  // namespace

BleuStats& BleuStats::operator+=(const BleuStats& other) {
  for (int n = 0; n < kBleuMaxOrder; ++n) {
    correct[n] += other.correct[n];
    total[n] += other.total[n];
  }
  hyp_len += other.hyp_len;
  ref_len += other.ref_len;
  return *this;
}

BleuStats bleu_stats(const TokenSeq& hyp, std::span<const TokenSeq> refs) {
  if (refs.empty()) throw Error("BLEU requires at least one reference");
  BleuStats stats;
  stats.hyp_len = hyp.size();

  NgramCounts max_ref;
  std::size_t closest_diff = std::numeric_limits<std::size_t>::max();
  std::size_t closest_len = 0;
  for (const TokenSeq& ref : refs) {
    const std::size_t len = ref.size();
    const std::size_t diff = len > hyp.size() ? len - hyp.size() : hyp.size() - len;
    if (diff < closest_diff || (diff == closest_diff && len < closest_len)) {
      closest_diff = diff;
      closest_len = len;
    }
    for (const auto& [gram, count] : count_ngrams(ref)) {
      auto& slot = max_ref[gram];
      slot = std::max(slot, count);
    }
  }
  stats.ref_len = closest_len;

  for (const auto& [gram, count] : count_ngrams(hyp)) {
    const int n = order_of(gram);
    const auto it = max_ref.find(gram);
    const std::size_t ref_count = it == max_ref.end() ? 0 : it->second;
    stats.correct[n - 1] += std::min(count, ref_count);
    stats.total[n - 1] += count;
  }
  return stats;
}

BleuScore bleu_from_stats(const BleuStats& stats, bool effective_order) {
  BleuScore score;
  score.hyp_len = stats.hyp_len;
  score.ref_len = stats.ref_len;

  double smooth = 1.0;
  int order = kBleuMaxOrder;
  for (int n = 1; n <= kBleuMaxOrder; ++n) {
    const std::size_t total = stats.total[n - 1];
    if (total == 0) break;
    if (effective_order) order = n;
    const std::size_t correct = stats.correct[n - 1];
    if (correct == 0) {
      smooth *= 2.0;
      score.precisions[n - 1] = 1.0 / (smooth * static_cast<double>(total));
    } else {
      score.precisions[n - 1] = static_cast<double>(correct) / static_cast<double>(total);
    }
  }
  score.effective_order = order;

  if (stats.hyp_len < stats.ref_len) {
    score.brevity_penalty =
        stats.hyp_len > 0
            ? std::exp(1.0 - static_cast<double>(stats.ref_len) / static_cast<double>(stats.hyp_len))
            : 0.0;
  } else {
    score.brevity_penalty = 1.0;
  }

  double log_sum = 0.0;
  for (int n = 0; n < order; ++n) {
    if (score.precisions[n] <= 0.0) {
      score.value = 0.0;
      return score;
    }
    log_sum += std::log(score.precisions[n]);
  }
  score.value = std::clamp(100.0 * score.brevity_penalty * std::exp(log_sum / order), 0.0, 100.0);
  return score;
}

BleuScore sentence_bleu(const TokenSeq& hyp, std::span<const TokenSeq> refs) {
  return bleu_from_stats(bleu_stats(hyp, refs), /*effective_order=*/true);
}

BleuScore sentence_bleu(const TokenSeq& hyp, const TokenSeq& ref) {
  return sentence_bleu(hyp, std::span<const TokenSeq>(&ref, 1));
}

BleuScore corpus_bleu(std::span<const TokenSeq> hyps, std::span<const TokenSeq> refs) {
  if (hyps.size() != refs.size()) throw Error("parallel length mismatch");
  if (hyps.empty()) throw Error("corpus BLEU requires at least one segment");
  BleuStats total;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    total += bleu_stats(hyps[i], refs.subspan(i, 1));
  }
  return bleu_from_stats(total, /*effective_order=*/false);
}

BleuScore corpus_bleu(std::span<const TokenSeq> hyps,
                      std::span<const std::vector<TokenSeq>> ref_streams) {
  if (ref_streams.empty()) throw Error("corpus BLEU requires at least one reference stream");
  for (const auto& stream : ref_streams) {
    if (stream.size() != hyps.size()) throw Error("parallel length mismatch");
  }
  if (hyps.empty()) throw Error("corpus BLEU requires at least one segment");
  BleuStats total;
  std::vector<TokenSeq> refs(ref_streams.size());
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    for (std::size_t r = 0; r < ref_streams.size(); ++r) refs[r] = ref_streams[r][i];
    total += bleu_stats(hyps[i], refs);
  }
  return bleu_from_stats(total, /*effective_order=*/false);
}

}  // namespace mtloop::text
