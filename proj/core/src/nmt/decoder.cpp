#include "mtloop/nmt/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mtloop/error.hpp"

namespace mtloop::nmt {

double StepDistribution::prob(std::string_view token) const {
  const auto it = probabilities.find(token);
  return it == probabilities.end() ? 0.0 : it->second;
}

const std::vector<double>& StepDistribution::row_for(std::string_view token) const {
  const auto it = token_attention.find(token);
  return it == token_attention.end() ? attention_row : it->second;
}

double NmtHypothesis::log_prob() const {
  return std::accumulate(token_logprobs.begin(), token_logprobs.end(), 0.0);
}

const Matrix& soft_alignment(const NmtHypothesis& h) { return h.attention; }

namespace {

struct Candidate {
  NmtHypothesis hyp;
  double score = 0.0;
  bool finished = false;
};

bool ranks_before(const Candidate& a, const Candidate& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.hyp.target != b.hyp.target) return a.hyp.target < b.hyp.target;
  return a.finished && !b.finished;
}

}  // namespace

NmtHypothesis beam_search(const Decoder& decoder, const TokenSeq& source, const BeamOptions& options) {
  if (options.beam < 1) throw Error("beam_search: beam must be >= 1");
  if (options.max_len < 0) throw Error("beam_search: max_len must be >= 1");
  const int max_len = options.max_len == 0 ? 2 * static_cast<int>(source.size()) + 5 : options.max_len;
  const std::string& eos = decoder.eos();

  std::vector<Candidate> live(1);
  std::vector<Candidate> finished;

  for (int t = 0; t < max_len && !live.empty(); ++t) {
    // On the last step only an end of sequence can still complete a
    // hypothesis; other continuations are kept only as truncation fallbacks.
    const bool last = t + 1 == max_len;
    std::vector<Candidate> expanded;
    for (const Candidate& c : live) {
      const StepDistribution dist = decoder.step(source, c.hyp.target);
      for (const auto& [token, p] : dist.probabilities) {
        if (!(p > 0.0)) continue;
        const double lp = std::log(p);
        Candidate next;
        next.hyp.target = c.hyp.target;
        next.hyp.token_logprobs = c.hyp.token_logprobs;
        next.hyp.attention = c.hyp.attention;
        next.score = c.score + lp;
        if (token == eos) {
          next.finished = true;
          next.hyp.eos_logprob = lp;
        } else {
          next.hyp.target.push_back(token);
          next.hyp.token_logprobs.push_back(lp);
          next.hyp.attention.push_back(dist.row_for(token));
        }
        expanded.push_back(std::move(next));
      }
    }
    // Finished candidates are kept only if they rank within the beam among
    // all expansions of this step (so beam 1 is exactly greedy decoding);
    // the live beam is refilled to full width from unfinished candidates.
    std::sort(expanded.begin(), expanded.end(), ranks_before);
    live.clear();
    for (std::size_t rank = 0; rank < expanded.size(); ++rank) {
      Candidate& c = expanded[rank];
      if (c.finished) {
        if (last || rank < static_cast<std::size_t>(options.beam)) finished.push_back(std::move(c));
      } else if (live.size() < static_cast<std::size_t>(options.beam)) {
        live.push_back(std::move(c));
      }
    }
    if (finished.empty() || live.empty()) continue;
    const auto best_finished = std::min_element(finished.begin(), finished.end(), ranks_before);
    // Log-probabilities are non-positive: live scores can only fall.
    if (best_finished->score > live.front().score) break;
  }

  if (!finished.empty()) {
    return std::min_element(finished.begin(), finished.end(), ranks_before)->hyp;
  }
  if (live.empty()) throw Error("beam_search: decoder produced no tokens");
  NmtHypothesis out = std::min_element(live.begin(), live.end(), ranks_before)->hyp;
  out.truncated = true;
  out.eos_logprob = 0.0;
  return out;
}

namespace {

class EnsembleDecoder final : public Decoder {
 public:
  explicit EnsembleDecoder(std::vector<std::shared_ptr<const Decoder>> members) : members_(std::move(members)) {
    vocabulary_ = members_.front()->vocabulary();
    for (const auto& m : members_) {
      if (m->eos() != members_.front()->eos()) throw Error("ensemble: members disagree on end-of-sequence");
      if (m->vocabulary() != vocabulary_) throw Error("ensemble: vocabulary mismatch");
    }
  }

  StepDistribution step(const TokenSeq& source, const TokenSeq& prefix) const override {
    std::vector<StepDistribution> parts;
    parts.reserve(members_.size());
    for (const auto& m : members_) parts.push_back(m->step(source, prefix));
    const double n = static_cast<double>(parts.size());

    StepDistribution out;
    for (const auto& d : parts)
      for (const auto& [token, p] : d.probabilities) out.probabilities[token] += p / n;
    double z = 0.0;
    for (const auto& [token, p] : out.probabilities) z += p;
    for (auto& [token, p] : out.probabilities) p /= z;

    out.attention_row = mean_rows([](const StepDistribution& d) -> const std::vector<double>& {
      return d.attention_row;
    }, parts);
    for (const auto& d : parts) {
      for (const auto& [token, row] : d.token_attention) {
        if (out.token_attention.count(token)) continue;
        out.token_attention[token] = mean_rows(
            [&token](const StepDistribution& s) -> const std::vector<double>& { return s.row_for(token); }, parts);
      }
    }
    return out;
  }

  const std::string& eos() const override { return members_.front()->eos(); }
  std::vector<std::string> vocabulary() const override { return vocabulary_; }

 private:
  template <typename Get>
  static std::vector<double> mean_rows(Get get, const std::vector<StepDistribution>& parts) {
    std::vector<double> row(get(parts.front()).size(), 0.0);
    for (const auto& d : parts) {
      const auto& r = get(d);
      if (r.size() != row.size()) throw Error("ensemble: attention length mismatch");
      for (std::size_t j = 0; j < row.size(); ++j) row[j] += r[j] / static_cast<double>(parts.size());
    }
    return row;
  }

  std::vector<std::shared_ptr<const Decoder>> members_;
  std::vector<std::string> vocabulary_;
};

}  // namespace

std::shared_ptr<const Decoder> ensemble(std::vector<std::shared_ptr<const Decoder>> members) {
  if (members.empty()) throw Error("ensemble: no members");
  for (const auto& m : members)
    if (!m) throw Error("ensemble: null member");
  if (members.size() == 1) return members.front();
  return std::make_shared<EnsembleDecoder>(std::move(members));
}

}  // namespace mtloop::nmt
