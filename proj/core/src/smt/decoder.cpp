#include "mtloop/smt/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "mtloop/error.hpp"

namespace mtloop::smt {

std::array<double, SmtWeights::kCount> SmtWeights::to_array() const {
  return {distortion,           lm,
          lexical_reordering,   phrase_penalty,
          translation_model[0], translation_model[1],
          translation_model[2], translation_model[3],
          word_penalty};
}

SmtWeights SmtWeights::from_array(const std::array<double, kCount>& v) {
  SmtWeights w;
  w.distortion = v[0];
  w.lm = v[1];
  w.lexical_reordering = v[2];
  w.phrase_penalty = v[3];
  w.translation_model = {v[4], v[5], v[6], v[7]};
  w.word_penalty = v[8];
  return w;
}

std::string_view SmtWeights::name(std::size_t index) {
  static constexpr std::array<std::string_view, kCount> kNames = {
      "distortion", "lm",  "lexical_reordering", "phrase_penalty", "tm0",
      "tm1",        "tm2", "tm3",                "word_penalty"};
  return kNames.at(index);
}

void SmtWeights::validate() const {
  bool any_nonzero = false;
  for (double v : to_array()) {
    if (!std::isfinite(v)) throw Error("SMT weights must be finite");
    any_nonzero = any_nonzero || v != 0.0;
  }
  if (!any_nonzero) throw Error("SMT weights must not all be zero");
}

ComponentScores& ComponentScores::operator+=(const ComponentScores& o) {
  distortion += o.distortion;
  lm += o.lm;
  lexical_reordering += o.lexical_reordering;
  phrase_penalty += o.phrase_penalty;
  translation_model += o.translation_model;
  word_penalty += o.word_penalty;
  for (int k = 0; k < 4; ++k) translation_model_raw[k] += o.translation_model_raw[k];
  return *this;
}

double weighted_total(const ComponentScores& c, const SmtWeights& w) {
  return w.distortion * c.distortion + w.lm * c.lm + w.lexical_reordering * c.lexical_reordering +
         w.phrase_penalty * c.phrase_penalty + c.translation_model + w.word_penalty * c.word_penalty;
}

namespace {

struct Option {
  Span source;
  const TokenSeq* target = nullptr;
  const Alignment* links = nullptr;
  ReorderingProbs reordering;
  ComponentScores fixed;  // translation model, phrase and word penalty
  double estimate = 0.0;  // context-free score used for future costs
};

struct Node {
  int parent = -1;
  const Option* option = nullptr;
  std::vector<bool> coverage;
  int covered = 0;
  Span previous{-1, 0};
  std::vector<std::string> lm_state;
  ComponentScores scores;
  double score = 0.0;
  double future = 0.0;
};

class StackDecoder {
 public:
  StackDecoder(const TokenSeq& source, const PhraseTable& table, const NGramLM& lm,
               const SmtWeights& weights, const DecoderOptions& options)
      : source_(source), table_(table), lm_(lm), weights_(weights), options_(options) {
    n_ = static_cast<int>(source.size());
    build_options();
    build_future_costs();
  }

  SmtHypothesis run() {
    const int best = search(options_.distortion_limit);
    if (best >= 0) return reconstruct(best);
    // The distortion limit stranded every hypothesis; retry without it.
    return reconstruct(search(kUnlimitedDistortion));
  }

 private:
  void build_options() {
    pass_through_targets_.reserve(n_);
    options_by_start_.assign(n_, {});
    const int max_len = table_.max_phrase_length();
    for (int b = 0; b < n_; ++b) {
      for (int e = b + 1; e <= std::min(n_, b + max_len); ++e) {
        const TokenSeq phrase(source_.begin() + b, source_.begin() + e);
        const auto* entries = table_.find(phrase);
        if (entries == nullptr) continue;
        std::vector<const PhraseEntry*> ranked;
        for (const auto& entry : *entries) ranked.push_back(&entry);
        std::sort(ranked.begin(), ranked.end(), [](const PhraseEntry* a, const PhraseEntry* b) {
          if (a->scores[0] != b->scores[0]) return a->scores[0] > b->scores[0];
          return a->target < b->target;
        });
        if (options_.table_limit > 0 && static_cast<int>(ranked.size()) > options_.table_limit) {
          ranked.resize(options_.table_limit);
        }
        for (const PhraseEntry* entry : ranked) {
          add_option({b, e}, &entry->target, &entry->links, entry->reordering, entry->scores);
        }
      }
      if (table_.find(std::string_view(source_[b])) == nullptr) {
        pass_through_targets_.push_back({source_[b]});
        add_option({b, b + 1}, &pass_through_targets_.back(), &kPassThroughLinks, ReorderingProbs{},
                   {kPassThroughScore, kPassThroughScore, kPassThroughScore, kPassThroughScore});
      }
    }
  }

  void add_option(Span span, const TokenSeq* target, const Alignment* links, ReorderingProbs reordering,
                  const PhraseScores& scores) {
    Option opt;
    opt.source = span;
    opt.target = target;
    opt.links = links;
    opt.reordering = reordering;
    for (int k = 0; k < 4; ++k) {
      const double log_score = std::log(scores[k]);
      opt.fixed.translation_model_raw[k] = log_score;
      opt.fixed.translation_model += weights_.translation_model[k] * log_score;
    }
    opt.fixed.phrase_penalty = -1.0;
    opt.fixed.word_penalty = -static_cast<double>(target->size());
    opt.estimate = opt.fixed.translation_model + weights_.phrase_penalty * opt.fixed.phrase_penalty +
                   weights_.word_penalty * opt.fixed.word_penalty +
                   weights_.lm * lm_.score_continuation({}, *target);
    options_by_start_[span.begin].push_back(std::move(opt));
  }

  void build_future_costs() {
    constexpr double kNone = -std::numeric_limits<double>::infinity();
    future_.assign(static_cast<std::size_t>(n_ + 1) * (n_ + 1), kNone);
    for (int b = 0; b < n_; ++b) {
      for (const Option& opt : options_by_start_[b]) {
        double& slot = future_at(opt.source.begin, opt.source.end);
        slot = std::max(slot, opt.estimate);
      }
    }
    for (int len = 2; len <= n_; ++len) {
      for (int b = 0; b + len <= n_; ++b) {
        const int e = b + len;
        double& slot = future_at(b, e);
        for (int k = b + 1; k < e; ++k) slot = std::max(slot, future_at(b, k) + future_at(k, e));
      }
    }
  }

  double& future_at(int b, int e) { return future_[static_cast<std::size_t>(b) * (n_ + 1) + e]; }

  double future_cost(const std::vector<bool>& coverage) {
    double total = 0.0;
    int b = 0;
    while (b < n_) {
      if (coverage[b]) {
        ++b;
        continue;
      }
      int e = b;
      while (e < n_ && !coverage[e]) ++e;
      total += future_at(b, e);
      b = e;
    }
    return total;
  }

  TokenSeq target_of(int index) const {
    std::vector<const TokenSeq*> parts;
    for (int i = index; i >= 0 && nodes_[i].option != nullptr; i = nodes_[i].parent) {
      parts.push_back(nodes_[i].option->target);
    }
    TokenSeq out;
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) out.insert(out.end(), (*it)->begin(), (*it)->end());
    return out;
  }

  // Strict "a ranks before b": higher value first, then lexicographically
  // smaller target. Used for sorting, so values compare exactly.
  bool ranks_before(int a, int b, double value_a, double value_b) const {
    if (value_a != value_b) return value_a > value_b;
    return target_of(a) < target_of(b);
  }

  // Pairwise choice for recombination and the final argmax. Scores that
  // differ only by summation-order rounding count as ties.
  bool preferred(int a, int b) const {
    const double va = nodes_[a].score;
    const double vb = nodes_[b].score;
    if (std::abs(va - vb) > kTieTolerance) return va > vb;
    return target_of(a) < target_of(b);
  }

  static constexpr double kTieTolerance = 1e-9;

  std::string state_key(const Node& node) const {
    std::string key;
    key.reserve(n_ + 32);
    for (bool c : node.coverage) key.push_back(c ? '1' : '0');
    key.push_back('|');
    key += std::to_string(node.previous.begin);
    key.push_back(',');
    key += std::to_string(node.previous.end);
    for (const auto& w : node.lm_state) {
      key.push_back('\x1f');
      key += w;
    }
    return key;
  }

  int search(int distortion_limit) {
    nodes_.clear();
    std::vector<std::vector<int>> stacks(n_ + 1);
    // State key -> position in the stack holding the best node for it.
    std::vector<std::unordered_map<std::string, int>> recombination(n_ + 1);

    Node root;
    root.coverage.assign(n_, false);
    root.lm_state = {std::string(kBos)};
    root.future = future_cost(root.coverage);
    nodes_.push_back(std::move(root));
    stacks[0].push_back(0);

    const std::size_t history = static_cast<std::size_t>(std::max(lm_.order() - 1, 0));

    for (int k = 0; k < n_; ++k) {
      prune(stacks[k]);
      for (int index : stacks[k]) {
        // Copy: nodes_ may reallocate while expanding.
        const Node parent = nodes_[index];
        int lo = 0;
        int hi = n_ - 1;
        if (distortion_limit >= 0) {
          lo = std::max(0, parent.previous.end - distortion_limit);
          hi = std::min(n_ - 1, parent.previous.end + distortion_limit);
        }
        for (int start = lo; start <= hi; ++start) {
          if (parent.coverage[start]) continue;
          for (const Option& opt : options_by_start_[start]) {
            bool free = true;
            for (int i = opt.source.begin; i < opt.source.end && free; ++i) free = !parent.coverage[i];
            if (!free) continue;

            Node child;
            child.parent = index;
            child.option = &opt;
            child.coverage = parent.coverage;
            for (int i = opt.source.begin; i < opt.source.end; ++i) child.coverage[i] = true;
            child.covered = parent.covered + opt.source.size();
            child.previous = opt.source;
            child.scores = parent.scores;
            child.scores += opt.fixed;
            child.scores.distortion -= std::abs(opt.source.begin - parent.previous.end);
            child.scores.lexical_reordering +=
                std::log(opt.reordering[orientation_between(parent.previous, opt.source)]);

            std::vector<std::string> context = parent.lm_state;
            for (const auto& w : *opt.target) {
              child.scores.lm += lm_.log_prob(context, w);
              context.push_back(w);
            }
            if (child.covered == n_) child.scores.lm += lm_.log_prob(context, kEos);
            if (context.size() > history) context.erase(context.begin(), context.end() - history);
            child.lm_state = std::move(context);

            child.score = weighted_total(child.scores, weights_);
            child.future = child.covered == n_ ? 0.0 : future_cost(child.coverage);

            const std::string key = state_key(child);
            const int slot = child.covered;
            const auto found = recombination[slot].find(key);
            nodes_.push_back(std::move(child));
            const int child_index = static_cast<int>(nodes_.size()) - 1;
            if (found == recombination[slot].end()) {
              recombination[slot].emplace(key, static_cast<int>(stacks[slot].size()));
              stacks[slot].push_back(child_index);
            } else {
              int& incumbent = stacks[slot][found->second];
              if (preferred(child_index, incumbent)) {
                incumbent = child_index;
              }
            }
          }
        }
      }
    }

    int best = -1;
    for (int index : stacks[n_]) {
      if (best < 0 || preferred(index, best)) best = index;
    }
    return best;
  }

  void prune(std::vector<int>& stack) {
    if (static_cast<int>(stack.size()) <= options_.beam) return;
    auto by_rank = [this](int a, int b) {
      return ranks_before(a, b, nodes_[a].score + nodes_[a].future, nodes_[b].score + nodes_[b].future);
    };
    std::partial_sort(stack.begin(), stack.begin() + options_.beam, stack.end(), by_rank);
    stack.resize(options_.beam);
  }

  SmtHypothesis reconstruct(int index) const {
    if (index < 0) throw Error("decode: no complete hypothesis");
    std::vector<const Option*> chain;
    for (int i = index; nodes_[i].option != nullptr; i = nodes_[i].parent) chain.push_back(nodes_[i].option);
    std::reverse(chain.begin(), chain.end());

    SmtHypothesis hyp;
    hyp.components = nodes_[index].scores;
    hyp.total_score = weighted_total(hyp.components, weights_);
    for (const Option* opt : chain) {
      const int t_begin = static_cast<int>(hyp.target.size());
      hyp.target.insert(hyp.target.end(), opt->target->begin(), opt->target->end());
      const int t_end = static_cast<int>(hyp.target.size());
      hyp.segmentation.push_back({opt->source, {t_begin, t_end}});
      if (!opt->links->empty()) {
        for (const auto& [i, j] : *opt->links) hyp.hard_alignment.emplace_back(opt->source.begin + i, t_begin + j);
      } else {
        // No internal alignment stored: spread target words over the span.
        const int slen = opt->source.size();
        const int tlen = t_end - t_begin;
        for (int j = 0; j < tlen; ++j) {
          hyp.hard_alignment.emplace_back(opt->source.begin + (j * slen) / tlen, t_begin + j);
        }
      }
    }
    std::sort(hyp.hard_alignment.begin(), hyp.hard_alignment.end());
    return hyp;
  }

  static const Alignment kPassThroughLinks;

  const TokenSeq& source_;
  const PhraseTable& table_;
  const NGramLM& lm_;
  const SmtWeights& weights_;
  DecoderOptions options_;
  int n_ = 0;
  std::vector<TokenSeq> pass_through_targets_;
  std::vector<std::vector<Option>> options_by_start_;
  std::vector<double> future_;
  std::vector<Node> nodes_;
};

const Alignment StackDecoder::kPassThroughLinks = {{0, 0}};

}  // namespace

SmtHypothesis decode(const TokenSeq& source, const PhraseTable& table, const NGramLM& lm,
                     const SmtWeights& weights, const DecoderOptions& options) {
  if (source.empty()) throw Error("decode: empty source");
  if (options.beam < 1) throw Error("decode: beam must be >= 1");
  StackDecoder decoder(source, table, lm, weights, options);
  return decoder.run();
}

}  // namespace mtloop::smt
