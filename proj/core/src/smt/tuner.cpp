#include "mtloop/smt/tuner.hpp"

#include "mtloop/error.hpp"

namespace mtloop::smt {

std::vector<double> default_tuning_grid() {
  std::vector<double> grid;
  for (int i = -10; i <= 10; ++i) grid.push_back(i / 10.0);
  return grid;
}

double dev_bleu(const ParallelCorpus& dev, const PhraseTable& table, const NGramLM& lm,
                const SmtWeights& weights, const DecoderOptions& options) {
  std::vector<TokenSeq> hyps;
  std::vector<TokenSeq> refs;
  hyps.reserve(dev.size());
  refs.reserve(dev.size());
  for (const auto& pair : dev.pairs) {
    hyps.push_back(decode(pair.source, table, lm, weights, options).target);
    refs.push_back(pair.target);
  }
  return text::corpus_bleu(hyps, refs).value;
}

TuneResult tune_weights(const ParallelCorpus& dev, const PhraseTable& table, const NGramLM& lm,
                        const SmtWeights& initial, const TuneOptions& options) {
  if (dev.empty()) throw Error("tune_weights: empty dev set");
  if (options.grid.empty()) throw Error("tune_weights: empty grid");
  if (options.sweeps < 1) throw Error("tune_weights: sweeps must be >= 1");
  initial.validate();

  TuneResult result;
  result.weights = initial;
  result.initial_bleu = dev_bleu(dev, table, lm, initial, options.decoder);
  result.evaluations = 1;
  double best = result.initial_bleu;

  auto current = initial.to_array();
  for (int sweep = 0; sweep < options.sweeps; ++sweep) {
    bool moved = false;
    for (std::size_t k = 0; k < SmtWeights::kCount; ++k) {
      for (double value : options.grid) {
        if (value == current[k]) continue;
        auto candidate = current;
        candidate[k] = value;
        bool any_nonzero = false;
        for (double v : candidate) any_nonzero = any_nonzero || v != 0.0;
        if (!any_nonzero) continue;

        const double bleu = dev_bleu(dev, table, lm, SmtWeights::from_array(candidate), options.decoder);
        ++result.evaluations;
        if (bleu > best) {
          best = bleu;
          current = candidate;
          moved = true;
        }
      }
    }
    if (!moved) break;
  }
  result.weights = SmtWeights::from_array(current);
  result.final_bleu = best;
  return result;
}

}  // namespace mtloop::smt
