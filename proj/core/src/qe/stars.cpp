#include "mtloop/qe/stars.hpp"

#include <algorithm>
#include <cmath>

#include "mtloop/error.hpp"

namespace mtloop::qe {

StarRating stars_from_bleu(double predicted_bleu) {
  if (std::isnan(predicted_bleu)) return {0.0, true};
  const double clamped = std::clamp(predicted_bleu, 0.0, 100.0);
  return {clamped / 20.0, clamped != predicted_bleu};
}

double stars_from_prob(const nmt::NmtHypothesis& h) {
  if (h.target.empty()) throw Error("zero-length hypothesis");
  const double mean = h.log_prob() / static_cast<double>(h.target.size());
  // Token log-probabilities are <= 0; clamp guards rounding above 1.
  return std::clamp(5.0 * std::exp(mean), 0.0, 5.0);
}

text::PearsonResult evaluate_qe(std::span<const double> predictions, std::span<const double> gold) {
  return text::pearson(predictions, gold);
}

}  // namespace mtloop::qe
