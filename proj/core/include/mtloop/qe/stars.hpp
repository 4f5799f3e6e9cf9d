#pragma once

#include <span>

#include "mtloop/nmt/decoder.hpp"
#include "mtloop/text/metrics.hpp"

namespace mtloop::qe {

struct StarRating {
  double stars = 0.0;    // [0, 5]
  bool clipped = false;  // input was outside [0, 100]
};

// predicted / 20. NaN maps to 0 and is flagged.
StarRating stars_from_bleu(double predicted_bleu);

// 5 * exp(mean token log-probability). Throws on an empty hypothesis.
double stars_from_prob(const nmt::NmtHypothesis& h);

text::PearsonResult evaluate_qe(std::span<const double> predictions, std::span<const double> gold);

}  // namespace mtloop::qe
