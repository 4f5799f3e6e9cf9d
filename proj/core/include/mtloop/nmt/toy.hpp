#pragma once

#include <memory>
#include <string>

#include "mtloop/nmt/decoder.hpp"
#include "mtloop/smt/lexical.hpp"

namespace mtloop::nmt {

inline constexpr std::string_view kEndOfSequence = "</s>";

// Stand-in for a trained attentional model, driven by a lexical table.
//
// At step k the mixture weight of source position j is c_j * 2^-|j - k|.
// c_j starts at 1 and halves every time j was the attention argmax of an
// emitted prefix token. The next-token distribution is
//   P(y) = (1 - e) * sum_j m_j t(y | x_j) / sum_j m_j,  P(</s>) = e,
//   e = 1 / (1 + exp(2 (L_s - |prefix|))).
// Source words missing from the table translate to themselves. The
// attention row for an emitted y is the posterior m_j t(y | x_j) / sum.
class ToyDecoder final : public Decoder {
 public:
  explicit ToyDecoder(smt::LexicalTable table);

  StepDistribution step(const TokenSeq& source, const TokenSeq& prefix) const override;
  const std::string& eos() const override { return eos_; }
  std::vector<std::string> vocabulary() const override { return vocabulary_; }
  const smt::LexicalTable& table() const { return table_; }

  static constexpr double kCoverageDecay = 0.5;
  static constexpr double kPositionalDecay = 0.5;
  static constexpr double kStopSlope = 2.0;

 private:
  smt::LexicalTable table_;
  std::string eos_{kEndOfSequence};
  std::vector<std::string> vocabulary_;
};

std::shared_ptr<const Decoder> toy_decoder(smt::LexicalTable table);

}  // namespace mtloop::nmt
