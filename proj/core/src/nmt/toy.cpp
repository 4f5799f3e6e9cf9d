#include "mtloop/nmt/toy.hpp"

#include <algorithm>
#include <cmath>

namespace mtloop::nmt {

ToyDecoder::ToyDecoder(smt::LexicalTable table) : table_(std::move(table)) {
  vocabulary_ = table_.target_vocabulary();
  if (!std::binary_search(vocabulary_.begin(), vocabulary_.end(), eos_)) {
    vocabulary_.insert(std::lower_bound(vocabulary_.begin(), vocabulary_.end(), eos_), eos_);
  }
}

namespace {

// t(y | x) with unknown source words translating to themselves.
double translation(const smt::LexicalTable& table, std::string_view y, const std::string& x) {
  if (const auto* row = table.row(x)) {
    const auto it = row->find(y);
    return it == row->end() ? 0.0 : it->second;
  }
  return y == x ? 1.0 : 0.0;
}

std::vector<double> mixture(const std::vector<double>& coverage, std::size_t step) {
  std::vector<double> m(coverage.size());
  for (std::size_t j = 0; j < m.size(); ++j) {
    const double distance = std::abs(static_cast<double>(j) - static_cast<double>(step));
    m[j] = coverage[j] * std::pow(ToyDecoder::kPositionalDecay, distance);
  }
  return m;
}

// Posterior over source positions for an emitted token; empty if no
// position can produce it.
std::vector<double> posterior(const smt::LexicalTable& table, const TokenSeq& source,
                              const std::vector<double>& weights, std::string_view y) {
  std::vector<double> r(source.size());
  double z = 0.0;
  for (std::size_t j = 0; j < source.size(); ++j) z += r[j] = weights[j] * translation(table, y, source[j]);
  if (!(z > 0.0)) return {};
  for (double& v : r) v /= z;
  return r;
}

}  // namespace

StepDistribution ToyDecoder::step(const TokenSeq& source, const TokenSeq& prefix) const {
  const std::size_t n = source.size();
  std::vector<double> coverage(n, 1.0);
  for (std::size_t k = 0; k < prefix.size(); ++k) {
    const auto r = posterior(table_, source, mixture(coverage, k), prefix[k]);
    if (r.empty()) continue;
    const auto j = std::max_element(r.begin(), r.end()) - r.begin();
    coverage[j] *= kCoverageDecay;
  }

  StepDistribution out;
  if (n == 0) {
    out.probabilities[eos_] = 1.0;
    return out;
  }
  const std::vector<double> m = mixture(coverage, prefix.size());
  double mz = 0.0;
  for (double v : m) mz += v;
  const double stop =
      1.0 / (1.0 + std::exp(kStopSlope * (static_cast<double>(n) - static_cast<double>(prefix.size()))));

  for (std::size_t j = 0; j < n; ++j) {
    const double share = (1.0 - stop) * m[j] / mz;
    if (const auto* row = table_.row(source[j])) {
      for (const auto& [y, t] : *row) {
        if (y != eos_) out.probabilities[y] += share * t;
      }
    } else {
      out.probabilities[source[j]] += share;
    }
  }
  out.probabilities[eos_] += stop;
  std::erase_if(out.probabilities, [](const auto& kv) { return !(kv.second > 0.0); });

  out.attention_row.resize(n);
  for (std::size_t j = 0; j < n; ++j) out.attention_row[j] = m[j] / mz;
  for (const auto& [y, p] : out.probabilities) {
    if (y == eos_) continue;
    auto r = posterior(table_, source, m, y);
    if (!r.empty()) out.token_attention.emplace(y, std::move(r));
  }
  return out;
}

std::shared_ptr<const Decoder> toy_decoder(smt::LexicalTable table) {
  return std::make_shared<ToyDecoder>(std::move(table));
}

}  // namespace mtloop::nmt
