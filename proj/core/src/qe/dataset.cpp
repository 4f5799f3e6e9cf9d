#include "mtloop/qe/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <memory>
#include <numeric>
#include <random>
#include <thread>

#include <json.hpp>

#include "mtloop/error.hpp"
#include "mtloop/nmt/model.hpp"
#include "mtloop/smt/model.hpp"

namespace mtloop::qe {

using nlohmann::json;

void QEDataset::validate() const {
  if (rows.empty()) throw Error("empty QE dataset");
  for (const auto& r : rows) {
    if (r.features.kind != kind) throw Error("mixed feature kinds in QE dataset");
    r.features.validate();
    if (!(r.bleu >= 0.0 && r.bleu <= 100.0)) throw Error("BLEU label out of range");
  }
}

std::vector<int> assign_folds(std::size_t n, int k, std::uint64_t seed) {
  if (k < 2) throw Error("k must be at least 2");
  if (static_cast<std::size_t>(k) > n) throw Error("more folds than pairs");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Explicit Fisher-Yates: std::shuffle's draw sequence is not portable.
  std::mt19937_64 rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = rng() % (i + 1);
    std::swap(order[i], order[j]);
  }
  std::vector<int> fold_of(n);
  for (std::size_t p = 0; p < n; ++p) fold_of[order[p]] = static_cast<int>(p % static_cast<std::size_t>(k));
  return fold_of;
}

Trainer smt_trainer() {
  return [](const ParallelCorpus& train) -> Translator {
    auto model = std::make_shared<const smt::SmtModel>(smt::train_smt(train));
    return [model](const TokenSeq& source) {
      const smt::SmtHypothesis h = model->translate(source);
      return Decoded{h.target, smt_features(h)};
    };
  };
}

Trainer nmt_trainer() {
  return [](const ParallelCorpus& train) -> Translator {
    auto model = std::make_shared<const nmt::NmtModel>(nmt::train_toy_nmt(train));
    return [model](const TokenSeq& source) {
      const nmt::NmtHypothesis h = model->translate(source);
      return Decoded{h.target, nmt_features(h)};
    };
  };
}

QEDataset build_kfold_dataset(const ParallelCorpus& corpus, const Trainer& trainer, const KFoldOptions& options) {
  corpus.validate();
  QEDataset data;
  data.k = options.k;
  data.seed = options.seed;
  data.fold_of = assign_folds(corpus.size(), options.k, options.seed);

  std::vector<std::vector<QERow>> slots(options.k);
  std::vector<std::exception_ptr> errors(options.k);
  auto run_fold = [&](int fold) {
    try {
      ParallelCorpus train;
      train.direction = corpus.direction;
      std::vector<std::size_t> held_out;
      for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (data.fold_of[i] == fold)
          held_out.push_back(i);
        else
          train.pairs.push_back(corpus.pairs[i]);
      }
      const Translator translate = trainer(train);
      for (std::size_t i : held_out) {
        Decoded d = translate(corpus.pairs[i].source);
        const double bleu = text::sentence_bleu(d.target, corpus.pairs[i].target).value;
        slots[fold].push_back({std::move(d.features), bleu, i, fold});
      }
    } catch (...) {
      errors[fold] = std::current_exception();
    }
  };

  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(options.k));
  std::atomic<int> next{0};
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (int f = next++; f < options.k; f = next++) run_fold(f);
      });
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  for (auto& slot : slots)
    for (auto& row : slot) data.rows.push_back(std::move(row));
  std::sort(data.rows.begin(), data.rows.end(),
            [](const QERow& a, const QERow& b) { return a.pair_index < b.pair_index; });
  data.kind = data.rows.front().features.kind;
  data.validate();
  return data;
}

void save_dataset(const QEDataset& data, const std::filesystem::path& path) {
  json rows = json::array();
  for (const auto& r : data.rows)
    rows.push_back({{"pair", r.pair_index}, {"fold", r.fold}, {"bleu", r.bleu}, {"features", r.features.values}});
  const json j = {{"format", "mtloop-qe-data"}, {"v", 1},         {"kind", to_string(data.kind)},
                  {"k", data.k},                {"seed", data.seed}, {"fold_of", data.fold_of},
                  {"columns", feature_names(data.kind)}, {"rows", rows}};
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump() << '\n';
}

QEDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read " + path.string());
  try {
    const json j = json::parse(in);
    if (j.at("format") != "mtloop-qe-data" || j.at("v") != 1) throw FormatError("not a QE dataset: " + path.string());
    QEDataset data;
    data.kind = parse_feature_kind(j.at("kind").get<std::string>());
    data.k = j.at("k");
    data.seed = j.at("seed");
    data.fold_of = j.at("fold_of").get<std::vector<int>>();
    for (const auto& r : j.at("rows"))
      data.rows.push_back({{data.kind, r.at("features").get<std::vector<double>>()}, r.at("bleu"), r.at("pair"),
                           r.at("fold")});
    data.validate();
    return data;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace mtloop::qe
