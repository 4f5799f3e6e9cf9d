// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <mutex>
#include <random>
#include <set>
#include <string>

#include <json.hpp>

#include "beam_oracle.hpp"
#include "decoder_oracle.hpp"
#include "mtloop/corpus.hpp"
#include "mtloop/feedback/store.hpp"
#include "mtloop/hitl/retrain.hpp"
#include "mtloop/nmt/toy.hpp"
#include "mtloop/qe/dataset.hpp"
#include "mtloop/qe/features.hpp"
#include "mtloop/qe/gbt.hpp"
#include "mtloop/qe/stars.hpp"
#include "mtloop/synthetic.hpp"
#include "schema_check.hpp"
#include "service_fixture.hpp"

using namespace mtloop;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// sacreBLEU 1.5.0 (tokenize 13a, smooth exp) over tests/fixtures.
constexpr std::array<double, 20> kSentenceGolden = {
    100.0,     78.254229, 40.936538, 49.760939, 59.460356, 23.64354,  35.531011,
    19.420577, 70.710678, 38.260294, 36.787944, 45.138644, 60.767958, 55.936849,
    52.47358,  55.032121, 40.668309, 31.947155, 100.0,     35.355339};
constexpr double kCorpusGolden = 52.82539387673488;

Outcome bleu_oracle() {
  const auto t0 = Clock::now();
  std::vector<TokenSeq> hyps, refs;
  for (const auto& l : read_lines(std::string(MTLOOP_FIXTURE_DIR) + "/bleu_hyp.txt")) hyps.push_back(text::tokenize_13a(l));
  for (const auto& l : read_lines(std::string(MTLOOP_FIXTURE_DIR) + "/bleu_ref.txt")) refs.push_back(text::tokenize_13a(l));
  if (hyps.size() != 20 || refs.size() != 20) return {false, "fixture must hold 20 pairs"};
  double worst = 0.0;
  for (std::size_t i = 0; i < 20; ++i)
    worst = std::max(worst, std::abs(text::sentence_bleu(hyps[i], refs[i]).value - kSentenceGolden[i]));
  const double corpus_err = std::abs(text::corpus_bleu(hyps, refs).value - kCorpusGolden);
  const double secs = seconds_since(t0);
  return {worst <= 0.05 && corpus_err <= 0.05 && secs < 1.0,
          fmt("max sentence error %.2g, corpus error %.2g, %.3f s", worst, corpus_err, secs)};
}

Outcome attention_entropy() {
  double worst_uniform = 0.0;
  for (std::size_t ls = 1; ls <= 10; ++ls)
    for (std::size_t lt = 1; lt <= 4; ++lt) {
      const nmt::Matrix m(lt, std::vector<double>(ls, 1.0 / static_cast<double>(ls)));
      worst_uniform = std::max(worst_uniform, std::abs(qe::attention_entropy(m) - std::log(static_cast<double>(ls))));
    }
  bool onehot_zero = true;
  for (std::size_t ls = 1; ls <= 10; ++ls) {
    nmt::Matrix m(3, std::vector<double>(ls, 0.0));
    for (std::size_t r = 0; r < 3; ++r) m[r][(r * 7) % ls] = 1.0;
    onehot_zero = onehot_zero && qe::attention_entropy(m) == 0.0;
  }
  const double mixed = qe::attention_entropy({{0.5, 0.5}, {0.9, 0.1}});
  const bool ok = worst_uniform <= 1e-9 && onehot_zero && std::abs(mixed - 0.509116) <= 1e-6;
  return {ok, fmt("uniform max error %.2g, one-hot %s, mixed 2x2 %.9f", worst_uniform, onehot_zero ? "0" : "non-zero", mixed)};
}

Outcome smt_optimality() {
  const auto t0 = Clock::now();
  smt::DecoderOptions opts;
  opts.distortion_limit = smt::kUnlimitedDistortion;
  int agree = 0;
  for (unsigned seed = 1; seed <= 100; ++seed) {
    const auto inst = oracle::random_decoder_instance(seed, 5, 8);
    const auto h = smt::decode(inst.source, inst.table, inst.lm, inst.weights, opts);
    const auto best = oracle::exhaustive_decode(inst.source, inst.table, inst.lm, inst.weights);
    if (h.target == best.target && std::abs(h.total_score - best.score) <= 1e-9) ++agree;
  }
  const double secs = seconds_since(t0);
  return {agree == 100 && secs < 10.0, fmt("%d/100 equal the exhaustive argmax, %.2f s", agree, secs)};
}

Outcome beam_optimality() {
  int agree = 0;
  for (unsigned seed = 1; seed <= 50; ++seed) {
    const auto inst = oracle::random_toy_instance(seed, 3, 5);
    const nmt::ToyDecoder d(inst.table);
    const auto h = nmt::beam_search(d, inst.source, {.beam = 5, .max_len = 4});
    const auto best = oracle::enumerate_best(d, inst.source, 4);
    if (h.target == best.target) ++agree;
  }
  return {agree == 50, fmt("%d/50 equal the enumeration argmax", agree)};
}

Outcome gbt_convergence() {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  std::vector<qe::FeatureVector> x;
  std::vector<double> y;
  for (int i = 0; i < 40; ++i) {
    const double v = (i % 2 ? 1 : -1) * u(rng);
    x.push_back({qe::FeatureKind::Nmt, {1.0 + i, v, 0, 0, 0, 0}});
    y.push_back(v < 0 ? 10.0 : 90.0);
  }
  const auto m = qe::gbt_train(x, y, {1, 0.1, 100});
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(qe::gbt_predict(m, x[i]) - y[i]));
  const auto mse = qe::staged_mse(m, x, y);
  bool monotone = mse.size() == 101;
  for (std::size_t r = 1; r < mse.size(); ++r) monotone = monotone && mse[r] <= mse[r - 1];
  return {worst <= 0.01 && monotone,
          fmt("max |pred - target| %.4f (bound %.4f), MSE non-increasing: %s", worst, 80 * std::pow(0.9, 100),
              monotone ? "yes" : "no")};
}

Outcome qe_protocol() {
  const auto t0 = Clock::now();
  const ParallelCorpus corpus = synthetic_corpus(600, 1);
  const qe::QEDataset data = qe::build_kfold_dataset(corpus, qe::smt_trainer(), {.k = 6});
  std::vector<qe::FeatureVector> train_x, test_x;
  std::vector<double> train_y, test_y;
  for (const auto& row : data.rows) {
    (row.pair_index < 500 ? train_x : test_x).push_back(row.features);
    (row.pair_index < 500 ? train_y : test_y).push_back(row.bleu);
  }
  const auto model = qe::gbt_train(train_x, train_y, {5, 0.1, 100});
  std::vector<double> pred;
  for (const auto& f : test_x) pred.push_back(qe::gbt_predict(model, f));
  const double r = qe::evaluate_qe(pred, test_y).r;
  const double secs = seconds_since(t0);
  return {r >= 0.6 && test_x.size() == 100 && secs < 120.0,
          fmt("Pearson %.3f on %zu held-out rows, %.1f s", r, test_x.size(), secs)};
}

Outcome unsupervised_qe() {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int violations = 0, out_of_range = 0;
  for (int c = 0; c < 1000; ++c) {
    nmt::NmtHypothesis h;
    const int n = 1 + static_cast<int>(rng() % 8);
    for (int i = 0; i < n; ++i) {
      h.target.push_back("t");
      // Mix of tiny, ordinary and certain probabilities.
      const double p = c % 10 == 0 ? 1.0 : std::pow(u(rng), 1 + static_cast<int>(rng() % 4));
      h.token_logprobs.push_back(p > 0 ? std::log(p) : -745.0);
    }
    const double s = qe::stars_from_prob(h);
    if (!(s >= 0.0 && s <= 5.0)) ++out_of_range;
    nmt::NmtHypothesis worse = h;
    const std::size_t k = rng() % h.target.size();
    worse.token_logprobs[k] -= 1e-3 + u(rng) * 5.0;
    if (qe::stars_from_prob(worse) > s) ++violations;
    const qe::StarRating b = qe::stars_from_bleu(-50.0 + u(rng) * 200.0);
    if (!(b.stars >= 0.0 && b.stars <= 5.0)) ++out_of_range;
  }
  return {violations == 0 && out_of_range == 0,
          fmt("1000 cases: %d monotonicity violations, %d stars outside [0,5]", violations, out_of_range)};
}

Outcome kfold_partition() {
  std::string detail;
  bool ok = true;
  for (std::size_t n : {10u, 100u, 1003u})
    for (int k : {3, 17}) {
      ParallelCorpus corpus;
      for (std::size_t i = 0; i < n; ++i) {
        const std::string tag = "s" + std::to_string(i);
        corpus.pairs.push_back({{tag, "x"}, {tag, "x", "y"}});
      }
      detail += fmt("%sn=%zu k=%d", detail.empty() ? "" : ", ", n, k);
      if (static_cast<std::size_t>(k) > n) {
        // More folds than pairs cannot partition; it must be rejected.
        bool rejected = false;
        try {
          qe::assign_folds(n, k, 17);
        } catch (const Error&) {
          rejected = true;
        }
        ok = ok && rejected;
        detail += rejected ? " (rejected)" : " (accepted, expected rejection)";
        continue;
      }
      // Each model remembers the tags it was trained on and counts any
      // request to decode one of them.
      auto mu = std::make_shared<std::mutex>();
      auto leaks = std::make_shared<int>(0);
      const qe::Trainer trainer = [mu, leaks](const ParallelCorpus& train) -> qe::Translator {
        auto seen = std::make_shared<std::set<std::string>>();
        for (const auto& p : train.pairs) seen->insert(p.source[0]);
        return [seen, mu, leaks](const TokenSeq& src) {
          if (seen->contains(src[0])) {
            std::lock_guard lock(*mu);
            ++*leaks;
          }
          const double len = static_cast<double>(src.size());
          return qe::Decoded{src, {qe::FeatureKind::Nmt, {len, 0.0, 0.0, 1.0, 1.0, 0.0}}};
        };
      };
      const qe::QEDataset d = qe::build_kfold_dataset(corpus, trainer, {.k = k});
      std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
      std::vector<int> seen_rows(n, 0);
      for (const auto& row : d.rows) {
        ++seen_rows.at(row.pair_index);
        ++sizes.at(static_cast<std::size_t>(row.fold));
      }
      const bool exhaustive_disjoint =
          d.rows.size() == n && std::all_of(seen_rows.begin(), seen_rows.end(), [](int c) { return c == 1; });
      const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
      const bool balanced = *hi - *lo <= 1;
      const bool case_ok = exhaustive_disjoint && balanced && *leaks == 0;
      ok = ok && case_ok;
      if (!case_ok) detail += fmt(" (cover %d, sizes %zu..%zu, leaks %d)", exhaustive_disjoint, *lo, *hi, *leaks);
    }
  return {ok, detail + (ok ? ": disjoint, exhaustive, balanced, no leakage" : "")};
}

Outcome hitl_pipeline() {
  const ParallelCorpus all = synthetic_corpus(260, 5);
  ParallelCorpus train{all.direction, {all.pairs.begin(), all.pairs.begin() + 200}};
  ParallelCorpus dev{all.direction, {all.pairs.begin() + 200, all.pairs.end()}};
  ParallelCorpus corrections{all.direction, {all.pairs.begin() + 200, all.pairs.begin() + 220}};
  bool sizes_ok = true;
  for (int repeat : {1, 5, 10})
    sizes_ok = sizes_ok && hitl::merge_corrections(train, corrections, repeat).size() ==
                               train.size() + static_cast<std::size_t>(repeat) * corrections.size();
  ModelRegistry registry;
  hitl::RetrainConfig config;
  const auto report = hitl::retrain_direction(train, dev, corrections, config, &registry);
  const bool ok = sizes_ok && report.error.empty() && report.bleu_after >= report.bleu_before && report.swapped &&
                  registry.get(Direction::ChrEn).smt != nullptr;
  return {ok, fmt("dev BLEU %.2f -> %.2f with 20 corrections, model %s, merge sizes %s", report.bleu_before,
                  report.bleu_after, report.swapped ? "swapped" : "kept", sizes_ok ? "exact" : "wrong")};
}

Outcome feedback_stats() {
  // Band function: every integer 0..100 maps to exactly one band, and bands
  // are contiguous and ordered.
  int transitions = 0;
  bool sweep_ok = true;
  for (int s = 0; s <= 100; ++s) {
    try {
      const auto b = feedback::da_band(s);
      if (s > 0) {
        const auto prev = feedback::da_band(s - 1);
        if (b != prev) {
          ++transitions;
          sweep_ok = sweep_ok && static_cast<int>(b) == static_cast<int>(prev) + 1;
        }
      }
    } catch (const Error&) {
      sweep_ok = false;
    }
  }
  sweep_ok = sweep_ok && transitions == 5 && feedback::da_band(0) == feedback::DABand::Incorrect &&
             feedback::da_band(100) == feedback::DABand::Perfect;
  for (int bad : {-1, 101}) {
    try {
      feedback::da_band(bad);
      sweep_ok = false;
    } catch (const Error&) {
    }
  }

  const auto dir = std::filesystem::temp_directory_path() / ("mtloop-accept-" + std::to_string(std::random_device{}()));
  bool stats_ok = false, flip_ok = false;
  {
    feedback::Timestamp clock = 1'700'000'000;
    feedback::FeedbackStore s(dir, [&] { return clock++; });
    auto add = [&](feedback::ModelKind m, Direction d, double stars, std::optional<std::string> ex = {}) {
      feedback::TranslationRecord r;
      r.source = "Ꭰ";
      r.direction = d;
      r.model = m;
      r.output = "out";
      r.stars = stars;
      r.example_id = std::move(ex);
      return s.add_translation(r);
    };
    auto expert = [&](const std::string& tid, int q) { s.submit_expert({"", tid, q, "fixed", {}, "expert-1", 0}); };
    using feedback::ModelKind;
    expert(add(ModelKind::Smt, Direction::ChrEn, 1.5), 2);
    expert(add(ModelKind::Smt, Direction::ChrEn, 3.5), 3);
    expert(add(ModelKind::Nmt, Direction::ChrEn, 1.0), 1);
    expert(add(ModelKind::Nmt, Direction::ChrEn, 2.0), 3);
    expert(add(ModelKind::Nmt, Direction::ChrEn, 2.4), 5);
    expert(add(ModelKind::Nmt, Direction::EnChr, 4.2), 4);
    // Hand computation: SMT chr-en qualities {2,3} vs stars {1.5,3.5}, r = 1;
    // NMT chr-en x = {1,3,5}, y = {1.0,2.0,2.4}: r = 2.8 / sqrt(8 * 1.04).
    const auto r = s.stats();
    const auto& a = r.cell(ModelKind::Smt, Direction::ChrEn);
    const auto& b = r.cell(ModelKind::Nmt, Direction::ChrEn);
    const auto& c = r.cell(ModelKind::Nmt, Direction::EnChr);
    const auto& d = r.cell(ModelKind::Smt, Direction::EnChr);
    stats_ok = a.count == 2 && a.mean_quality == 2.5 && a.pearson && std::abs(*a.pearson - 1.0) < 1e-12 &&
               b.count == 3 && b.mean_quality == 3.0 && b.pearson &&
               std::abs(*b.pearson - 0.9707253433941508) < 1e-12 && c.count == 1 && c.mean_quality == 4.0 &&
               !c.pearson && d.count == 0 && !d.mean_quality && !d.pearson;

    const std::string ex = s.add_example(Language::Chr, "ᎣᏏᏲ");
    const std::string t1 = add(ModelKind::Smt, Direction::ChrEn, 2.0, ex);
    const std::string t2 = add(ModelKind::Nmt, Direction::ChrEn, 2.0, ex);
    const bool before = s.example(ex)->status == feedback::ExampleStatus::Unlabeled;
    expert(t1, 4);
    const bool after_first = s.example(ex)->status == feedback::ExampleStatus::Labeled;
    expert(t2, 3);
    // Exactly one label event is persisted.
    int label_events = 0;
    for (const auto& line : read_lines(dir / "examples.jsonl"))
      if (json::parse(line).value("type", "") == "label") ++label_events;
    const feedback::FeedbackStore reopened(dir);
    flip_ok = before && after_first && label_events == 1 &&
              reopened.example(ex)->status == feedback::ExampleStatus::Labeled;
  }
  std::error_code ec;
  std::filesystem::remove_all(dir, ec);
  return {sweep_ok && stats_ok && flip_ok, fmt("band sweep %s, stats cells %s, single status flip %s",
                                               sweep_ok ? "ok" : "bad", stats_ok ? "match" : "differ",
                                               flip_ok ? "ok" : "bad")};
}

Outcome service_contract() {
  testsupport::ServiceHarness h;
  std::vector<std::pair<std::string, std::string>> docs;
  int translate_ok = 0, invariant_failures = 0;
  std::string failures;
  auto expect_status = [&](const service::Response& r, int want, const std::string& what) {
    if (r.status != want) failures += fmt(" [%s: %d != %d]", what.c_str(), r.status, want);
    docs.emplace_back(r.status >= 400 ? "error.response" : r.status == 201 ? "created.response" : "", r.body);
    if (docs.back().first.empty()) docs.pop_back();
  };

  std::string last_tid;
  for (Direction d : {Direction::ChrEn, Direction::EnChr})
    for (const char* model : {"smt", "nmt"})
      for (std::size_t i = 0; i < 5; ++i) {
        const SentencePair& p = testsupport::toy_pair(i * 3);
        const std::string text = text::join(d == Direction::ChrEn ? p.source : p.target);
        const auto r = h.post("/api/translate",
                              json{{"text", text}, {"direction", std::string(to_string(d))}, {"model", model}}.dump());
        if (r.status != 200) {
          failures += fmt(" [translate %s %s: %d]", std::string(to_string(d)).c_str(), model, r.status);
          continue;
        }
        ++translate_ok;
        docs.emplace_back("translate.response", r.body);
        const json j = json::parse(r.body);
        last_tid = j.at("translation_id");
        const double stars = j.at("stars");
        const std::size_t ls = j.at("src_tokens").size(), lt = j.at("tgt_tokens").size();
        bool inv = stars >= 0.0 && stars <= 5.0;
        const json& a = j.at("alignment");
        if (std::string(model) == "smt") {
          inv = inv && a.at("kind") == "hard";
          for (const auto& l : a.at("links")) inv = inv && l.at(0).get<std::size_t>() < ls && l.at(1).get<std::size_t>() < lt;
        } else {
          inv = inv && a.at("kind") == "soft" && a.at("matrix").size() == lt;
          for (const auto& row : a.at("matrix")) {
            double z = 0.0;
            for (double v : row) z += v;
            inv = inv && row.size() == ls && std::abs(z - 1.0) <= 1e-6;
          }
        }
        if (!inv) ++invariant_failures;
      }

  const auto before_bad = h.store->translations().size();
  expect_status(h.post("/api/translate", R"({"text":"","direction":"chr-en","model":"smt"})"), 400, "empty text");
  expect_status(h.post("/api/translate", json{{"text", std::string(2001, 'a')}, {"direction", "chr-en"}, {"model", "nmt"}}.dump()),
                400, "oversized text");
  expect_status(h.post("/api/translate", R"({"text":"a","direction":"xx-en","model":"smt"})"), 400, "bad direction");
  expect_status(h.post("/api/translate", R"({"text":"a","direction":"chr-en","model":"rnn"})"), 400, "bad model");
  expect_status(h.get("/api/examples", {{"lang", "fr"}}), 400, "bad lang");
  const json common = {{"translation_id", last_tid}, {"helpfulness", 4}, {"accepted_terms", false}};
  expect_status(h.post("/api/feedback/common", common.dump()), 403, "terms gate");
  json common_bad = common;
  common_bad["accepted_terms"] = true;
  common_bad["helpfulness"] = 7;
  expect_status(h.post("/api/feedback/common", common_bad.dump()), 400, "helpfulness 7");
  json common_missing = common_bad;
  common_missing["helpfulness"] = 4;
  common_missing["translation_id"] = "tr-999999";
  expect_status(h.post("/api/feedback/common", common_missing.dump()), 404, "unknown translation");
  const json expert = {{"translation_id", last_tid}, {"quality", 4}, {"correction", "fixed"}};
  expect_status(h.post("/api/feedback/expert", expert.dump()), 401, "expert without token");
  expect_status(h.post("/api/feedback/expert", expert.dump(), "guess"), 401, "expert wrong token");
  json empty_correction = expert;
  empty_correction["correction"] = "";
  expect_status(h.post("/api/feedback/expert", empty_correction.dump(), testsupport::kExpertToken), 400, "empty correction");
  expect_status(h.get("/api/stats"), 401, "stats without token");
  const bool no_mutation = h.store->translations().size() == before_bad && h.store->common_feedback().empty() &&
                           h.store->expert_feedback().empty();
  if (!no_mutation) failures += " [state mutated by a rejected request]";

  common_missing["translation_id"] = last_tid;
  expect_status(h.post("/api/feedback/common", common_missing.dump()), 201, "common feedback");
  expect_status(h.post("/api/feedback/expert", expert.dump(), testsupport::kExpertToken), 201, "expert feedback");
  const auto stats = h.get("/api/stats", {}, testsupport::kExpertToken);
  expect_status(stats, 200, "stats");
  docs.emplace_back("stats.response", stats.body);
  const auto health = h.get("/api/health");
  expect_status(health, 200, "health");
  docs.emplace_back("health.response", health.body);
  const auto examples = h.get("/api/examples");
  expect_status(examples, 200, "examples");
  docs.emplace_back("examples.response", examples.body);
  testsupport::ServiceHarness empty(false);
  expect_status(empty.post("/api/translate", R"({"text":"a","direction":"chr-en","model":"smt"})"), 503, "no model");

  const testsupport::SchemaCheck schema = testsupport::validate_documents(docs);
  if (!schema.ok) failures += " [schema: " + schema.output + "]";
  const bool ok = translate_ok == 20 && invariant_failures == 0 && failures.empty() && schema.ok;
  return {ok, fmt("%d/20 translations valid, %d invariant failures, %zu documents schema-checked", translate_ok,
                  invariant_failures, docs.size()) +
                  failures};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"BLEU oracle equivalence", bleu_oracle},
      {"Attention entropy closed forms", attention_entropy},
      {"SMT decoder optimality", smt_optimality},
      {"Beam-search optimality at toy scale", beam_optimality},
      {"GBT convergence", gbt_convergence},
      {"Synthetic QE protocol", qe_protocol},
      {"Unsupervised QE sanity", unsupervised_qe},
      {"k-fold partition", kfold_partition},
      {"HITL pipeline", hitl_pipeline},
      {"Feedback/stats", feedback_stats},
      {"Service contract", service_contract},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s  %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return failed == 0 ? 0 : 1;
}
