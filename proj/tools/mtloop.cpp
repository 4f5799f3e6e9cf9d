// mtloop command line: training, QE, retraining, scoring and the HTTP server.
#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "mtloop/corpus.hpp"
#include "mtloop/dict/dictionary.hpp"
#include "mtloop/error.hpp"
#include "mtloop/feedback/store.hpp"
#include "mtloop/hitl/retrain.hpp"
#include "mtloop/models.hpp"
#include "mtloop/qe/dataset.hpp"
#include "mtloop/qe/gbt.hpp"
#include "mtloop/qe/stars.hpp"
#include "mtloop/service/service.hpp"
#include "mtloop/smt/model.hpp"
#include "mtloop/smt/tuner.hpp"
#include "mtloop/synthetic.hpp"

namespace fs = std::filesystem;
using namespace mtloop;

namespace {

std::vector<TokenSeq> read_token_lines(const fs::path& path) {
  std::vector<TokenSeq> out;
  for (const auto& line : read_lines(path)) out.push_back(text::tokenize_13a(line));
  return out;
}

std::vector<double> read_numbers(const fs::path& path) {
  std::vector<double> out;
  int line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(line, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || line.find_first_not_of(" \t", used) != std::string::npos)
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": not a number");
    out.push_back(v);
  }
  return out;
}

// ---- bleu ----

struct BleuArgs {
  fs::path hyp, ref;
  bool sentence = false;
};

int run_bleu(const BleuArgs& a) {
  const auto hyps = read_token_lines(a.hyp);
  const auto refs = read_token_lines(a.ref);
  if (hyps.size() != refs.size())
    throw Error("hypothesis and reference files differ in line count (" + std::to_string(hyps.size()) + " vs " +
                std::to_string(refs.size()) + ")");
  if (a.sentence) {
    for (std::size_t i = 0; i < hyps.size(); ++i) std::printf("%.1f\n", text::sentence_bleu(hyps[i], refs[i]).value);
  } else {
    std::printf("%.1f\n", text::corpus_bleu(hyps, refs).value);
  }
  return 0;
}

// ---- smt ----

struct SmtArgs {
  fs::path corpus, out, dev, model;
  std::string direction = "chr-en";
  int beam = 100;
  int distortion = 6;
};

int run_smt_train(const SmtArgs& a) {
  const ParallelCorpus corpus = read_pair_file(a.corpus, parse_direction(a.direction));
  corpus.validate();
  smt::save_smt(smt::train_smt(corpus), a.out);
  std::fprintf(stderr, "trained %s SMT on %zu pairs -> %s\n", a.direction.c_str(), corpus.size(), a.out.c_str());
  return 0;
}

int run_smt_tune(const SmtArgs& a) {
  smt::SmtModel model = smt::load_smt(a.model);
  const ParallelCorpus dev = read_pair_file(a.dev, model.direction);
  dev.validate();
  const smt::TuneResult r = smt::tune_weights(dev, model.phrases, model.lm, model.weights);
  smt::save_weights(r.weights, a.model / "weights.json");
  std::printf("dev BLEU %.1f -> %.1f (%d evaluations)\n", r.initial_bleu, r.final_bleu, r.evaluations);
  return 0;
}

int run_smt_decode(const SmtArgs& a) {
  const smt::SmtModel model = smt::load_smt(a.model);
  smt::DecoderOptions options;
  options.beam = a.beam;
  options.distortion_limit = a.distortion < 0 ? smt::kUnlimitedDistortion : a.distortion;
  std::string line;
  while (std::getline(std::cin, line)) {
    const TokenSeq src = text::tokenize_13a(line);
    std::cout << (src.empty() ? "" : text::join(model.translate(src, options).target)) << '\n';
  }
  return 0;
}

// ---- qe ----

struct QeArgs {
  fs::path corpus, out, data, model, pred, gold;
  std::string direction = "chr-en";
  std::string kind = "smt";
  int k = 17;
  std::uint64_t seed = qe::kDefaultFoldSeed;
  unsigned threads = 0;
  std::optional<int> depth, rounds;
  std::optional<double> eta;
};

int run_qe_build(const QeArgs& a) {
  const ParallelCorpus corpus = read_pair_file(a.corpus, parse_direction(a.direction));
  corpus.validate();
  const qe::FeatureKind kind = qe::parse_feature_kind(a.kind);
  const qe::QEDataset data = qe::build_kfold_dataset(
      corpus, kind == qe::FeatureKind::Smt ? qe::smt_trainer() : qe::nmt_trainer(), {a.k, a.seed, a.threads});
  qe::save_dataset(data, a.out);
  std::fprintf(stderr, "%zu rows, %d folds -> %s\n", data.rows.size(), data.k, a.out.c_str());
  return 0;
}

int run_qe_train(const QeArgs& a) {
  const qe::QEDataset data = qe::load_dataset(a.data);
  qe::GbtParams params = qe::default_gbt_params(data.kind, parse_direction(a.direction));
  if (a.depth) params.max_depth = *a.depth;
  if (a.eta) params.eta = *a.eta;
  if (a.rounds) params.rounds = *a.rounds;
  const qe::GradientBoostedEnsemble model = qe::gbt_train(data, params);
  qe::save_gbt(model, a.out);
  std::fprintf(stderr, "depth %d, eta %g, %d rounds on %zu rows -> %s\n", params.max_depth, params.eta, params.rounds,
               data.rows.size(), a.out.c_str());
  return 0;
}

int run_qe_predict(const QeArgs& a) {
  const qe::GradientBoostedEnsemble model = qe::load_gbt(a.model);
  const qe::QEDataset data = qe::load_dataset(a.data);
  std::ofstream pred(a.pred);
  std::ofstream gold;
  if (!a.gold.empty()) gold.open(a.gold);
  if (!pred || (!a.gold.empty() && !gold)) throw Error("cannot write prediction files");
  for (const auto& row : data.rows) {
    pred << qe::gbt_predict(model, row.features) << '\n';
    if (gold.is_open()) gold << row.bleu << '\n';
  }
  return 0;
}

int run_qe_eval(const QeArgs& a) {
  const auto pred = read_numbers(a.pred);
  const auto gold = read_numbers(a.gold);
  const text::PearsonResult r = qe::evaluate_qe(pred, gold);
  std::printf("pearson %.4f (n=%zu)\n", r.r, r.n);
  return 0;
}

// ---- models ----

struct ModelsArgs {
  fs::path corpus, out;
  int k = 17;
  unsigned threads = 0;
};

// SMT, SMT QE regressor and toy NMT for both directions from one chr-en
// pair file, in the layout the server loads.
int run_models_build(const ModelsArgs& a) {
  const ParallelCorpus chr_en = read_pair_file(a.corpus, Direction::ChrEn);
  chr_en.validate();
  for (Direction d : {Direction::ChrEn, Direction::EnChr}) {
    const ParallelCorpus corpus = d == Direction::ChrEn ? chr_en : chr_en.reversed();
    DirectionModels m;
    m.smt = std::make_shared<const smt::SmtModel>(smt::train_smt(corpus));
    const qe::QEDataset data = qe::build_kfold_dataset(corpus, qe::smt_trainer(), {a.k, qe::kDefaultFoldSeed, a.threads});
    m.smt_qe = std::make_shared<const qe::GradientBoostedEnsemble>(
        qe::gbt_train(data, qe::default_gbt_params(qe::FeatureKind::Smt, d)));
    m.nmt = std::make_shared<const nmt::NmtModel>(nmt::train_toy_nmt(corpus));
    save_models(m, d, a.out);
    std::fprintf(stderr, "%s models -> %s\n", std::string(to_string(d)).c_str(), a.out.c_str());
  }
  return 0;
}

// ---- synth ----

struct SynthArgs {
  std::size_t pairs = 600;
  std::uint64_t seed = 1;
  fs::path out;
};

int run_synth(const SynthArgs& a) {
  write_pair_file(a.out, synthetic_corpus(a.pairs, a.seed));
  return 0;
}

// ---- hitl ----

struct HitlArgs {
  fs::path data, train, dev, archaic_map, model_dir;
  int repeat = 1;
  bool dedup = false;
  bool rebuild_qe = false;
};

int run_hitl_retrain(const HitlArgs& a) {
  const ParallelCorpus train = read_pair_file(a.train, Direction::ChrEn);
  const ParallelCorpus dev = read_pair_file(a.dev, Direction::ChrEn);
  train.validate();
  dev.validate();
  const feedback::FeedbackStore store(a.data);
  const ParallelCorpus corrections = store.export_corrections(Direction::ChrEn, a.dedup);

  hitl::RetrainConfig config;
  config.repeat = a.repeat;
  config.rebuild_qe = a.rebuild_qe;
  if (!a.archaic_map.empty()) config.archaic = hitl::load_archaic_map(a.archaic_map);

  ModelRegistry registry;
  if (!a.model_dir.empty()) load_models(registry, a.model_dir);
  const hitl::RetrainReport report = hitl::retrain(train, dev, corrections, config, a.model_dir.empty() ? nullptr : &registry);
  if (!a.model_dir.empty())
    for (const auto& d : report.directions)
      if (d.swapped) save_models(registry.get(d.direction), d.direction, a.model_dir);
  std::cout << report.to_json() << '\n';
  std::cerr << report.summary();
  return report.ok() ? 0 : 2;
}

// ---- serve ----

service::HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

struct ServeArgs {
  service::ServiceConfig config;
  std::string host = "0.0.0.0";
  std::string static_dir;
  std::string dict_file;
};

int run_serve(ServeArgs a) {
  if (!a.static_dir.empty()) a.config.static_dir = a.static_dir;
  if (!a.dict_file.empty()) a.config.dict_file = a.dict_file;
  fs::create_directories(a.config.data_dir);
  feedback::FeedbackStore store(a.config.data_dir);
  ModelRegistry registry;
  if (fs::exists(a.config.model_dir)) load_models(registry, a.config.model_dir);
  auto dictionary = std::make_shared<const dict::Dictionary>(a.config.dict_file ? dict::load_tsv(*a.config.dict_file)
                                                                                  : dict::Dictionary());
  if (a.config.expert_tokens.empty()) std::fprintf(stderr, "warning: no expert tokens configured\n");
  const service::Service svc(a.config.expert_tokens, store, registry, dictionary);
  service::HttpServer server(svc, a.config.static_dir);
  const int port = server.bind(a.host, a.config.port);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::fprintf(stderr, "listening on %s:%d (data %s, models %s, %zu dictionary entries)\n", a.host.c_str(), port,
               a.config.data_dir.c_str(), a.config.model_dir.c_str(), dictionary->size());
  server.listen();
  g_server = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mtloop: Cherokee-English translation with quality estimation and expert feedback"};
  app.require_subcommand(1);
  std::function<int()> action;
  const auto dirs = CLI::IsMember({"chr-en", "en-chr"});

  BleuArgs bleu;
  auto* bleu_cmd = app.add_subcommand("bleu", "Corpus (or per-sentence) BLEU of a hypothesis file");
  bleu_cmd->add_option("--hyp", bleu.hyp, "Hypotheses, one per line")->required()->check(CLI::ExistingFile);
  bleu_cmd->add_option("--ref", bleu.ref, "References, one per line")->required()->check(CLI::ExistingFile);
  bleu_cmd->add_flag("--sentence", bleu.sentence, "Print smoothed sentence BLEU per line");
  bleu_cmd->callback([&] { action = [&] { return run_bleu(bleu); }; });

  SmtArgs smt_args;
  auto* smt_cmd = app.add_subcommand("smt", "Phrase-based SMT");
  smt_cmd->require_subcommand(1);
  auto* smt_train = smt_cmd->add_subcommand("train", "Align, extract phrases and train the LM");
  smt_train->add_option("--corpus", smt_args.corpus, "Pair file (source ||| target)")->required()->check(CLI::ExistingFile);
  smt_train->add_option("--out", smt_args.out, "Model directory")->required();
  smt_train->add_option("--direction", smt_args.direction, "Direction of the pair file")->check(dirs);
  smt_train->callback([&] { action = [&] { return run_smt_train(smt_args); }; });
  auto* smt_tune = smt_cmd->add_subcommand("tune", "Tune feature weights for dev BLEU");
  smt_tune->add_option("--dev", smt_args.dev, "Dev pair file")->required()->check(CLI::ExistingFile);
  smt_tune->add_option("--model", smt_args.model, "Model directory (weights.json is rewritten)")->required()->check(CLI::ExistingDirectory);
  smt_tune->callback([&] { action = [&] { return run_smt_tune(smt_args); }; });
  auto* smt_decode = smt_cmd->add_subcommand("decode", "Translate standard input line by line");
  smt_decode->add_option("--model", smt_args.model, "Model directory")->required()->check(CLI::ExistingDirectory);
  smt_decode->add_option("--beam", smt_args.beam, "Stack size")->check(CLI::PositiveNumber);
  smt_decode->add_option("--distortion", smt_args.distortion, "Distortion limit, negative for unlimited");
  smt_decode->callback([&] { action = [&] { return run_smt_decode(smt_args); }; });

  QeArgs qe_args;
  auto* qe_cmd = app.add_subcommand("qe", "Quality estimation");
  qe_cmd->require_subcommand(1);
  auto* qe_build = qe_cmd->add_subcommand("build-data", "K-fold QE dataset: features and sentence BLEU per pair");
  qe_build->add_option("--corpus", qe_args.corpus, "Pair file")->required()->check(CLI::ExistingFile);
  qe_build->add_option("--k", qe_args.k, "Number of folds")->check(CLI::Range(2, 1000000));
  qe_build->add_option("--kind", qe_args.kind, "Feature kind")->check(CLI::IsMember({"smt", "nmt"}));
  qe_build->add_option("--direction", qe_args.direction, "Direction of the pair file")->check(dirs);
  qe_build->add_option("--seed", qe_args.seed, "Fold assignment seed");
  qe_build->add_option("--threads", qe_args.threads, "Worker threads (0: all cores)");
  qe_build->add_option("--out", qe_args.out, "Dataset file")->required();
  qe_build->callback([&] { action = [&] { return run_qe_build(qe_args); }; });
  auto* qe_train = qe_cmd->add_subcommand("train", "Fit the gradient boosted regressor");
  qe_train->add_option("--data", qe_args.data, "Dataset file")->required()->check(CLI::ExistingFile);
  qe_train->add_option("--depth", qe_args.depth, "Maximum tree depth");
  qe_train->add_option("--eta", qe_args.eta, "Learning rate");
  qe_train->add_option("--rounds", qe_args.rounds, "Boosting rounds");
  qe_train->add_option("--direction", qe_args.direction, "Direction whose defaults fill unset parameters")->check(dirs);
  qe_train->add_option("--out", qe_args.out, "Model file")->required();
  qe_train->callback([&] { action = [&] { return run_qe_train(qe_args); }; });
  auto* qe_predict = qe_cmd->add_subcommand("predict", "Predict BLEU for every dataset row");
  qe_predict->add_option("--model", qe_args.model, "Model file")->required()->check(CLI::ExistingFile);
  qe_predict->add_option("--data", qe_args.data, "Dataset file")->required()->check(CLI::ExistingFile);
  qe_predict->add_option("--pred", qe_args.pred, "Output: one prediction per line")->required();
  qe_predict->add_option("--gold", qe_args.gold, "Output: the rows' sentence BLEU, one per line");
  qe_predict->callback([&] { action = [&] { return run_qe_predict(qe_args); }; });
  auto* qe_eval = qe_cmd->add_subcommand("eval", "Pearson correlation of predictions with gold BLEU");
  qe_eval->add_option("--pred", qe_args.pred, "Predictions, one per line")->required()->check(CLI::ExistingFile);
  qe_eval->add_option("--gold", qe_args.gold, "Gold values, one per line")->required()->check(CLI::ExistingFile);
  qe_eval->callback([&] { action = [&] { return run_qe_eval(qe_args); }; });

  ModelsArgs models_args;
  auto* models_cmd = app.add_subcommand("models", "Serving model directories");
  models_cmd->require_subcommand(1);
  auto* models_build = models_cmd->add_subcommand("build", "Train SMT, SMT QE and toy NMT for both directions");
  models_build->add_option("--corpus", models_args.corpus, "chr-en pair file")->required()->check(CLI::ExistingFile);
  models_build->add_option("--out", models_args.out, "Model directory")->required();
  models_build->add_option("--k", models_args.k, "QE folds")->check(CLI::Range(2, 1000000));
  models_build->add_option("--threads", models_args.threads, "Worker threads (0: all cores)");
  models_build->callback([&] { action = [&] { return run_models_build(models_args); }; });

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic chr-en pair file");
  synth_cmd->add_option("--pairs", synth.pairs, "Number of pairs");
  synth_cmd->add_option("--seed", synth.seed, "Generator seed");
  synth_cmd->add_option("--out", synth.out, "Pair file")->required();
  synth_cmd->callback([&] { action = [&] { return run_synth(synth); }; });

  HitlArgs hitl_args;
  auto* hitl_cmd = app.add_subcommand("hitl", "Retraining from expert corrections");
  hitl_cmd->require_subcommand(1);
  auto* retrain = hitl_cmd->add_subcommand("retrain", "Retrain with corrections and swap models past the guard rail");
  retrain->add_option("--data", hitl_args.data, "Feedback data directory")->required()->check(CLI::ExistingDirectory);
  retrain->add_option("--train", hitl_args.train, "chr-en training pair file")->required()->check(CLI::ExistingFile);
  retrain->add_option("--dev", hitl_args.dev, "chr-en dev pair file")->required()->check(CLI::ExistingFile);
  retrain->add_option("--repeat", hitl_args.repeat, "Copies of each correction")->check(CLI::IsMember({1, 5, 10}));
  retrain->add_option("--archaic-map", hitl_args.archaic_map, "Archaic term map (TSV)")->check(CLI::ExistingFile);
  retrain->add_option("--model-dir", hitl_args.model_dir, "Serving model directory to update");
  retrain->add_flag("--dedup", hitl_args.dedup, "Only the latest correction per translation");
  retrain->add_flag("--rebuild-qe", hitl_args.rebuild_qe, "Also rebuild the SMT QE regressor");
  retrain->callback([&] { action = [&] { return run_hitl_retrain(hitl_args); }; });

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API (defaults from MTLOOP_* variables)");
  serve_cmd->preparse_callback([&](std::size_t) { serve.config = service::ServiceConfig::from_env(); });
  serve_cmd->add_option("--port", serve.config.port, "Listen port")->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--host", serve.host, "Listen address");
  serve_cmd->add_option("--data-dir", serve.config.data_dir, "Feedback store directory");
  serve_cmd->add_option("--model-dir", serve.config.model_dir, "Model directory");
  serve_cmd->add_option("--dict", serve.dict_file, "Dictionary TSV")->check(CLI::ExistingFile);
  serve_cmd->add_option("--static", serve.static_dir, "Static files served at /")->check(CLI::ExistingDirectory);
  serve_cmd->callback([&] { action = [&] { return run_serve(serve); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::fprintf(stderr, "mtloop: %s\n", e.what());
    return 1;
  }
  try {
    return action();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "mtloop: %s\n", e.what());
    return 1;
  }
}
