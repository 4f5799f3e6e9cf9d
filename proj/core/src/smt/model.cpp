#include "mtloop/smt/model.hpp"

#include <fstream>

#include <json.hpp>

#include "mtloop/error.hpp"

namespace mtloop::smt {
namespace {

using nlohmann::json;

constexpr int kModelFormatVersion = 1;

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace

SmtModel train_smt(const ParallelCorpus& corpus, const SmtTrainOptions& options) {
  corpus.validate();
  SmtModel model;
  model.direction = corpus.direction;
  model.options = options;
  model.forward = train_lexical(corpus, options.em_iterations);
  model.reverse = train_lexical(corpus.reversed(), options.em_iterations);
  model.phrases = build_phrase_table(corpus, model.forward, model.reverse, options.max_phrase_length);
  std::vector<TokenSeq> targets;
  targets.reserve(corpus.size());
  for (const auto& p : corpus.pairs) targets.push_back(p.target);
  model.lm = NGramLM::train(targets, options.lm_order, options.lm_discount);
  return model;
}

void save_weights(const SmtWeights& weights, const std::filesystem::path& path) {
  json j;
  j["v"] = kModelFormatVersion;
  const auto values = weights.to_array();
  for (std::size_t k = 0; k < SmtWeights::kCount; ++k) j[std::string(SmtWeights::name(k))] = values[k];
  write_json(path, j);
}

SmtWeights load_weights(const std::filesystem::path& path) {
  const json j = read_json(path);
  std::array<double, SmtWeights::kCount> values{};
  try {
    for (std::size_t k = 0; k < SmtWeights::kCount; ++k) {
      values[k] = j.at(std::string(SmtWeights::name(k))).get<double>();
    }
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  SmtWeights w = SmtWeights::from_array(values);
  w.validate();
  return w;
}

void save_smt(const SmtModel& model, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json meta;
  meta["v"] = kModelFormatVersion;
  meta["format"] = "mtloop-smt";
  meta["direction"] = std::string(to_string(model.direction));
  meta["em_iterations"] = model.options.em_iterations;
  meta["max_phrase_length"] = model.options.max_phrase_length;
  meta["lm_order"] = model.options.lm_order;
  meta["lm_discount"] = model.options.lm_discount;
  write_json(dir / "model.json", meta);
  save_weights(model.weights, dir / "weights.json");
  model.phrases.save(dir / "phrase-table");
  model.phrases.save_reordering(dir / "reordering-table");
  model.lm.save_arpa(dir / "lm.arpa");
  model.forward.save(dir / "lex.f2e");
  model.reverse.save(dir / "lex.e2f");
}

SmtModel load_smt(const std::filesystem::path& dir) {
  const json meta = read_json(dir / "model.json");
  SmtModel model;
  try {
    if (meta.at("format").get<std::string>() != "mtloop-smt") throw FormatError("not an SMT model");
    if (meta.at("v").get<int>() != kModelFormatVersion) throw FormatError("unsupported model version");
    model.direction = parse_direction(meta.at("direction").get<std::string>());
    model.options.em_iterations = meta.at("em_iterations").get<int>();
    model.options.max_phrase_length = meta.at("max_phrase_length").get<int>();
    model.options.lm_order = meta.at("lm_order").get<int>();
    model.options.lm_discount = meta.at("lm_discount").get<double>();
  } catch (const json::exception& e) {
    throw FormatError((dir / "model.json").string() + ": " + e.what());
  }
  model.weights = load_weights(dir / "weights.json");
  model.phrases = PhraseTable::load(dir / "phrase-table", model.options.max_phrase_length);
  if (std::filesystem::exists(dir / "reordering-table")) model.phrases.load_reordering(dir / "reordering-table");
  model.lm = NGramLM::load_arpa(dir / "lm.arpa");
  model.forward = LexicalTable::load(dir / "lex.f2e");
  model.reverse = LexicalTable::load(dir / "lex.e2f");
  return model;
}

}  // namespace mtloop::smt
