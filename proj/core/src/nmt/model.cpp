#include "mtloop/nmt/model.hpp"

#include <fstream>

#include <json.hpp>

#include "mtloop/error.hpp"
#include "mtloop/nmt/toy.hpp"

namespace mtloop::nmt {

using nlohmann::json;

NmtHypothesis NmtModel::translate(const TokenSeq& source, const BeamOptions& options) const {
  if (!decoder) throw Error("NMT model not loaded");
  return beam_search(*decoder, source, options);
}

NmtModel make_toy_nmt(Direction direction, std::vector<smt::LexicalTable> members) {
  if (members.empty()) throw Error("NMT model needs at least one member");
  NmtModel model;
  model.direction = direction;
  model.members = std::move(members);
  std::vector<std::shared_ptr<const Decoder>> decoders;
  for (const auto& table : model.members) decoders.push_back(toy_decoder(table));
  model.decoder = ensemble(std::move(decoders));
  return model;
}

NmtModel train_toy_nmt(const ParallelCorpus& corpus, const std::vector<int>& em_iterations) {
  corpus.validate();
  std::vector<smt::LexicalTable> members;
  for (int it : em_iterations) members.push_back(smt::train_lexical(corpus, it));
  return make_toy_nmt(corpus.direction, std::move(members));
}

void save_nmt(const NmtModel& model, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < model.members.size(); ++i) {
    model.members[i].save(dir / ("member-" + std::to_string(i) + ".lex"));
  }
  std::ofstream out(dir / "model.json");
  out << json{{"format", "mtloop-nmt"},
              {"v", 1},
              {"direction", std::string(to_string(model.direction))},
              {"members", model.members.size()}}
             .dump(2)
      << '\n';
  if (!out) throw Error("cannot write " + (dir / "model.json").string());
}

NmtModel load_nmt(const std::filesystem::path& dir) {
  std::ifstream in(dir / "model.json");
  if (!in) throw Error("missing " + (dir / "model.json").string());
  json meta;
  try {
    meta = json::parse(in);
    if (meta.at("format") != "mtloop-nmt" || meta.at("v") != 1) throw FormatError("unsupported NMT model format");
  } catch (const json::exception& e) {
    throw FormatError(std::string("model.json: ") + e.what());
  }
  std::vector<smt::LexicalTable> members;
  const auto count = meta.at("members").get<std::size_t>();
  for (std::size_t i = 0; i < count; ++i) {
    members.push_back(smt::LexicalTable::load(dir / ("member-" + std::to_string(i) + ".lex")));
  }
  return make_toy_nmt(parse_direction(meta.at("direction").get<std::string>()), std::move(members));
}

}  // namespace mtloop::nmt
