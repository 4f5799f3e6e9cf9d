#include "service_fixture.hpp"

#include <random>

#include "mtloop/qe/dataset.hpp"
#include "mtloop/qe/gbt.hpp"
#include "mtloop/synthetic.hpp"

namespace mtloop::testsupport {

namespace {

const ParallelCorpus& toy_corpus() {
  static const ParallelCorpus corpus = synthetic_corpus(120, 11);
  return corpus;
}

DirectionModels build(Direction d) {
  const ParallelCorpus corpus = d == Direction::ChrEn ? toy_corpus() : toy_corpus().reversed();
  DirectionModels m;
  m.smt = std::make_shared<const smt::SmtModel>(smt::train_smt(corpus));
  const qe::QEDataset data = qe::build_kfold_dataset(corpus, qe::smt_trainer(), {.k = 3});
  m.smt_qe = std::make_shared<const qe::GradientBoostedEnsemble>(
      qe::gbt_train(data, qe::default_gbt_params(qe::FeatureKind::Smt, d)));
  m.nmt = std::make_shared<const nmt::NmtModel>(nmt::train_toy_nmt(corpus));
  return m;
}

}  // namespace

const DirectionModels& toy_models(Direction d) {
  static const DirectionModels chr_en = build(Direction::ChrEn);
  static const DirectionModels en_chr = build(Direction::EnChr);
  return d == Direction::ChrEn ? chr_en : en_chr;
}

const SentencePair& toy_pair(std::size_t i) { return toy_corpus().pairs.at(i); }

ServiceHarness::ServiceHarness(bool load_models) {
  dir = std::filesystem::temp_directory_path() / ("mtloop-svc-" + std::to_string(std::random_device{}()));
  std::filesystem::create_directories(dir);
  store = std::make_unique<feedback::FeedbackStore>(dir);
  if (load_models)
    for (Direction d : {Direction::ChrEn, Direction::EnChr}) models.set(d, toy_models(d));
  const SentencePair& p = toy_pair(0);
  auto dictionary = std::make_shared<const dict::Dictionary>(std::vector<dict::DictEntry>{
      {p.source.at(0), Language::Chr, p.target.at(0), ""}, {p.target.at(0), Language::En, p.source.at(0), "toy"}});
  service = std::make_unique<service::Service>(std::vector<std::string>{kExpertToken}, *store, models, dictionary);
}

ServiceHarness::~ServiceHarness() {
  service.reset();
  store.reset();
  std::error_code ec;
  std::filesystem::remove_all(dir, ec);
}

service::Response ServiceHarness::post(const std::string& path, const std::string& body,
                                       const std::string& token) const {
  service::Request r{"POST", path, {}, {}, body};
  if (!token.empty()) r.headers["Authorization"] = "Bearer " + token;
  return service->handle(r);
}

service::Response ServiceHarness::get(const std::string& path, const std::map<std::string, std::string>& query,
                                      const std::string& token) const {
  service::Request r{"GET", path, query, {}, ""};
  if (!token.empty()) r.headers["Authorization"] = "Bearer " + token;
  return service->handle(r);
}

}  // namespace mtloop::testsupport
