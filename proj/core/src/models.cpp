#include "mtloop/models.hpp"

namespace mtloop {

namespace fs = std::filesystem;

void load_models(ModelRegistry& registry, const fs::path& dir) {
  for (Direction d : {Direction::ChrEn, Direction::EnChr}) {
    const fs::path base = dir / std::string(to_string(d));
    DirectionModels m;
    if (fs::exists(base / "smt")) m.smt = std::make_shared<const smt::SmtModel>(smt::load_smt(base / "smt"));
    if (fs::exists(base / "qe-smt.json"))
      m.smt_qe = std::make_shared<const qe::GradientBoostedEnsemble>(qe::load_gbt(base / "qe-smt.json"));
    if (fs::exists(base / "nmt")) m.nmt = std::make_shared<const nmt::NmtModel>(nmt::load_nmt(base / "nmt"));
    registry.set(d, std::move(m));
  }
}

void save_models(const DirectionModels& models, Direction d, const fs::path& dir) {
  const fs::path base = dir / std::string(to_string(d));
  fs::create_directories(base);
  if (models.smt) smt::save_smt(*models.smt, base / "smt");
  if (models.smt_qe) qe::save_gbt(*models.smt_qe, base / "qe-smt.json");
  if (models.nmt) nmt::save_nmt(*models.nmt, base / "nmt");
}

}  // namespace mtloop
