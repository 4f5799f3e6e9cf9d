#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>

#include "mtloop/corpus.hpp"
#include "mtloop/nmt/model.hpp"
#include "mtloop/qe/gbt.hpp"
#include "mtloop/smt/model.hpp"

namespace mtloop {

// Serving models for one direction. Any member may be missing.
struct DirectionModels {
  std::shared_ptr<const smt::SmtModel> smt;
  std::shared_ptr<const qe::GradientBoostedEnsemble> smt_qe;
  std::shared_ptr<const nmt::NmtModel> nmt;
};

// Holds the current models per direction. get() hands out a snapshot, so a
// request that started on the old models finishes on them after a swap.
class ModelRegistry {
 public:
  DirectionModels get(Direction d) const {
    std::lock_guard lock(mu_);
    return slots_[index(d)];
  }
  void set(Direction d, DirectionModels models) {
    std::lock_guard lock(mu_);
    slots_[index(d)] = std::move(models);
    ++generations_[index(d)];
  }
  // Number of set() calls for the direction; identifies the installed models.
  std::uint64_t generation(Direction d) const {
    std::lock_guard lock(mu_);
    return generations_[index(d)];
  }

 private:
  static std::size_t index(Direction d) { return d == Direction::ChrEn ? 0 : 1; }
  mutable std::mutex mu_;
  std::array<DirectionModels, 2> slots_;
  std::array<std::uint64_t, 2> generations_{};
};

// Layout: <dir>/<chr-en|en-chr>/{smt/, nmt/, qe-smt.json}. Missing parts are
// left empty; a present but broken artifact throws.
void load_models(ModelRegistry& registry, const std::filesystem::path& dir);
void save_models(const DirectionModels& models, Direction d, const std::filesystem::path& dir);

}  // namespace mtloop
