#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "mtloop/corpus.hpp"
#include "mtloop/error.hpp"

namespace mtloop::feedback {

enum class ModelKind { Smt, Nmt };
std::string_view to_string(ModelKind m);
ModelKind parse_model_kind(std::string_view s);  // "smt" | "nmt"

enum class ExampleStatus { Unlabeled, Labeled };
std::string_view to_string(ExampleStatus s);
ExampleStatus parse_example_status(std::string_view s);

// Seconds since the Unix epoch, rendered as "YYYY-MM-DDTHH:MM:SSZ".
using Timestamp = std::int64_t;
std::string format_utc(Timestamp t);
Timestamp parse_utc(std::string_view s);

struct TranslationRecord {
  std::string id;  // assigned by the store when empty
  std::string source;
  Direction direction = Direction::ChrEn;
  ModelKind model = ModelKind::Smt;
  std::string output;
  double stars = 0.0;
  Timestamp created_at = 0;
  std::optional<std::string> example_id;
};

struct ExpertFeedback {
  std::string id;
  std::string translation_id;
  int quality = 0;  // 1..5
  std::string correction;
  std::optional<std::string> comment;
  std::string author;
  Timestamp created_at = 0;
};

struct CommonFeedback {
  std::string id;
  std::string translation_id;
  std::optional<int> helpfulness;  // required, 1..5
  std::optional<std::string> comment;
  Timestamp created_at = 0;
};

// Direct-assessment bands: 0-10, 11-29, 30-50, 51-69, 70-90, 91-100.
enum class DABand { Incorrect, FewKeywords, Fragments, Understandable, ClosePreservation, Perfect };
DABand da_band(int score);  // throws outside 0..100
std::string_view band_label(DABand b);        // short id, e.g. "fragments"
std::string_view band_description(DABand b);  // rater guideline sentence

struct DARating {
  std::string id;
  std::string translation_id;
  int score = 0;
  DABand band = DABand::Incorrect;  // derived from score on record
  Timestamp created_at = 0;
};

struct ExampleItem {
  std::string id;
  Language language = Language::Chr;
  std::string text;
  ExampleStatus status = ExampleStatus::Unlabeled;
  Timestamp created_at = 0;
};

struct CellStats {
  ModelKind model = ModelKind::Smt;
  Direction direction = Direction::ChrEn;
  std::size_t count = 0;
  std::optional<double> mean_quality;
  std::optional<double> pearson;  // quality vs stars; unset below 2 records or with zero variance
};

// Four cells: SMT chr-en, SMT en-chr, NMT chr-en, NMT en-chr.
struct StatsReport {
  std::array<CellStats, 4> cells;
  const CellStats& cell(ModelKind m, Direction d) const;
};

// Raised for references to records that do not exist.
class NotFound : public Error {
 public:
  using Error::Error;
};

// Append-only store over one JSONL file per record type, with an in-memory
// index rebuilt on open. Example status changes are appended as label
// events to examples.jsonl. Writes serialize through one lock; reads share
// it. A torn final line (crash mid-write) is ignored on open; any other
// malformed line is a FormatError.
class FeedbackStore {
 public:
  using Clock = std::function<Timestamp()>;

  explicit FeedbackStore(std::filesystem::path dir, Clock clock = {});

  const std::filesystem::path& dir() const { return dir_; }
  bool writable() const;

  // Throws on stars outside [0, 5] or an unknown example id.
  std::string add_translation(TranslationRecord r);
  std::string add_example(Language language, std::string text);

  // Throw Error on validation failure and NotFound on an unknown
  // translation. Expert feedback on an example-sourced translation labels
  // the example on its first submission.
  std::string submit_expert(ExpertFeedback f);
  std::string submit_common(CommonFeedback f);
  std::string record_da(DARating r);

  std::optional<TranslationRecord> translation(std::string_view id) const;
  std::optional<ExampleItem> example(std::string_view id) const;
  std::vector<TranslationRecord> translations() const;
  std::vector<ExpertFeedback> expert_feedback() const;
  std::vector<CommonFeedback> common_feedback() const;
  std::vector<DARating> ratings() const;

  std::vector<ExampleItem> list_examples(Language language, std::optional<ExampleStatus> status = {}) const;
  std::vector<ExampleItem> list_examples() const;
  // Oldest unlabeled example in insertion order.
  std::optional<ExampleItem> next_example(Language language) const;

  StatsReport stats() const;

  // (source, correction) per expert record, oriented to `orientation`:
  // corrections of translations in the opposite direction are swapped. Both
  // sides are 13a-tokenized. With dedup only the latest correction per
  // translation is kept.
  ParallelCorpus export_corrections(Direction orientation = Direction::ChrEn, bool dedup = false) const;

 private:
  void load();
  void append(const char* file, const std::string& line);
  std::string next_id(const char* prefix, std::size_t n) const;
  Timestamp now() const;

  std::filesystem::path dir_;
  Clock clock_;
  mutable std::shared_mutex mu_;
  std::vector<TranslationRecord> translations_;
  std::map<std::string, std::size_t, std::less<>> translation_index_;
  std::vector<ExampleItem> examples_;
  std::map<std::string, std::size_t, std::less<>> example_index_;
  std::vector<ExpertFeedback> expert_;
  std::vector<CommonFeedback> common_;
  std::vector<DARating> ratings_;
};

}  // namespace mtloop::feedback
