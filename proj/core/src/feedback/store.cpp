#include "mtloop/feedback/store.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mtloop/error.hpp"

namespace mtloop::feedback {

using nlohmann::json;

namespace {

constexpr const char* kTranslations = "translations.jsonl";
constexpr const char* kExamples = "examples.jsonl";
constexpr const char* kExpert = "feedback_expert.jsonl";
constexpr const char* kCommon = "feedback_common.jsonl";
constexpr const char* kRatings = "ratings_da.jsonl";

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

template <class T>
void put_optional(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

template <class T>
std::optional<T> get_optional(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

// Reads a JSONL file, repairing a torn final line left by a crash.
std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::vector<json> out;
  if (!std::filesystem::exists(path)) return out;
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string content = ss.str();
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < content.size()) {
    const std::size_t nl = content.find('\n', start);
    const bool last = nl == std::string::npos;
    const std::string_view line(content.data() + start, (last ? content.size() : nl) - start);
    ++line_no;
    if (!blank(line)) {
      try {
        out.push_back(json::parse(line));
      } catch (const json::exception&) {
        if (!last) throw FormatError(path.string() + ":" + std::to_string(line_no) + ": malformed record");
        std::filesystem::resize_file(path, start);
        return out;
      }
    }
    if (last) {
      std::ofstream(path, std::ios::app | std::ios::binary) << '\n';
      break;
    }
    start = nl + 1;
  }
  return out;
}

void check_version(const json& j) {
  if (j.value("v", 0) != 1) throw FormatError("unsupported record version");
}

}  // namespace

std::string_view to_string(ModelKind m) { return m == ModelKind::Smt ? "smt" : "nmt"; }

ModelKind parse_model_kind(std::string_view s) {
  if (s == "smt") return ModelKind::Smt;
  if (s == "nmt") return ModelKind::Nmt;
  throw Error("unknown model: " + std::string(s));
}

std::string_view to_string(ExampleStatus s) { return s == ExampleStatus::Labeled ? "labeled" : "unlabeled"; }

ExampleStatus parse_example_status(std::string_view s) {
  if (s == "labeled") return ExampleStatus::Labeled;
  if (s == "unlabeled") return ExampleStatus::Unlabeled;
  throw Error("unknown example status: " + std::string(s));
}

std::string format_utc(Timestamp t) {
  const std::time_t tt = static_cast<std::time_t>(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Timestamp parse_utc(std::string_view s) {
  std::tm tm{};
  char z = 0;
  const std::string str(s);
  if (std::sscanf(str.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c", &tm.tm_year, &tm.tm_mon, &tm.tm_mday, &tm.tm_hour,
                  &tm.tm_min, &tm.tm_sec, &z) != 7 ||
      z != 'Z')
    throw FormatError("bad timestamp: " + str);
  tm.tm_year -= 1900;
  tm.tm_mon -= 1;
  return static_cast<Timestamp>(timegm(&tm));
}

DABand da_band(int score) {
  if (score < 0 || score > 100) throw Error("DA score out of range");
  if (score <= 10) return DABand::Incorrect;
  if (score <= 29) return DABand::FewKeywords;
  if (score <= 50) return DABand::Fragments;
  if (score <= 69) return DABand::Understandable;
  if (score <= 90) return DABand::ClosePreservation;
  return DABand::Perfect;
}

std::string_view band_label(DABand b) {
  switch (b) {
    case DABand::Incorrect: return "incorrect";
    case DABand::FewKeywords: return "few-keywords";
    case DABand::Fragments: return "fragments";
    case DABand::Understandable: return "understandable";
    case DABand::ClosePreservation: return "close";
    case DABand::Perfect: return "perfect";
  }
  return "";
}

std::string_view band_description(DABand b) {
  switch (b) {
    case DABand::Incorrect: return "completely incorrect and inaccurate";
    case DABand::FewKeywords: return "a few correct keywords, but the overall meaning is different from the source";
    case DABand::Fragments: return "translated fragments of the source string, with major mistakes";
    case DABand::Understandable:
      return "understandable and conveys the overall meaning of the source, but contains typos or grammatical errors";
    case DABand::ClosePreservation: return "closely preserves the semantics of the source sentence";
    case DABand::Perfect: return "a perfect translation";
  }
  return "";
}

const CellStats& StatsReport::cell(ModelKind m, Direction d) const {
  for (const auto& c : cells)
    if (c.model == m && c.direction == d) return c;
  throw Error("no such stats cell");
}

FeedbackStore::FeedbackStore(std::filesystem::path dir, Clock clock) : dir_(std::move(dir)), clock_(std::move(clock)) {
  std::filesystem::create_directories(dir_);
  load();
}

Timestamp FeedbackStore::now() const {
  if (clock_) return clock_();
  return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count();
}

bool FeedbackStore::writable() const {
  const auto probe = dir_ / ".write-probe";
  {
    std::ofstream out(probe);
    if (!out || !(out << "ok")) return false;
  }
  std::error_code ec;
  std::filesystem::remove(probe, ec);
  return true;
}

std::string FeedbackStore::next_id(const char* prefix, std::size_t n) const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s-%06zu", prefix, n + 1);
  return buf;
}

void FeedbackStore::append(const char* file, const std::string& line) {
  std::ofstream out(dir_ / file, std::ios::app | std::ios::binary);
  out << line << '\n';
  out.flush();
  if (!out) throw StorageError(std::string("cannot append to ") + (dir_ / file).string());
}

void FeedbackStore::load() {
  try {
    for (const json& j : read_jsonl(dir_ / kTranslations)) {
      check_version(j);
      TranslationRecord r;
      r.id = j.at("id");
      r.source = j.at("source");
      r.direction = parse_direction(j.at("direction").get<std::string>());
      r.model = parse_model_kind(j.at("model").get<std::string>());
      r.output = j.at("output");
      r.stars = j.at("stars");
      r.created_at = parse_utc(j.at("created_at").get<std::string>());
      r.example_id = get_optional<std::string>(j, "example_id");
      translation_index_[r.id] = translations_.size();
      translations_.push_back(std::move(r));
    }
    for (const json& j : read_jsonl(dir_ / kExamples)) {
      check_version(j);
      if (j.at("type") == "label") {
        const auto it = example_index_.find(j.at("id").get<std::string>());
        if (it == example_index_.end()) throw FormatError("label event for unknown example");
        examples_[it->second].status = ExampleStatus::Labeled;
        continue;
      }
      ExampleItem e;
      e.id = j.at("id");
      e.language = parse_language(j.at("language").get<std::string>());
      e.text = j.at("text");
      e.created_at = parse_utc(j.at("created_at").get<std::string>());
      example_index_[e.id] = examples_.size();
      examples_.push_back(std::move(e));
    }
    for (const json& j : read_jsonl(dir_ / kExpert)) {
      check_version(j);
      expert_.push_back({j.at("id"), j.at("translation_id"), j.at("quality"), j.at("correction"),
                         get_optional<std::string>(j, "comment"), j.at("author"),
                         parse_utc(j.at("created_at").get<std::string>())});
    }
    for (const json& j : read_jsonl(dir_ / kCommon)) {
      check_version(j);
      common_.push_back({j.at("id"), j.at("translation_id"), j.at("helpfulness").get<int>(),
                         get_optional<std::string>(j, "comment"), parse_utc(j.at("created_at").get<std::string>())});
    }
    for (const json& j : read_jsonl(dir_ / kRatings)) {
      check_version(j);
      const int score = j.at("score");
      ratings_.push_back({j.at("id"), j.at("translation_id"), score, da_band(score),
                          parse_utc(j.at("created_at").get<std::string>())});
    }
  } catch (const json::exception& e) {
    throw FormatError(dir_.string() + ": " + e.what());
  }
}

std::string FeedbackStore::add_translation(TranslationRecord r) {
  if (!(r.stars >= 0.0 && r.stars <= 5.0)) throw Error("stars out of range");
  std::unique_lock lock(mu_);
  if (r.example_id && !example_index_.contains(*r.example_id)) throw NotFound("unknown example id");
  if (r.id.empty()) r.id = next_id("tr", translations_.size());
  if (translation_index_.contains(r.id)) throw Error("duplicate translation id");
  if (r.created_at == 0) r.created_at = now();
  json j = {{"v", 1},
            {"id", r.id},
            {"source", r.source},
            {"direction", to_string(r.direction)},
            {"model", to_string(r.model)},
            {"output", r.output},
            {"stars", r.stars},
            {"created_at", format_utc(r.created_at)}};
  put_optional(j, "example_id", r.example_id);
  append(kTranslations, j.dump());
  translation_index_[r.id] = translations_.size();
  translations_.push_back(std::move(r));
  return translations_.back().id;
}

std::string FeedbackStore::add_example(Language language, std::string text) {
  if (blank(text)) throw Error("empty example text");
  std::unique_lock lock(mu_);
  ExampleItem e{next_id("ex", examples_.size()), language, std::move(text), ExampleStatus::Unlabeled, now()};
  append(kExamples, json{{"v", 1},
                         {"type", "example"},
                         {"id", e.id},
                         {"language", to_string(language)},
                         {"text", e.text},
                         {"created_at", format_utc(e.created_at)}}
                        .dump());
  example_index_[e.id] = examples_.size();
  examples_.push_back(std::move(e));
  return examples_.back().id;
}

std::string FeedbackStore::submit_expert(ExpertFeedback f) {
  if (f.quality < 1 || f.quality > 5) throw Error("quality must be in 1..5");
  if (blank(f.correction)) throw Error("correction must not be empty");
  std::unique_lock lock(mu_);
  const auto t = translation_index_.find(f.translation_id);
  if (t == translation_index_.end()) throw NotFound("unknown translation id");
  f.id = next_id("fe", expert_.size());
  f.created_at = now();
  json j = {{"v", 1},
            {"id", f.id},
            {"translation_id", f.translation_id},
            {"quality", f.quality},
            {"correction", f.correction},
            {"author", f.author},
            {"created_at", format_utc(f.created_at)}};
  put_optional(j, "comment", f.comment);
  append(kExpert, j.dump());
  expert_.push_back(f);

  const auto& example_id = translations_[t->second].example_id;
  if (example_id) {
    auto& item = examples_[example_index_.at(*example_id)];
    if (item.status == ExampleStatus::Unlabeled) {
      append(kExamples,
             json{{"v", 1}, {"type", "label"}, {"id", item.id}, {"created_at", format_utc(f.created_at)}}.dump());
      item.status = ExampleStatus::Labeled;
    }
  }
  return f.id;
}

std::string FeedbackStore::submit_common(CommonFeedback f) {
  if (!f.helpfulness) throw Error("helpfulness rating is required");
  if (*f.helpfulness < 1 || *f.helpfulness > 5) throw Error("helpfulness must be in 1..5");
  std::unique_lock lock(mu_);
  if (!translation_index_.contains(f.translation_id)) throw NotFound("unknown translation id");
  f.id = next_id("fc", common_.size());
  f.created_at = now();
  json j = {{"v", 1},
            {"id", f.id},
            {"translation_id", f.translation_id},
            {"helpfulness", *f.helpfulness},
            {"created_at", format_utc(f.created_at)}};
  put_optional(j, "comment", f.comment);
  append(kCommon, j.dump());
  common_.push_back(std::move(f));
  return common_.back().id;
}

std::string FeedbackStore::record_da(DARating r) {
  r.band = da_band(r.score);
  std::unique_lock lock(mu_);
  if (!translation_index_.contains(r.translation_id)) throw NotFound("unknown translation id");
  r.id = next_id("da", ratings_.size());
  r.created_at = now();
  append(kRatings, json{{"v", 1},
                        {"id", r.id},
                        {"translation_id", r.translation_id},
                        {"score", r.score},
                        {"band", band_label(r.band)},
                        {"created_at", format_utc(r.created_at)}}
                       .dump());
  ratings_.push_back(r);
  return r.id;
}

std::optional<TranslationRecord> FeedbackStore::translation(std::string_view id) const {
  std::shared_lock lock(mu_);
  const auto it = translation_index_.find(id);
  if (it == translation_index_.end()) return std::nullopt;
  return translations_[it->second];
}

std::optional<ExampleItem> FeedbackStore::example(std::string_view id) const {
  std::shared_lock lock(mu_);
  const auto it = example_index_.find(id);
  if (it == example_index_.end()) return std::nullopt;
  return examples_[it->second];
}

std::vector<TranslationRecord> FeedbackStore::translations() const {
  std::shared_lock lock(mu_);
  return translations_;
}

std::vector<ExpertFeedback> FeedbackStore::expert_feedback() const {
  std::shared_lock lock(mu_);
  return expert_;
}

std::vector<CommonFeedback> FeedbackStore::common_feedback() const {
  std::shared_lock lock(mu_);
  return common_;
}

std::vector<DARating> FeedbackStore::ratings() const {
  std::shared_lock lock(mu_);
  return ratings_;
}

std::vector<ExampleItem> FeedbackStore::list_examples() const {
  std::shared_lock lock(mu_);
  return examples_;
}

std::vector<ExampleItem> FeedbackStore::list_examples(Language language, std::optional<ExampleStatus> status) const {
  std::shared_lock lock(mu_);
  std::vector<ExampleItem> out;
  for (const auto& e : examples_)
    if (e.language == language && (!status || e.status == *status)) out.push_back(e);
  return out;
}

std::optional<ExampleItem> FeedbackStore::next_example(Language language) const {
  std::shared_lock lock(mu_);
  for (const auto& e : examples_)
    if (e.language == language && e.status == ExampleStatus::Unlabeled) return e;
  return std::nullopt;
}

StatsReport FeedbackStore::stats() const {
  StatsReport report;
  std::array<std::vector<double>, 4> quality, stars;
  auto slot = [](ModelKind m, Direction d) { return (m == ModelKind::Nmt ? 2 : 0) + (d == Direction::EnChr ? 1 : 0); };
  for (ModelKind m : {ModelKind::Smt, ModelKind::Nmt})
    for (Direction d : {Direction::ChrEn, Direction::EnChr}) {
      report.cells[slot(m, d)].model = m;
      report.cells[slot(m, d)].direction = d;
    }
  {
    std::shared_lock lock(mu_);
    for (const auto& f : expert_) {
      const auto& t = translations_[translation_index_.at(f.translation_id)];
      const int s = slot(t.model, t.direction);
      quality[s].push_back(f.quality);
      stars[s].push_back(t.stars);
    }
  }
  for (int s = 0; s < 4; ++s) {
    auto& c = report.cells[s];
    c.count = quality[s].size();
    if (c.count == 0) continue;
    double sum = 0;
    for (double q : quality[s]) sum += q;
    c.mean_quality = sum / static_cast<double>(c.count);
    try {
      c.pearson = text::pearson(quality[s], stars[s]).r;
    } catch (const Error&) {
    }
  }
  return report;
}

ParallelCorpus FeedbackStore::export_corrections(Direction orientation, bool dedup) const {
  ParallelCorpus corpus;
  corpus.direction = orientation;
  std::shared_lock lock(mu_);
  std::vector<const ExpertFeedback*> chosen;
  if (dedup) {
    std::map<std::string_view, std::size_t> latest;
    for (std::size_t i = 0; i < expert_.size(); ++i) latest[expert_[i].translation_id] = i;
    std::vector<std::size_t> keep;
    for (const auto& [id, i] : latest) keep.push_back(i);
    std::sort(keep.begin(), keep.end());
    for (std::size_t i : keep) chosen.push_back(&expert_[i]);
  } else {
    for (const auto& f : expert_) chosen.push_back(&f);
  }
  for (const ExpertFeedback* f : chosen) {
    const auto& t = translations_[translation_index_.at(f->translation_id)];
    SentencePair p{text::tokenize_13a(t.source), text::tokenize_13a(f->correction)};
    if (t.direction != orientation) std::swap(p.source, p.target);
    corpus.pairs.push_back(std::move(p));
  }
  return corpus;
}

}  // namespace mtloop::feedback
