#include "mtloop/service/service.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>

#include <json.hpp>

#include "mtloop/error.hpp"
#include "mtloop/qe/features.hpp"
#include "mtloop/qe/gbt.hpp"
#include "mtloop/qe/stars.hpp"
#include "mtloop/text/utf8.hpp"

namespace mtloop::service {

using nlohmann::json;
using feedback::ModelKind;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

Response reply(int status, json body) {
  body["v"] = kApiVersion;
  return {status, body.dump(), "application/json"};
}

Response fail(int status, const std::string& message) { return reply(status, json{{"error", message}}); }

// Parsed JSON object body, or nullopt when it is not one.
std::optional<json> object_body(const Request& r) {
  json j = json::parse(r.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  return j;
}

// Field accessors: nullopt for a missing/null field, Error for a wrong type.
std::optional<std::string> opt_string(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw Error(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

std::string req_string(const json& j, const char* key) {
  auto v = opt_string(j, key);
  if (!v) throw Error(std::string("missing field '") + key + "'");
  return *v;
}

std::optional<int> opt_int(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_integer()) throw Error(std::string("field '") + key + "' must be an integer");
  const auto v = it->get<std::int64_t>();
  if (v < -1'000'000 || v > 1'000'000) throw Error(std::string("field '") + key + "' out of range");
  return static_cast<int>(v);
}

json entries_json(const std::vector<dict::DictEntry>& entries) {
  json arr = json::array();
  for (const auto& e : entries)
    arr.push_back({{"headword", e.headword}, {"language", std::string(to_string(e.language))}, {"gloss", e.gloss},
                   {"notes", e.notes}});
  return arr;
}

json example_json(const feedback::ExampleItem& e) {
  return {{"id", e.id},
          {"language", std::string(to_string(e.language))},
          {"text", e.text},
          {"status", std::string(feedback::to_string(e.status))},
          {"created_at", feedback::format_utc(e.created_at)}};
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

ServiceConfig ServiceConfig::from_env() {
  ServiceConfig c;
  if (const char* p = std::getenv("MTLOOP_PORT"); p && *p) {
    char* end = nullptr;
    const long port = std::strtol(p, &end, 10);
    if (*end != '\0' || port < 0 || port > 65535) throw Error(std::string("MTLOOP_PORT: invalid port '") + p + "'");
    c.port = static_cast<int>(port);
  }
  if (const char* p = std::getenv("MTLOOP_DATA_DIR"); p && *p) c.data_dir = p;
  if (const char* p = std::getenv("MTLOOP_MODEL_DIR"); p && *p) c.model_dir = p;
  if (const char* p = std::getenv("MTLOOP_DICT_FILE"); p && *p) c.dict_file = p;
  if (const char* p = std::getenv("MTLOOP_EXPERT_TOKENS")) {
    std::string_view rest = p;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const auto tok = trim(rest.substr(0, comma));
      if (!tok.empty()) c.expert_tokens.emplace_back(tok);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
  }
  return c;
}

std::optional<std::string> Request::header(std::string_view name) const {
  const std::string want = lower(name);
  for (const auto& [k, v] : headers)
    if (lower(k) == want) return v;
  return std::nullopt;
}

Service::Service(std::vector<std::string> expert_tokens, feedback::FeedbackStore& store, const ModelRegistry& models,
                 std::shared_ptr<const dict::Dictionary> dictionary)
    : expert_tokens_(std::move(expert_tokens)),
      store_(store),
      models_(models),
      dictionary_(dictionary ? std::move(dictionary) : std::make_shared<const dict::Dictionary>()) {}

Response Service::handle(const Request& r) const {
  struct Route {
    const char* method;
    const char* path;
    Response (Service::*fn)(const Request&) const;
  };
  static const Route routes[] = {
      {"POST", "/api/translate", &Service::translate},
      {"GET", "/api/examples", &Service::examples},
      {"POST", "/api/feedback/common", &Service::feedback_common},
      {"POST", "/api/feedback/expert", &Service::feedback_expert},
      {"GET", "/api/stats", &Service::stats},
  };
  try {
    for (const auto& route : routes) {
      if (r.path != route.path) continue;
      if (r.method != route.method) return fail(405, "method not allowed");
      return (this->*route.fn)(r);
    }
    if (r.path == "/api/health") return r.method == "GET" ? health() : fail(405, "method not allowed");
    if (r.path == "/api/config") return r.method == "GET" ? config() : fail(405, "method not allowed");
    return fail(404, "no such endpoint");
  } catch (const StorageError& e) {
    return fail(503, e.what());
  } catch (const std::exception& e) {
    return fail(500, std::string("internal error: ") + e.what());
  }
}

int Service::expert_index(const Request& r) const {
  const auto auth = r.header("Authorization");
  if (!auth) return -1;
  std::string_view v = trim(*auth);
  if (v.size() < 7 || lower(v.substr(0, 7)) != "bearer ") return -1;
  const std::string_view token = trim(v.substr(7));
  if (token.empty()) return -1;
  for (std::size_t i = 0; i < expert_tokens_.size(); ++i)
    if (expert_tokens_[i] == token) return static_cast<int>(i);
  return -1;
}

Response Service::translate(const Request& r) const {
  const auto body = object_body(r);
  if (!body) return fail(400, "body must be a JSON object");

  std::string text;
  Direction direction{};
  ModelKind model{};
  std::optional<std::string> example_id;
  try {
    text = req_string(*body, "text");
    direction = parse_direction(req_string(*body, "direction"));
    model = feedback::parse_model_kind(req_string(*body, "model"));
    example_id = opt_string(*body, "example_id");
    if (trim(text).empty()) return fail(400, "text is empty");
    if (text::codepoint_length(text) > kMaxTextChars)
      return fail(400, "text exceeds " + std::to_string(kMaxTextChars) + " characters");
  } catch (const Error& e) {
    return fail(400, e.what());
  }
  if (example_id && !store_.example(*example_id)) return fail(400, "unknown example '" + *example_id + "'");

  const DirectionModels models = models_.get(direction);
  const TokenSeq src = text::tokenize_13a(text);
  TokenSeq tgt;
  double stars = 0.0;
  json alignment;
  if (model == ModelKind::Smt) {
    if (!models.smt || !models.smt_qe) return fail(503, std::string(to_string(direction)) + " SMT model not loaded");
    const smt::SmtHypothesis hyp = models.smt->translate(src);
    tgt = hyp.target;
    if (!tgt.empty()) stars = qe::stars_from_bleu(qe::gbt_predict(*models.smt_qe, qe::smt_features(hyp))).stars;
    json links = json::array();
    for (const auto& [s, t] : hyp.hard_alignment) links.push_back({s, t});
    alignment = {{"kind", "hard"}, {"links", std::move(links)}};
  } else {
    if (!models.nmt) return fail(503, std::string(to_string(direction)) + " NMT model not loaded");
    const nmt::NmtHypothesis hyp = models.nmt->translate(src);
    tgt = hyp.target;
    if (!tgt.empty()) stars = qe::stars_from_prob(hyp);
    alignment = {{"kind", "soft"}, {"matrix", hyp.attention}};
  }

  json dict_src = json::array(), dict_tgt = json::array();
  for (const auto& t : src) dict_src.push_back(entries_json(dictionary_->lookup(t)));
  for (const auto& t : tgt) dict_tgt.push_back(entries_json(dictionary_->lookup(t)));

  feedback::TranslationRecord record;
  record.source = text;
  record.direction = direction;
  record.model = model;
  record.output = text::join(tgt);
  record.stars = stars;
  record.example_id = example_id;
  const std::string id = store_.add_translation(record);

  return reply(200, {{"translation_id", id},
                     {"direction", std::string(to_string(direction))},
                     {"model", std::string(feedback::to_string(model))},
                     {"output", record.output},
                     {"stars", std::round(stars * 10.0) / 10.0},
                     {"stars_raw", stars},
                     {"alignment", std::move(alignment)},
                     {"src_tokens", src},
                     {"tgt_tokens", tgt},
                     {"dict_src", std::move(dict_src)},
                     {"dict_tgt", std::move(dict_tgt)}});
}

Response Service::examples(const Request& r) const {
  std::optional<Language> lang;
  std::optional<feedback::ExampleStatus> status;
  try {
    if (auto it = r.query.find("lang"); it != r.query.end() && !it->second.empty()) lang = parse_language(it->second);
  } catch (const Error& e) {
    return fail(400, e.what());
  }
  try {
    if (auto it = r.query.find("status"); it != r.query.end() && !it->second.empty())
      status = feedback::parse_example_status(it->second);
  } catch (const Error& e) {
    return fail(400, e.what());
  }
  std::vector<feedback::ExampleItem> items = lang ? store_.list_examples(*lang, status) : store_.list_examples();
  if (!lang && status) std::erase_if(items, [&](const auto& e) { return e.status != *status; });
  json arr = json::array();
  for (const auto& e : items) arr.push_back(example_json(e));
  return reply(200, {{"examples", std::move(arr)}});
}

Response Service::feedback_common(const Request& r) const {
  const auto body = object_body(r);
  if (!body) return fail(400, "body must be a JSON object");
  const auto terms = body->find("accepted_terms");
  if (terms == body->end() || !terms->is_boolean() || !terms->get<bool>())
    return fail(403, "terms of use must be accepted");
  feedback::CommonFeedback f;
  try {
    f.translation_id = req_string(*body, "translation_id");
    f.helpfulness = opt_int(*body, "helpfulness");
    f.comment = opt_string(*body, "comment");
    const std::string id = store_.submit_common(std::move(f));
    return reply(201, {{"id", id}});
  } catch (const feedback::NotFound& e) {
    return fail(404, e.what());
  } catch (const FormatError&) {
    throw;
  } catch (const StorageError&) {
    throw;
  } catch (const Error& e) {
    return fail(400, e.what());
  }
}

Response Service::feedback_expert(const Request& r) const {
  const int expert = expert_index(r);
  if (expert < 0) return fail(401, "expert authorization required");
  const auto body = object_body(r);
  if (!body) return fail(400, "body must be a JSON object");
  feedback::ExpertFeedback f;
  try {
    f.translation_id = req_string(*body, "translation_id");
    const auto quality = opt_int(*body, "quality");
    if (!quality) throw Error("missing field 'quality'");
    f.quality = *quality;
    f.correction = req_string(*body, "correction");
    if (trim(f.correction).empty()) throw Error("correction is empty");
    f.comment = opt_string(*body, "comment");
    f.author = opt_string(*body, "author").value_or("expert-" + std::to_string(expert + 1));
    const std::string id = store_.submit_expert(std::move(f));
    return reply(201, {{"id", id}});
  } catch (const feedback::NotFound& e) {
    return fail(404, e.what());
  } catch (const FormatError&) {
    throw;
  } catch (const StorageError&) {
    throw;
  } catch (const Error& e) {
    return fail(400, e.what());
  }
}

Response Service::stats(const Request& r) const {
  if (expert_index(r) < 0) return fail(401, "expert authorization required");
  const feedback::StatsReport report = store_.stats();
  json cells = json::array();
  for (const auto& c : report.cells)
    cells.push_back({{"model", std::string(feedback::to_string(c.model))},
                     {"direction", std::string(to_string(c.direction))},
                     {"count", c.count},
                     {"mean_quality", optional_number(c.mean_quality)},
                     {"pearson", optional_number(c.pearson)}});
  return reply(200, {{"cells", std::move(cells)}});
}

Response Service::health() const {
  json versions = json::object();
  json issues = json::array();
  for (Direction d : {Direction::ChrEn, Direction::EnChr}) {
    const std::string dir(to_string(d));
    const DirectionModels m = models_.get(d);
    const std::string gen = "g" + std::to_string(models_.generation(d));
    json v = json::object();
    auto add = [&](const char* name, bool loaded) {
      v[name] = loaded ? json(dir + "/" + name + "@" + gen) : json(nullptr);
      if (!loaded) issues.push_back(dir + " " + name + " model not loaded");
    };
    add("smt", m.smt != nullptr);
    add("smt_qe", m.smt_qe != nullptr);
    add("nmt", m.nmt != nullptr);
    versions[dir] = std::move(v);
  }
  const bool writable = store_.writable();
  if (!writable) issues.push_back("data directory not writable");
  return reply(200, {{"status", issues.empty() ? "ok" : "degraded"},
                     {"model_versions", std::move(versions)},
                     {"data_dir_writable", writable},
                     {"dictionary_entries", dictionary_->size()},
                     {"issues", std::move(issues)}});
}

Response Service::config() const {
  return reply(200, {{"max_text_chars", kMaxTextChars},
                     {"directions", {"chr-en", "en-chr"}},
                     {"models", {"smt", "nmt"}},
                     {"dict_limit", dict::kDefaultLookupLimit},
                     {"terms_required", true},
                     {"expert_auth", "bearer"}});
}

}  // namespace mtloop::service
