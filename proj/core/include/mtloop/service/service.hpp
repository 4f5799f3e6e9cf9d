#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mtloop/dict/dictionary.hpp"
#include "mtloop/feedback/store.hpp"
#include "mtloop/models.hpp"

namespace mtloop::service {

inline constexpr std::size_t kMaxTextChars = 2000;  // codepoints
inline constexpr int kApiVersion = 1;

struct ServiceConfig {
  int port = 8080;
  std::filesystem::path data_dir = "data";
  std::filesystem::path model_dir = "models";
  std::vector<std::string> expert_tokens;
  std::optional<std::filesystem::path> dict_file;
  std::optional<std::filesystem::path> static_dir;  // served under "/"

  // MTLOOP_PORT, MTLOOP_DATA_DIR, MTLOOP_MODEL_DIR, MTLOOP_EXPERT_TOKENS
  // (comma-separated), MTLOOP_DICT_FILE. Throws on a malformed port.
  static ServiceConfig from_env();
};

// Transport-neutral request. Header names are matched case-insensitively.
struct Request {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::map<std::string, std::string> headers;
  std::string body;

  std::optional<std::string> header(std::string_view name) const;
};

struct Response {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

// The HTTP API over a feedback store, a model registry and a dictionary.
// handle() is safe to call concurrently. Requests answered with 4xx/5xx
// leave the store untouched.
class Service {
 public:
  Service(std::vector<std::string> expert_tokens, feedback::FeedbackStore& store, const ModelRegistry& models,
          std::shared_ptr<const dict::Dictionary> dictionary = nullptr);

  Response handle(const Request& request) const;

 private:
  Response translate(const Request& r) const;
  Response examples(const Request& r) const;
  Response feedback_common(const Request& r) const;
  Response feedback_expert(const Request& r) const;
  Response stats(const Request& r) const;
  Response health() const;
  Response config() const;
  // Index of the matching expert token, or -1.
  int expert_index(const Request& r) const;

  std::vector<std::string> expert_tokens_;
  feedback::FeedbackStore& store_;
  const ModelRegistry& models_;
  std::shared_ptr<const dict::Dictionary> dictionary_;
};

// Blocking HTTP server around a Service (cpp-httplib). Static files, when
// configured, are served for non-API GET paths.
class HttpServer {
 public:
  explicit HttpServer(const Service& service, std::optional<std::filesystem::path> static_dir = {});
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds; port 0 picks a free port. Returns the bound port, throws on failure.
  int bind(const std::string& host, int port);
  void listen();  // blocks until stop()
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace mtloop::service
