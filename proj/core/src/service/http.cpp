#include <httplib.h>

#include "mtloop/error.hpp"
#include "mtloop/service/service.hpp"

namespace mtloop::service {

struct HttpServer::Impl {
  const Service& service;
  httplib::Server server;

  explicit Impl(const Service& s) : service(s) {}

  void forward(const httplib::Request& in, httplib::Response& out) {
    Request r;
    r.method = in.method;
    r.path = in.path;
    for (const auto& [k, v] : in.params) r.query.emplace(k, v);
    for (const auto& [k, v] : in.headers) r.headers.emplace(k, v);
    r.body = in.body;
    const Response resp = service.handle(r);
    out.status = resp.status;
    out.set_content(resp.body, resp.content_type);
  }
};

HttpServer::HttpServer(const Service& service, std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>(service)) {
  auto handler = [this](const httplib::Request& in, httplib::Response& out) { impl_->forward(in, out); };
  impl_->server.Get("/api/.*", handler);
  impl_->server.Post("/api/.*", handler);
  impl_->server.Put("/api/.*", handler);
  impl_->server.Delete("/api/.*", handler);
  if (static_dir && !impl_->server.set_mount_point("/", static_dir->string()))
    throw Error("static directory not found: " + static_dir->string());
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw Error("cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace mtloop::service
