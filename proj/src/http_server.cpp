#include "habilis/http_server.hpp"

#include <chrono>

#include <httplib.h>
#include <json.hpp>

namespace habilis::service {

using nlohmann::json;

namespace {

void send(httplib::Response& res, const DocResponse& doc) {
  res.status = doc.status;
  res.set_content(doc.body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const char* code,
                const std::string& message) {
  res.status = status;
  res.set_content(json{{"code", code}, {"message", message}}.dump(),
                  "application/json");
}

json parse_body(const httplib::Request& req) {
  return json::parse(req.body, nullptr, false);
}

}  // namespace

HttpServer::HttpServer(ServiceCore& core, std::string admin_secret)
    : core_(core),
      admin_secret_(std::move(admin_secret)),
      server_(std::make_unique<httplib::Server>()) {
  register_routes();
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::register_routes() {
  auto& svr = *server_;

  svr.Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
    send(res, core_.handle_health());
  });

  svr.Get(R"(/v1/users/([^/]+)/grants)",
          [this](const httplib::Request& req, httplib::Response& res) {
            std::optional<std::string> known;
            if (req.has_header("X-Known-Generation")) {
              known = req.get_header_value("X-Known-Generation");
            }
            send(res, core_.handle_get_grants(req.matches[1], known));
          });

  svr.Post("/v1/authorize",
           [this](const httplib::Request& req, httplib::Response& res) {
             json body = parse_body(req);
             if (body.is_discarded()) {
               send_error(res, 400, "MALFORMED_REQUEST",
                          "request body is not valid JSON");
               return;
             }
             send(res, core_.handle_authorize(body));
           });

  auto admin_guarded = [this](const httplib::Request& req,
                              httplib::Response& res,
                              auto&& handler) {
    const std::string expected = "Bearer " + admin_secret_;
    if (admin_secret_.empty() ||
        req.get_header_value("Authorization") != expected) {
      send_error(res, 401, "UNAUTHORIZED", "admin capability token required");
      return;
    }
    json body = json::object();
    if (!req.body.empty()) {
      body = parse_body(req);
      if (body.is_discarded()) {
        send_error(res, 400, "MALFORMED_REQUEST",
                   "request body is not valid JSON");
        return;
      }
    }
    handler(body);
  };

  svr.Post("/v1/admin/commands",
           [this, admin_guarded](const httplib::Request& req,
                                 httplib::Response& res) {
             admin_guarded(req, res, [this, &res](const json& body) {
               send(res, core_.handle_admin_command(body));
             });
           });

  svr.Post("/v1/admin/import",
           [this, admin_guarded](const httplib::Request& req,
                                 httplib::Response& res) {
             admin_guarded(req, res, [this, &res](const json& body) {
               send(res, core_.handle_import(body));
             });
           });

  svr.Post("/v1/admin/migrate",
           [this, admin_guarded](const httplib::Request& req,
                                 httplib::Response& res) {
             admin_guarded(req, res, [this, &res](const json&) {
               send(res, core_.handle_migrate());
             });
           });
}

bool HttpServer::start(const std::string& host, int port) {
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
    if (port_ < 0) return false;
  } else {
    if (!server_->bind_to_port(host, port)) return false;
    port_ = port;
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return true;
}

void HttpServer::stop() {
  if (server_ && server_->is_running()) server_->stop();
  if (thread_.joinable()) thread_.join();
}

bool HttpServer::running() const { return server_ && server_->is_running(); }

}  // namespace habilis::service
