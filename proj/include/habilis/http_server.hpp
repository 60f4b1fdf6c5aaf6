#pragma once

#include <memory>
#include <string>
#include <thread>

#include "habilis/service.hpp"

namespace httplib {
class Server;
}

namespace habilis::service {

// HTTP/JSON adapter over ServiceCore. Listening starts only after the store
// has been loaded, so the endpoints are unavailable during replay.
class HttpServer {
 public:
  HttpServer(ServiceCore& core, std::string admin_secret);
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds and serves on a background thread. port 0 picks a free port.
  // Returns false when the address cannot be bound.
  bool start(const std::string& host, int port);
  void stop();

  int port() const { return port_; }
  bool running() const;

 private:
  void register_routes();

  ServiceCore& core_;
  std::string admin_secret_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace habilis::service
