#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "habilis/service.hpp"

namespace habilis::client {

struct TransportReply {
  int status = 0;
  nlohmann::json body;
  std::size_t body_bytes = 0;  // serialized payload size on the wire
};

using HeaderList = std::vector<std::pair<std::string, std::string>>;

// Narrow request channel to the habilitation service. nullopt means the
// upstream is unreachable; HTTP statuses come back in TransportReply. The
// in-memory and HTTP implementations carry the same documents, so code built
// on this interface behaves identically under simulation and on the wire.
class Transport {
 public:
  virtual ~Transport() = default;

  virtual std::optional<TransportReply> get(const std::string& path,
                                            const HeaderList& headers) = 0;
  virtual std::optional<TransportReply> post(const std::string& path,
                                             const nlohmann::json& body) = 0;
};

// Direct dispatch onto a ServiceCore, bypassing sockets but not documents.
class InMemoryTransport : public Transport {
 public:
  explicit InMemoryTransport(service::ServiceCore& core) : core_(core) {}

  std::optional<TransportReply> get(const std::string& path,
                                    const HeaderList& headers) override;
  std::optional<TransportReply> post(const std::string& path,
                                     const nlohmann::json& body) override;

  void set_reachable(bool reachable) { reachable_ = reachable; }

 private:
  service::ServiceCore& core_;
  std::atomic<bool> reachable_{true};
};

// httplib-backed transport speaking to a real endpoint ("http://host:port").
class HttpTransport : public Transport {
 public:
  explicit HttpTransport(std::string base_url);

  std::optional<TransportReply> get(const std::string& path,
                                    const HeaderList& headers) override;
  std::optional<TransportReply> post(const std::string& path,
                                     const nlohmann::json& body) override;

 private:
  std::string base_url_;
};

// Decorator counting calls and payload bytes; the instrumentation used by
// tests and the fleet simulator.
class CountingTransport : public Transport {
 public:
  explicit CountingTransport(std::shared_ptr<Transport> inner)
      : inner_(std::move(inner)) {}

  std::optional<TransportReply> get(const std::string& path,
                                    const HeaderList& headers) override;
  std::optional<TransportReply> post(const std::string& path,
                                     const nlohmann::json& body) override;

  std::uint64_t calls() const { return calls_.load(); }
  std::uint64_t bytes_received() const { return bytes_received_.load(); }

 private:
  std::shared_ptr<Transport> inner_;
  std::atomic<std::uint64_t> calls_{0};
  std::atomic<std::uint64_t> bytes_received_{0};
};

}  // namespace habilis::client
