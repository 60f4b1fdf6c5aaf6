#include "habilis/transport.hpp"

#include <httplib.h>

namespace habilis::client {

using nlohmann::json;

namespace {

TransportReply from_doc(const service::DocResponse& doc) {
  TransportReply reply;
  reply.status = doc.status;
  reply.body = doc.body;
  reply.body_bytes = doc.body.dump().size();
  return reply;
}

constexpr const char* kGrantsPrefix = "/v1/users/";
constexpr const char* kGrantsSuffix = "/grants";

}  // namespace

std::optional<TransportReply> InMemoryTransport::get(const std::string& path,
                                                     const HeaderList& headers) {
  if (!reachable_.load()) return std::nullopt;

  if (path == "/v1/health") return from_doc(core_.handle_health());

  const std::string prefix = kGrantsPrefix;
  const std::string suffix = kGrantsSuffix;
  if (path.size() > prefix.size() + suffix.size() &&
      path.compare(0, prefix.size(), prefix) == 0 &&
      path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0) {
    const std::string user =
        path.substr(prefix.size(), path.size() - prefix.size() - suffix.size());
    std::optional<std::string> known;
    for (const auto& [name, value] : headers) {
      if (name == "X-Known-Generation") known = value;
    }
    return from_doc(core_.handle_get_grants(user, known));
  }

  return TransportReply{404, json{{"code", "NOT_FOUND"}, {"message", path}}, 0};
}

std::optional<TransportReply> InMemoryTransport::post(const std::string& path,
                                                      const json& body) {
  if (!reachable_.load()) return std::nullopt;
  if (path == "/v1/authorize") return from_doc(core_.handle_authorize(body));
  return TransportReply{404, json{{"code", "NOT_FOUND"}, {"message", path}}, 0};
}

HttpTransport::HttpTransport(std::string base_url)
    : base_url_(std::move(base_url)) {}

namespace {

std::optional<TransportReply> to_reply(const httplib::Result& result) {
  if (!result) return std::nullopt;
  TransportReply reply;
  reply.status = result->status;
  reply.body_bytes = result->body.size();
  reply.body = json::parse(result->body, nullptr, false);
  if (reply.body.is_discarded()) reply.body = json::object();
  return reply;
}

}  // namespace

std::optional<TransportReply> HttpTransport::get(const std::string& path,
                                                 const HeaderList& headers) {
  httplib::Client client(base_url_);
  client.set_connection_timeout(2, 0);
  client.set_read_timeout(5, 0);
  httplib::Headers request_headers;
  for (const auto& [name, value] : headers) {
    request_headers.emplace(name, value);
  }
  return to_reply(client.Get(path, request_headers));
}

std::optional<TransportReply> HttpTransport::post(const std::string& path,
                                                  const json& body) {
  httplib::Client client(base_url_);
  client.set_connection_timeout(2, 0);
  client.set_read_timeout(5, 0);
  return to_reply(client.Post(path, body.dump(), "application/json"));
}

std::optional<TransportReply> CountingTransport::get(const std::string& path,
                                                     const HeaderList& headers) {
  calls_.fetch_add(1);
  auto reply = inner_->get(path, headers);
  if (reply) bytes_received_.fetch_add(reply->body_bytes);
  return reply;
}

std::optional<TransportReply> CountingTransport::post(const std::string& path,
                                                      const json& body) {
  calls_.fetch_add(1);
  auto reply = inner_->post(path, body);
  if (reply) bytes_received_.fetch_add(reply->body_bytes);
  return reply;
}

}  // namespace habilis::client
