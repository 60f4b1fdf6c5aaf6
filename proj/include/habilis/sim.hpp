#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "habilis/guard.hpp"
#include "habilis/journal.hpp"
#include "habilis/model.hpp"
#include "habilis/result.hpp"

namespace habilis::sim {

inline constexpr std::int64_t kTtlInfinite =
    std::numeric_limits<std::int64_t>::max();

enum class TopologyKind {
  kMonolithRbac,
  kCentralizedHs,
  kDecentralizedReplicas,
};

std::string_view to_string(TopologyKind kind);
std::optional<TopologyKind> topology_kind_from_string(std::string_view text);

struct Topology {
  TopologyKind kind = TopologyKind::kCentralizedHs;
  int service_count = 1;
  int replica_refresh_every = 100;  // DECENTRALIZED_REPLICAS only
  std::int64_t hop_cost_ms = 1;     // constant simulated per-call latency
  std::int64_t cache_ttl_ms = kTtlInfinite;  // CENTRALIZED_HS client caches

  nlohmann::json to_json() const;
  static Result<Topology> from_json(const nlohmann::json& doc);
};

// Deterministic store mutation injected before the request at index `at`.
struct Mutation {
  std::uint64_t at = 0;
  service::CommandKind kind = service::CommandKind::kMigrate;
  nlohmann::json payload;
};

struct Workload {
  std::uint64_t seed = 1;
  std::uint64_t request_count = 0;
  // id -> integer weight; empty pool samples uniformly over the fixture.
  std::map<std::string, std::uint64_t> user_pool;
  std::map<std::string, std::uint64_t> action_pool;
  std::map<std::string, std::uint64_t> resource_pool;
  std::vector<Mutation> mutations;

  nlohmann::json to_json() const;
  static Result<Workload> from_json(const nlohmann::json& doc);
};

struct Request {
  std::string user;
  std::string action;
  std::string resource;

  bool operator==(const Request&) const = default;
};

struct TopologyCounters {
  std::string label;
  std::uint64_t requests = 0;
  std::uint64_t network_calls = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t allows = 0;
  std::map<std::string, std::uint64_t> denies_by_reason;
  std::uint64_t denies_total = 0;
  std::uint64_t stale_decisions = 0;
  std::int64_t simulated_total_latency_ms = 0;

  nlohmann::json to_json() const;
};

struct DecisionMismatch {
  std::uint64_t request_index = 0;
  Request request;
  Decision phase1;
  Decision phase2;
};

struct SimReport {
  nlohmann::json config;
  std::vector<TopologyCounters> topologies;
  std::vector<DecisionMismatch> mismatched_decisions;

  nlohmann::json to_json() const;
  std::string to_table() const;
};

// Seeded request stream shared by every topology run; same seed, same
// sequence.
Result<std::vector<Request>> generate_requests(
    const EntitlementStore& store, const guard::ResourceRegistry& registry,
    const Workload& workload);

// Replays the workload through service_count simulated microservices, each
// embedding the real authorization client (in-memory transport) and the
// data-access guard. Counters are exact; simulated latency is
// networkCalls x hopCost.
Result<SimReport> run_sim(const EntitlementStore& store,
                          const guard::ResourceRegistry& registry,
                          const Topology& topology, const Workload& workload);

struct PhaseOptions {
  int service_count = 1;
  std::int64_t hop_cost_ms = 1;
  std::int64_t cache_ttl_ms = kTtlInfinite;
};

// Runs the same seeded workload under phase 1 (remote legacy boolean, geo
// absent) and phase 2 (macro fetch + membership + data-access guard) and
// diffs the decisions request by request.
Result<SimReport> compare_phases(const EntitlementStore& store,
                                 const guard::ResourceRegistry& registry,
                                 const Workload& workload,
                                 const PhaseOptions& options = {});

}  // namespace habilis::sim
