#include "habilis/sim.hpp"

#include <algorithm>
#include <iomanip>
#include <memory>
#include <random>
#include <sstream>

#include "habilis/client.hpp"
#include "habilis/engine.hpp"
#include "habilis/migrate.hpp"
#include "habilis/service.hpp"
#include "habilis/store.hpp"

namespace habilis::sim {

using nlohmann::json;

std::string_view to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::kMonolithRbac: return "MONOLITH_RBAC";
    case TopologyKind::kCentralizedHs: return "CENTRALIZED_HS";
    case TopologyKind::kDecentralizedReplicas: return "DECENTRALIZED_REPLICAS";
  }
  return "CENTRALIZED_HS";
}

std::optional<TopologyKind> topology_kind_from_string(std::string_view text) {
  if (text == "MONOLITH_RBAC") return TopologyKind::kMonolithRbac;
  if (text == "CENTRALIZED_HS") return TopologyKind::kCentralizedHs;
  if (text == "DECENTRALIZED_REPLICAS") return TopologyKind::kDecentralizedReplicas;
  return std::nullopt;
}

namespace {

// -1 stands for "never expires" in config documents.
json ttl_to_json(std::int64_t ttl_ms) {
  if (ttl_ms == kTtlInfinite) return -1;
  return ttl_ms;
}

Result<std::int64_t> ttl_from_json(const json& value) {
  if (!value.is_number_integer()) {
    return Error{Errc::kMalformedRequest, "ttlMs must be an integer",
                 std::nullopt};
  }
  const std::int64_t ttl = value.get<std::int64_t>();
  if (ttl == -1) return kTtlInfinite;
  if (ttl < 0) {
    return Error{Errc::kMalformedRequest, "ttlMs must be >= 0 or -1 (infinite)",
                 std::nullopt};
  }
  return ttl;
}

}  // namespace

json Topology::to_json() const {
  return {{"kind", std::string(to_string(kind))},
          {"serviceCount", service_count},
          {"replicaRefreshEvery", replica_refresh_every},
          {"hopCostMs", hop_cost_ms},
          {"ttlMs", ttl_to_json(cache_ttl_ms)}};
}

Result<Topology> Topology::from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("kind") || !doc["kind"].is_string()) {
    return Error{Errc::kMalformedRequest,
                 "topology needs a string 'kind'", std::nullopt};
  }
  auto kind = topology_kind_from_string(doc["kind"].get<std::string>());
  if (!kind) {
    return Error{Errc::kMalformedRequest,
                 "unknown topology kind '" + doc["kind"].get<std::string>() + "'",
                 std::nullopt};
  }
  Topology topology;
  topology.kind = *kind;
  if (doc.contains("serviceCount")) {
    topology.service_count = doc["serviceCount"].get<int>();
  }
  if (doc.contains("replicaRefreshEvery")) {
    topology.replica_refresh_every = doc["replicaRefreshEvery"].get<int>();
  }
  if (doc.contains("hopCostMs")) {
    topology.hop_cost_ms = doc["hopCostMs"].get<std::int64_t>();
  }
  if (doc.contains("ttlMs")) {
    auto ttl = ttl_from_json(doc["ttlMs"]);
    if (!ttl) return ttl.error();
    topology.cache_ttl_ms = ttl.value();
  }
  if (topology.service_count < 1) {
    return Error{Errc::kMalformedRequest, "serviceCount must be >= 1",
                 std::nullopt};
  }
  if (topology.replica_refresh_every < 1) {
    return Error{Errc::kMalformedRequest, "replicaRefreshEvery must be >= 1",
                 std::nullopt};
  }
  return topology;
}

namespace {

json pool_to_json(const std::map<std::string, std::uint64_t>& pool) {
  json doc = json::object();
  for (const auto& [id, weight] : pool) doc[id] = weight;
  return doc;
}

Result<std::map<std::string, std::uint64_t>> pool_from_json(
    const json& value, const char* name) {
  std::map<std::string, std::uint64_t> pool;
  if (!value.is_object()) {
    return Error{Errc::kMalformedRequest,
                 std::string(name) + " must map ids to integer weights",
                 std::nullopt};
  }
  for (const auto& [id, weight] : value.items()) {
    if (!weight.is_number_unsigned() || weight.get<std::uint64_t>() == 0) {
      return Error{Errc::kMalformedRequest,
                   std::string(name) + " weights must be positive integers",
                   std::nullopt};
    }
    pool[id] = weight.get<std::uint64_t>();
  }
  return pool;
}

}  // namespace

json Workload::to_json() const {
  json doc{{"seed", seed}, {"requestCount", request_count}};
  if (!user_pool.empty()) doc["userPool"] = pool_to_json(user_pool);
  if (!action_pool.empty()) doc["actionPool"] = pool_to_json(action_pool);
  if (!resource_pool.empty()) doc["resourcePool"] = pool_to_json(resource_pool);
  if (!mutations.empty()) {
    json list = json::array();
    for (const auto& m : mutations) {
      list.push_back({{"at", m.at},
                      {"kind", std::string(service::to_string(m.kind))},
                      {"payload", m.payload}});
    }
    doc["mutations"] = std::move(list);
  }
  return doc;
}

Result<Workload> Workload::from_json(const json& doc) {
  if (!doc.is_object()) {
    return Error{Errc::kMalformedRequest, "workload must be an object",
                 std::nullopt};
  }
  Workload workload;
  if (doc.contains("seed")) workload.seed = doc["seed"].get<std::uint64_t>();
  if (doc.contains("requestCount")) {
    workload.request_count = doc["requestCount"].get<std::uint64_t>();
  }
  if (doc.contains("userPool")) {
    auto pool = pool_from_json(doc["userPool"], "userPool");
    if (!pool) return pool.error();
    workload.user_pool = std::move(pool).value();
  }
  if (doc.contains("actionPool")) {
    auto pool = pool_from_json(doc["actionPool"], "actionPool");
    if (!pool) return pool.error();
    workload.action_pool = std::move(pool).value();
  }
  if (doc.contains("resourcePool")) {
    auto pool = pool_from_json(doc["resourcePool"], "resourcePool");
    if (!pool) return pool.error();
    workload.resource_pool = std::move(pool).value();
  }
  if (doc.contains("mutations")) {
    if (!doc["mutations"].is_array()) {
      return Error{Errc::kMalformedRequest, "mutations must be an array",
                   std::nullopt};
    }
    for (const auto& item : doc["mutations"]) {
      if (!item.is_object() || !item.contains("at") ||
          !item["at"].is_number_unsigned() || !item.contains("kind") ||
          !item["kind"].is_string()) {
        return Error{Errc::kMalformedRequest,
                     "mutations need unsigned 'at' and string 'kind'",
                     std::nullopt};
      }
      auto kind = service::command_kind_from_string(item["kind"].get<std::string>());
      if (!kind) {
        return Error{Errc::kMalformedRequest,
                     "unknown mutation kind '" + item["kind"].get<std::string>() + "'",
                     std::nullopt};
      }
      Mutation mutation;
      mutation.at = item["at"].get<std::uint64_t>();
      mutation.kind = *kind;
      mutation.payload =
          item.contains("payload") ? item["payload"] : json::object();
      workload.mutations.push_back(std::move(mutation));
    }
  }
  return workload;
}

json TopologyCounters::to_json() const {
  return {{"label", label},
          {"requests", requests},
          {"networkCalls", network_calls},
          {"cacheHits", cache_hits},
          {"allows", allows},
          {"denies", pool_to_json(denies_by_reason)},
          {"deniesTotal", denies_total},
          {"staleDecisions", stale_decisions},
          {"simulatedTotalLatencyMs", simulated_total_latency_ms}};
}

json SimReport::to_json() const {
  json topo = json::array();
  for (const auto& counters : topologies) topo.push_back(counters.to_json());
  json mismatches = json::array();
  for (const auto& m : mismatched_decisions) {
    json phase1 = decision_to_json(m.phase1);
    json phase2 = decision_to_json(m.phase2);
    mismatches.push_back({{"requestIndex", m.request_index},
                          {"user", m.request.user},
                          {"action", m.request.action},
                          {"resource", m.request.resource},
                          {"phase1", std::move(phase1)},
                          {"phase2", std::move(phase2)}});
  }
  return {{"config", config},
          {"topologies", std::move(topo)},
          {"mismatchedDecisions", std::move(mismatches)},
          {"mismatchCount", mismatched_decisions.size()}};
}

std::string SimReport::to_table() const {
  std::ostringstream out;
  out << std::left << std::setw(24) << "topology" << std::right
      << std::setw(10) << "requests" << std::setw(10) << "netCalls"
      << std::setw(11) << "cacheHits" << std::setw(8) << "allows"
      << std::setw(8) << "denies" << std::setw(7) << "stale"
      << std::setw(11) << "latencyMs" << '\n';
  for (const auto& t : topologies) {
    out << std::left << std::setw(24) << t.label << std::right
        << std::setw(10) << t.requests << std::setw(10) << t.network_calls
        << std::setw(11) << t.cache_hits << std::setw(8) << t.allows
        << std::setw(8) << t.denies_total << std::setw(7) << t.stale_decisions
        << std::setw(11) << t.simulated_total_latency_ms << '\n';
  }
  out << "mismatched decisions: " << mismatched_decisions.size() << '\n';
  return out.str();
}

namespace {

struct WeightedPool {
  std::vector<std::pair<std::string, std::uint64_t>> entries;
  std::uint64_t total = 0;
};

Result<WeightedPool> build_pool(const std::map<std::string, std::uint64_t>& given,
                                const std::vector<std::string>& universe,
                                const char* name) {
  WeightedPool pool;
  if (given.empty()) {
    for (const auto& id : universe) pool.entries.emplace_back(id, 1);
  } else {
    std::set<std::string> known(universe.begin(), universe.end());
    for (const auto& [id, weight] : given) {
      if (!known.count(id)) {
        return Error{Errc::kMalformedRequest,
                     std::string(name) + " references unknown id '" + id + "'",
                     std::nullopt};
      }
      pool.entries.emplace_back(id, weight);
    }
  }
  for (const auto& [id, weight] : pool.entries) pool.total += weight;
  if (pool.total == 0) {
    return Error{Errc::kMalformedRequest,
                 std::string(name) + " is empty; nothing to sample",
                 std::nullopt};
  }
  return pool;
}

const std::string& pick(const WeightedPool& pool, std::mt19937_64& rng) {
  std::uint64_t target = rng() % pool.total;
  for (const auto& [id, weight] : pool.entries) {
    if (target < weight) return id;
    target -= weight;
  }
  return pool.entries.back().first;
}

}  // namespace

Result<std::vector<Request>> generate_requests(
    const EntitlementStore& store, const guard::ResourceRegistry& registry,
    const Workload& workload) {
  std::vector<Request> requests;
  if (workload.request_count == 0) return requests;

  std::vector<std::string> users;
  for (const auto& [id, user] : store.users) users.push_back(id);
  std::vector<std::string> actions(store.permissions.begin(),
                                   store.permissions.end());
  std::vector<std::string> resources;
  for (const auto& resource : registry.all()) resources.push_back(resource.id);

  auto user_pool = build_pool(workload.user_pool, users, "userPool");
  if (!user_pool) return user_pool.error();
  auto action_pool = build_pool(workload.action_pool, actions, "actionPool");
  if (!action_pool) return action_pool.error();
  auto resource_pool =
      build_pool(workload.resource_pool, resources, "resourcePool");
  if (!resource_pool) return resource_pool.error();

  std::mt19937_64 rng(workload.seed);
  requests.reserve(workload.request_count);
  for (std::uint64_t i = 0; i < workload.request_count; ++i) {
    Request request;
    request.user = pick(user_pool.value(), rng);
    request.action = pick(action_pool.value(), rng);
    request.resource = pick(resource_pool.value(), rng);
    requests.push_back(std::move(request));
  }
  return requests;
}

namespace {

struct LegOutcome {
  TopologyCounters counters;
  struct Recorded {
    Decision decision;
    std::uint64_t generation = 0;
  };
  std::vector<Recorded> decisions;
};

// Replays the request stream against one topology. The simulator advances a
// single logical clock; services are interleaved deterministically in
// round-robin order.
Result<LegOutcome> run_leg(const EntitlementStore& store,
                           const guard::ResourceRegistry& registry,
                           const Topology& topology, const Workload& workload,
                           const std::vector<Request>& requests,
                           const std::string& label) {
  LegOutcome outcome;
  outcome.counters.label = label;

  auto clock_now = std::make_shared<std::int64_t>(0);
  ClockMillisFn clock = [clock_now] { return *clock_now; };

  service::ServiceOptions options;
  options.initial_store = store;
  options.clock = clock;
  auto core = service::ServiceCore::open(std::move(options));
  if (!core) return core.error();
  service::ServiceCore& hs = *core.value();

  auto counting = std::make_shared<client::CountingTransport>(
      std::make_shared<client::InMemoryTransport>(hs));

  std::vector<std::unique_ptr<client::AuthzClient>> clients;
  std::vector<std::shared_ptr<const EntitlementStore>> replicas;
  std::vector<std::uint64_t> handled;
  std::uint64_t replica_refreshes = 0;
  std::uint64_t replica_hits = 0;

  const bool uses_client = topology.kind != TopologyKind::kDecentralizedReplicas;
  if (uses_client) {
    client::ClientConfig config;
    config.mode = topology.kind == TopologyKind::kMonolithRbac
                      ? client::Mode::kPhase1
                      : client::Mode::kPhase2;
    config.cache_ttl_ms = topology.cache_ttl_ms;
    for (int i = 0; i < topology.service_count; ++i) {
      clients.push_back(
          std::make_unique<client::AuthzClient>(counting, config, clock));
    }
  } else {
    replicas.assign(topology.service_count, nullptr);
    handled.assign(topology.service_count, 0);
  }

  auto mutations = workload.mutations;
  std::stable_sort(mutations.begin(), mutations.end(),
                   [](const Mutation& a, const Mutation& b) { return a.at < b.at; });
  std::size_t next_mutation = 0;

  for (std::uint64_t i = 0; i < requests.size(); ++i) {
    *clock_now = static_cast<std::int64_t>(i);

    while (next_mutation < mutations.size() && mutations[next_mutation].at <= i) {
      const Mutation& mutation = mutations[next_mutation];
      auto applied = hs.apply(mutation.kind, mutation.payload);
      if (!applied) {
        return Error{Errc::kRejected,
                     "workload mutation at request " + std::to_string(mutation.at) +
                         " rejected: " + applied.error().message,
                     std::nullopt};
      }
      ++next_mutation;
    }

    const Request& request = requests[i];
    const int service = static_cast<int>(i % topology.service_count);

    Decision action_decision;
    std::uint64_t generation_used = 0;
    bool from_cache = false;

    if (uses_client) {
      auto result = clients[service]->check(request.user, request.action);
      action_decision = std::move(result.decision);
      generation_used = result.generation;
      from_cache = result.from_cache;
    } else {
      if (handled[service] % topology.replica_refresh_every == 0) {
        replicas[service] = hs.snapshot();
        ++replica_refreshes;
      } else {
        ++replica_hits;
      }
      ++handled[service];
      const EntitlementStore& replica = *replicas[service];
      auto grants = expand_macro_functions(replica, request.user);
      action_decision = grants ? ms_authorize(grants.value(), request.action)
                               : Decision::deny(Reason::kDenyUnknownUser);
      generation_used = replica.generation;
      from_cache = true;
    }

    // The data-access layer runs inside the simulated service in every
    // topology: the monolith scoped data per enterprise, and the new model
    // re-establishes that guarantee explicitly.
    auto current = hs.snapshot();
    Decision final_decision = action_decision;
    const guard::OwnedResource* resource = registry.find(request.resource);
    auto user_it = current->users.find(request.user);
    if (resource && user_it != current->users.end()) {
      final_decision = guard::guard_with_decision(
          *current, user_it->second, request.action, action_decision, *resource);
    }

    if (final_decision.allowed) {
      ++outcome.counters.allows;
    } else {
      ++outcome.counters
            .denies_by_reason[std::string(to_string(final_decision.reason))];
    }
    if (generation_used != 0 && generation_used != current->generation) {
      ++outcome.counters.stale_decisions;
    }
    (void)from_cache;
    outcome.decisions.push_back({final_decision, generation_used});
  }

  outcome.counters.requests = requests.size();
  outcome.counters.network_calls = counting->calls() + replica_refreshes;
  if (uses_client) {
    for (const auto& client : clients) {
      outcome.counters.cache_hits += client->counters().cache_hits;
    }
  } else {
    outcome.counters.cache_hits = replica_hits;
  }
  for (const auto& [reason, count] : outcome.counters.denies_by_reason) {
    outcome.counters.denies_total += count;
  }
  outcome.counters.simulated_total_latency_ms =
      static_cast<std::int64_t>(outcome.counters.network_calls) *
      topology.hop_cost_ms;
  return outcome;
}

Result<EquivalenceReport> require_migrated(const EntitlementStore& store) {
  return check_migrated(store);
}

}  // namespace

Result<SimReport> run_sim(const EntitlementStore& store,
                          const guard::ResourceRegistry& registry,
                          const Topology& topology, const Workload& workload) {
  if (topology.kind != TopologyKind::kMonolithRbac) {
    auto migrated = require_migrated(store);
    if (!migrated) return migrated.error();
  }

  auto requests = generate_requests(store, registry, workload);
  if (!requests) return requests.error();

  auto leg = run_leg(store, registry, topology, workload, requests.value(),
                     std::string(to_string(topology.kind)));
  if (!leg) return leg.error();

  SimReport report;
  report.config = {{"topology", topology.to_json()},
                   {"workload", workload.to_json()}};
  report.topologies.push_back(std::move(leg.value().counters));
  return report;
}

Result<SimReport> compare_phases(const EntitlementStore& store,
                                 const guard::ResourceRegistry& registry,
                                 const Workload& workload,
                                 const PhaseOptions& options) {
  auto migrated = require_migrated(store);
  if (!migrated) return migrated.error();

  auto requests = generate_requests(store, registry, workload);
  if (!requests) return requests.error();

  Topology phase1;
  phase1.kind = TopologyKind::kMonolithRbac;
  phase1.service_count = options.service_count;
  phase1.hop_cost_ms = options.hop_cost_ms;

  Topology phase2;
  phase2.kind = TopologyKind::kCentralizedHs;
  phase2.service_count = options.service_count;
  phase2.hop_cost_ms = options.hop_cost_ms;
  phase2.cache_ttl_ms = options.cache_ttl_ms;

  auto leg1 = run_leg(store, registry, phase1, workload, requests.value(),
                      "PHASE1_LEGACY");
  if (!leg1) return leg1.error();
  auto leg2 = run_leg(store, registry, phase2, workload, requests.value(),
                      "PHASE2_MACRO");
  if (!leg2) return leg2.error();

  SimReport report;
  report.config = {{"mode", "COMPARE_PHASES"},
                   {"phase1", phase1.to_json()},
                   {"phase2", phase2.to_json()},
                   {"workload", workload.to_json()}};
  for (std::uint64_t i = 0; i < requests.value().size(); ++i) {
    const auto& d1 = leg1.value().decisions[i];
    const auto& d2 = leg2.value().decisions[i];
    if (d1.decision.allowed != d2.decision.allowed) {
      report.mismatched_decisions.push_back(DecisionMismatch{
          i, requests.value()[i], d1.decision, d2.decision});
    }
  }
  report.topologies.push_back(std::move(leg1.value().counters));
  report.topologies.push_back(std::move(leg2.value().counters));
  return report;
}

}  // namespace habilis::sim
