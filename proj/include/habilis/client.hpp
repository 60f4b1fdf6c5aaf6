#pragma once

#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>

#include <json.hpp>

#include "habilis/clock.hpp"
#include "habilis/model.hpp"
#include "habilis/result.hpp"
#include "habilis/transport.hpp"

namespace habilis::client {

enum class Mode { kPhase1, kPhase2 };
enum class FailPolicy { kFailClosed, kFailOpen };

struct ClientConfig {
  Mode mode = Mode::kPhase1;
  // Negative values are invalid; std::numeric_limits<int64_t>::max() never
  // expires.
  std::int64_t cache_ttl_ms = 30'000;
  FailPolicy fail_policy = FailPolicy::kFailClosed;
};

struct CachedGrants {
  GrantSet grants;
  std::int64_t fetched_at_ms = 0;
};

struct CheckResult {
  Decision decision;
  std::uint64_t generation = 0;  // store generation the decision was computed at
  bool from_cache = false;       // answered without touching the network
};

struct ClientCounters {
  std::uint64_t checks = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t fetches = 0;  // full grant payloads received
  std::uint64_t unchanged_revalidations = 0;
  std::uint64_t network_calls = 0;
  std::uint64_t allows = 0;
  std::map<Reason, std::uint64_t> denies_by_reason;

  std::uint64_t denies_total() const;
  nlohmann::json to_json() const;
};

// The authorization client embedded in each microservice. Phase 1 forwards
// every check to the legacy engine for a remote boolean; phase 2 fetches the
// user's macro-function set once per TTL window and evaluates membership
// locally. Concurrent misses for one user coalesce onto a single fetch.
class AuthzClient {
 public:
  AuthzClient(std::shared_ptr<Transport> transport, ClientConfig config,
              ClockMillisFn clock = {});

  // geo is forwarded in phase 1 and ignored in phase 2: the new model drops
  // geography from authorization, and keeping the signature lets embedding
  // services change configuration, not code.
  CheckResult check(const std::string& user, const std::string& action,
                    const std::optional<std::string>& geo = std::nullopt);

  void invalidate(const std::string& user);

  // Conditional refresh of an existing entry; true when content changed.
  Result<bool> revalidate(const std::string& user);

  ClientCounters counters() const;

 private:
  CheckResult check_phase1(const std::string& user, const std::string& action,
                           const std::optional<std::string>& geo);
  CheckResult check_phase2(const std::string& user, const std::string& action);
  bool fresh(const CachedGrants& entry, std::int64_t now) const;
  void tally(const Decision& decision);

  std::shared_ptr<Transport> transport_;
  ClientConfig config_;
  ClockMillisFn clock_;

  mutable std::mutex mutex_;
  std::condition_variable fetch_done_;
  std::map<std::string, CachedGrants> cache_;
  std::set<std::string> in_flight_;
  ClientCounters counters_;
};

}  // namespace habilis::client
