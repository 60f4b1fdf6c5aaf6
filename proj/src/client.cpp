#include "habilis/client.hpp"

#include "habilis/engine.hpp"
#include "habilis/store.hpp"

namespace habilis::client {

using nlohmann::json;

namespace {

constexpr const char* kStaleTrace = "STALE";

std::string grants_path(const std::string& user) {
  return "/v1/users/" + user + "/grants";
}

}  // namespace

std::uint64_t ClientCounters::denies_total() const {
  std::uint64_t total = 0;
  for (const auto& [reason, count] : denies_by_reason) total += count;
  return total;
}

json ClientCounters::to_json() const {
  json denies = json::object();
  for (const auto& [reason, count] : denies_by_reason) {
    denies[std::string(to_string(reason))] = count;
  }
  return {{"checks", checks},
          {"cacheHits", cache_hits},
          {"fetches", fetches},
          {"unchangedRevalidations", unchanged_revalidations},
          {"networkCalls", network_calls},
          {"allows", allows},
          {"denies", std::move(denies)}};
}

AuthzClient::AuthzClient(std::shared_ptr<Transport> transport,
                         ClientConfig config, ClockMillisFn clock)
    : transport_(std::move(transport)),
      config_(config),
      clock_(clock ? std::move(clock) : wall_clock_millis) {}

bool AuthzClient::fresh(const CachedGrants& entry, std::int64_t now) const {
  return now - entry.fetched_at_ms <= config_.cache_ttl_ms;
}

void AuthzClient::tally(const Decision& decision) {
  if (decision.allowed) {
    ++counters_.allows;
  } else {
    ++counters_.denies_by_reason[decision.reason];
  }
}

CheckResult AuthzClient::check(const std::string& user,
                               const std::string& action,
                               const std::optional<std::string>& geo) {
  {
    std::lock_guard lock(mutex_);
    ++counters_.checks;
  }
  CheckResult result = config_.mode == Mode::kPhase1
                           ? check_phase1(user, action, geo)
                           : check_phase2(user, action);
  std::lock_guard lock(mutex_);
  tally(result.decision);
  return result;
}

CheckResult AuthzClient::check_phase1(const std::string& user,
                                      const std::string& action,
                                      const std::optional<std::string>& geo) {
  json body{{"user", user}, {"action", action}, {"mode", "LEGACY"}};
  if (geo) body["geo"] = *geo;

  {
    std::lock_guard lock(mutex_);
    ++counters_.network_calls;
  }
  auto reply = transport_->post("/v1/authorize", body);
  if (!reply || reply->status != 200 || !reply->body.is_object() ||
      !reply->body.contains("allowed") || !reply->body["allowed"].is_boolean()) {
    return CheckResult{Decision::deny(Reason::kDenyUpstreamUnreachable), 0,
                       false};
  }

  Decision decision;
  decision.allowed = reply->body["allowed"].get<bool>();
  decision.reason = Reason::kDenyNoGrant;
  if (reply->body.contains("reason") && reply->body["reason"].is_string()) {
    if (auto reason =
            reason_from_string(reply->body["reason"].get<std::string>())) {
      decision.reason = *reason;
    }
  }
  if (reply->body.contains("trace") && reply->body["trace"].is_string()) {
    decision.trace = reply->body["trace"].get<std::string>();
  }
  std::uint64_t generation = 0;
  if (reply->body.contains("generation") &&
      reply->body["generation"].is_number_unsigned()) {
    generation = reply->body["generation"].get<std::uint64_t>();
  }
  return CheckResult{std::move(decision), generation, false};
}

CheckResult AuthzClient::check_phase2(const std::string& user,
                                      const std::string& action) {
  std::unique_lock lock(mutex_);
  std::int64_t now = clock_();

  for (;;) {
    auto it = cache_.find(user);
    if (it != cache_.end() && fresh(it->second, now)) {
      ++counters_.cache_hits;
      Decision decision = ms_authorize(it->second.grants, action);
      return CheckResult{std::move(decision), it->second.grants.generation,
                         true};
    }
    if (!in_flight_.count(user)) break;
    // Another check is already fetching this user; its result will serve us.
    fetch_done_.wait(lock);
    now = clock_();
  }

  in_flight_.insert(user);
  ++counters_.network_calls;
  lock.unlock();
  auto reply = transport_->get(grants_path(user), {});
  lock.lock();
  in_flight_.erase(user);
  fetch_done_.notify_all();

  if (reply && reply->status == 200) {
    auto grants = grant_set_from_json(reply->body);
    if (grants) {
      ++counters_.fetches;
      CachedGrants entry{std::move(grants).value(), clock_()};
      Decision decision = ms_authorize(entry.grants, action);
      const std::uint64_t generation = entry.grants.generation;
      cache_[user] = std::move(entry);
      return CheckResult{std::move(decision), generation, false};
    }
  }
  if (reply && reply->status == 404) {
    cache_.erase(user);
    return CheckResult{Decision::deny(Reason::kDenyUnknownUser), 0, false};
  }

  // Unreachable (or an unusable reply). Fail closed unless a previously
  // fetched entry may be served stale.
  if (config_.fail_policy == FailPolicy::kFailOpen) {
    auto it = cache_.find(user);
    if (it != cache_.end()) {
      Decision decision = ms_authorize(it->second.grants, action);
      decision.trace = kStaleTrace;
      return CheckResult{std::move(decision), it->second.grants.generation,
                         true};
    }
  }
  return CheckResult{Decision::deny(Reason::kDenyUpstreamUnreachable), 0, false};
}

void AuthzClient::invalidate(const std::string& user) {
  std::lock_guard lock(mutex_);
  cache_.erase(user);
}

Result<bool> AuthzClient::revalidate(const std::string& user) {
  std::unique_lock lock(mutex_);
  auto it = cache_.find(user);
  if (it == cache_.end()) {
    return Error{Errc::kUnknownUser, "no cache entry for user '" + user + "'",
                 std::nullopt};
  }
  const std::uint64_t known_generation = it->second.grants.generation;
  ++counters_.network_calls;
  lock.unlock();
  auto reply = transport_->get(
      grants_path(user),
      {{"X-Known-Generation", std::to_string(known_generation)}});
  lock.lock();

  if (!reply) {
    return Error{Errc::kUpstreamUnreachable, "habilitation service unreachable",
                 std::nullopt};
  }
  if (reply->status == 404) {
    cache_.erase(user);
    return Error{Errc::kUnknownUser, "user '" + user + "' no longer exists",
                 std::nullopt};
  }
  if (reply->status != 200) {
    return Error{Errc::kUpstreamUnreachable,
                 "unexpected status " + std::to_string(reply->status),
                 std::nullopt};
  }

  it = cache_.find(user);
  if (it == cache_.end()) {
    // Entry invalidated while the request was in flight; nothing to refresh.
    return Error{Errc::kUnknownUser, "no cache entry for user '" + user + "'",
                 std::nullopt};
  }

  if (reply->body.is_object() && reply->body.value("unchanged", false)) {
    it->second.fetched_at_ms = clock_();
    ++counters_.unchanged_revalidations;
    return false;
  }

  auto grants = grant_set_from_json(reply->body);
  if (!grants) {
    return Error{Errc::kMalformedRequest, "malformed grant payload",
                 std::nullopt};
  }
  ++counters_.fetches;
  const bool changed = grants.value().generation != known_generation ||
                       grants.value() != it->second.grants;
  it->second = CachedGrants{std::move(grants).value(), clock_()};
  return changed;
}

ClientCounters AuthzClient::counters() const {
  std::lock_guard lock(mutex_);
  return counters_;
}

}  // namespace habilis::client
