#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "habilis/clock.hpp"
#include "habilis/journal.hpp"
#include "habilis/model.hpp"
#include "habilis/result.hpp"

namespace habilis::service {

// One wire-level response: HTTP status plus JSON body. The HTTP listener and
// the in-memory transport both speak in these, so every consumer sees the
// same documents.
struct DocResponse {
  int status = 200;
  nlohmann::json body;
};

struct ServiceOptions {
  // Absent: volatile in-memory service (fleet simulator, tests).
  std::optional<std::string> data_dir;
  // Seed for in-memory services; ignored when a data directory is given,
  // where the journal is the source of truth.
  std::optional<EntitlementStore> initial_store;
  int snapshot_every = 100;
  ClockMillisFn clock;  // defaults to wall clock
};

// The habilitation service core: an immutable store snapshot swapped
// atomically under a serialized mutation path, with journal persistence.
// Readers never observe a torn store.
class ServiceCore {
 public:
  static Result<std::unique_ptr<ServiceCore>> open(ServiceOptions options);

  DocResponse handle_health() const;
  DocResponse handle_get_grants(const std::string& user_id,
                                const std::optional<std::string>&
                                    known_generation_header) const;
  DocResponse handle_authorize(const nlohmann::json& body) const;
  DocResponse handle_admin_command(const nlohmann::json& body);
  DocResponse handle_import(const nlohmann::json& fixture);
  DocResponse handle_migrate();

  // Typed admin path used by the CLI, tests and the simulator. Returns the
  // new store generation.
  Result<std::uint64_t> apply(CommandKind kind, nlohmann::json payload);

  std::shared_ptr<const EntitlementStore> snapshot() const;
  std::uint64_t generation() const;
  std::uint64_t last_sequence() const;
  std::uint64_t uptime_seconds() const;
  std::vector<AuditRecord> audit_tail() const;

  // Clean-shutdown snapshot flush.
  std::optional<Error> flush_snapshot();

 private:
  ServiceCore(ServiceOptions options, EntitlementStore store,
              std::uint64_t last_sequence,
              std::optional<Persistence> persistence);

  struct ApplyOutcome {
    std::uint64_t generation = 0;
    std::uint64_t sequence = 0;
  };
  Result<ApplyOutcome> apply_command(AdminCommand command);

  ServiceOptions options_;
  std::optional<Persistence> persistence_;
  std::chrono::steady_clock::time_point started_;

  mutable std::mutex mutex_;
  std::shared_ptr<const EntitlementStore> store_;
  std::uint64_t last_sequence_ = 0;
  int applied_since_snapshot_ = 0;
  std::vector<AuditRecord> audit_;
};

}  // namespace habilis::service
