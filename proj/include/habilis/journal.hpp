#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "habilis/model.hpp"
#include "habilis/result.hpp"

namespace habilis::service {

enum class CommandKind {
  kUpsertTenant,
  kUpsertGeo,
  kUpsertPermission,
  kUpsertRole,
  kUpsertProfile,
  kUpsertFunction,
  kUpsertMacroFunction,
  kUpsertUser,
  kGrant,
  kRevoke,
  kBulkImport,
  kMigrate,
};

std::string_view to_string(CommandKind kind);
std::optional<CommandKind> command_kind_from_string(std::string_view text);

struct AdminCommand {
  CommandKind kind = CommandKind::kMigrate;
  nlohmann::json payload;  // entity document, shape depends on kind
  std::int64_t issued_at_ms = 0;
  std::uint64_t sequence = 0;

  nlohmann::json to_json() const;
  static Result<AdminCommand> from_json(const nlohmann::json& doc);
};

struct AuditRecord {
  std::uint64_t sequence = 0;
  std::int64_t issued_at_ms = 0;
  CommandKind kind = CommandKind::kMigrate;
  bool applied = false;
  std::string reason;  // violated constraint on rejection

  nlohmann::json to_json() const;
};

// Applies one validated command to an immutable store snapshot, producing the
// next snapshot (generation + 1) or a rejection naming the violated
// constraint. This is the single transition function used by both the live
// apply path and journal replay.
Result<EntitlementStore> apply_to_store(const EntitlementStore& store,
                                        const AdminCommand& command);

// Append-only journal of applied commands plus periodic snapshots, the
// service's source of truth. Journal lines are one JSON document each; any
// unreadable line fails recovery with its byte offset — an authorization
// source must not guess.
class Persistence {
 public:
  static Result<Persistence> open(const std::string& data_dir);

  struct Recovered {
    EntitlementStore store;
    std::uint64_t last_sequence = 0;
    std::uint64_t replayed_commands = 0;
  };

  Result<Recovered> recover() const;

  std::optional<Error> append_journal(const AdminCommand& command);
  std::optional<Error> append_audit(const AuditRecord& record);
  std::optional<Error> write_snapshot(const EntitlementStore& store,
                                      std::uint64_t sequence);

  const std::string& data_dir() const { return data_dir_; }
  std::string journal_path() const;
  std::string snapshot_path() const;
  std::string audit_path() const;

 private:
  explicit Persistence(std::string data_dir);

  std::string data_dir_;
};

}  // namespace habilis::service
