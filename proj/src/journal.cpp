#include "habilis/journal.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "habilis/migrate.hpp"
#include "habilis/store.hpp"

namespace habilis::service {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(CommandKind kind) {
  switch (kind) {
    case CommandKind::kUpsertTenant: return "UPSERT_TENANT";
    case CommandKind::kUpsertGeo: return "UPSERT_GEO";
    case CommandKind::kUpsertPermission: return "UPSERT_PERMISSION";
    case CommandKind::kUpsertRole: return "UPSERT_ROLE";
    case CommandKind::kUpsertProfile: return "UPSERT_PROFILE";
    case CommandKind::kUpsertFunction: return "UPSERT_FUNCTION";
    case CommandKind::kUpsertMacroFunction: return "UPSERT_MACRO_FUNCTION";
    case CommandKind::kUpsertUser: return "UPSERT_USER";
    case CommandKind::kGrant: return "GRANT";
    case CommandKind::kRevoke: return "REVOKE";
    case CommandKind::kBulkImport: return "BULK_IMPORT";
    case CommandKind::kMigrate: return "MIGRATE";
  }
  return "MIGRATE";
}

std::optional<CommandKind> command_kind_from_string(std::string_view text) {
  static const std::pair<std::string_view, CommandKind> table[] = {
      {"UPSERT_TENANT", CommandKind::kUpsertTenant},
      {"UPSERT_GEO", CommandKind::kUpsertGeo},
      {"UPSERT_PERMISSION", CommandKind::kUpsertPermission},
      {"UPSERT_ROLE", CommandKind::kUpsertRole},
      {"UPSERT_PROFILE", CommandKind::kUpsertProfile},
      {"UPSERT_FUNCTION", CommandKind::kUpsertFunction},
      {"UPSERT_MACRO_FUNCTION", CommandKind::kUpsertMacroFunction},
      {"UPSERT_USER", CommandKind::kUpsertUser},
      {"GRANT", CommandKind::kGrant},
      {"REVOKE", CommandKind::kRevoke},
      {"BULK_IMPORT", CommandKind::kBulkImport},
      {"MIGRATE", CommandKind::kMigrate},
  };
  for (const auto& [name, value] : table) {
    if (name == text) return value;
  }
  return std::nullopt;
}

json AdminCommand::to_json() const {
  return {{"kind", std::string(to_string(kind))},
          {"payload", payload},
          {"issuedAt", issued_at_ms},
          {"sequence", sequence}};
}

Result<AdminCommand> AdminCommand::from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("kind") || !doc["kind"].is_string()) {
    return Error{Errc::kMalformedRequest,
                 "command must be an object with a string 'kind'", std::nullopt};
  }
  auto kind = command_kind_from_string(doc["kind"].get<std::string>());
  if (!kind) {
    return Error{Errc::kMalformedRequest,
                 "unknown command kind '" + doc["kind"].get<std::string>() + "'",
                 std::nullopt};
  }
  AdminCommand command;
  command.kind = *kind;
  command.payload = doc.contains("payload") ? doc["payload"] : json::object();
  if (doc.contains("issuedAt")) {
    if (!doc["issuedAt"].is_number_integer()) {
      return Error{Errc::kMalformedRequest, "issuedAt must be an integer",
                   std::nullopt};
    }
    command.issued_at_ms = doc["issuedAt"].get<std::int64_t>();
  }
  if (doc.contains("sequence")) {
    if (!doc["sequence"].is_number_unsigned()) {
      return Error{Errc::kMalformedRequest,
                   "sequence must be a non-negative integer", std::nullopt};
    }
    command.sequence = doc["sequence"].get<std::uint64_t>();
  }
  return command;
}

json AuditRecord::to_json() const {
  return {{"sequence", sequence},
          {"issuedAt", issued_at_ms},
          {"kind", std::string(to_string(kind))},
          {"outcome", applied ? "APPLIED" : "REJECTED"},
          {"reason", reason}};
}

namespace {

Error rejected(const std::string& constraint) {
  return Error{Errc::kRejected, constraint, std::nullopt};
}

Result<std::string> payload_string(const json& payload, const char* key) {
  if (!payload.is_object() || !payload.contains(key) ||
      !payload[key].is_string()) {
    return rejected(std::string("payload is missing string field '") + key + "'");
  }
  return payload[key].get<std::string>();
}

// Upserts mutate a copy of one collection entry from the payload document.
std::optional<Error> apply_upsert(EntitlementStore& store,
                                  const AdminCommand& command) {
  const json& payload = command.payload;
  switch (command.kind) {
    case CommandKind::kUpsertTenant: {
      auto id = payload_string(payload, "id");
      if (!id) return id.error();
      auto name = payload_string(payload, "name");
      if (!name) return name.error();
      store.tenants[id.value()] = Tenant{id.value(), name.value()};
      return std::nullopt;
    }
    case CommandKind::kUpsertGeo: {
      auto id = payload_string(payload, "id");
      if (!id) return id.error();
      GeographicEntity entity{id.value(), std::nullopt};
      if (payload.contains("parent") && !payload["parent"].is_null()) {
        if (!payload["parent"].is_string()) {
          return rejected("geo parent must be a string");
        }
        entity.parent = payload["parent"].get<std::string>();
      }
      store.geo_entities[id.value()] = std::move(entity);
      return std::nullopt;
    }
    case CommandKind::kUpsertPermission: {
      auto id = payload_string(payload, "id");
      if (!id) return id.error();
      store.permissions.insert(id.value());
      return std::nullopt;
    }
    case CommandKind::kUpsertFunction: {
      auto id = payload_string(payload, "id");
      if (!id) return id.error();
      store.functions.insert(id.value());
      return std::nullopt;
    }
    case CommandKind::kUpsertRole:
    case CommandKind::kUpsertProfile:
    case CommandKind::kUpsertMacroFunction:
    case CommandKind::kUpsertUser:
      break;
    default:
      return rejected("not an upsert command");
  }

  // The remaining entity shapes match the fixture format; reuse its parser on
  // a single-element document.
  const char* collection = nullptr;
  switch (command.kind) {
    case CommandKind::kUpsertRole: collection = "roles"; break;
    case CommandKind::kUpsertProfile: collection = "profiles"; break;
    case CommandKind::kUpsertMacroFunction: collection = "macroFunctions"; break;
    case CommandKind::kUpsertUser: collection = "users"; break;
    default: return rejected("not an upsert command");
  }
  json wrapper = json::object();
  wrapper[collection] = json::array({payload});
  auto parsed = store_from_json(wrapper);
  if (!parsed) return rejected(parsed.error().message);
  const EntitlementStore& fragment = parsed.value();
  switch (command.kind) {
    case CommandKind::kUpsertRole:
      store.roles[fragment.roles.begin()->first] = fragment.roles.begin()->second;
      break;
    case CommandKind::kUpsertProfile:
      store.profiles[fragment.profiles.begin()->first] =
          fragment.profiles.begin()->second;
      break;
    case CommandKind::kUpsertMacroFunction:
      store.macro_functions[fragment.macro_functions.begin()->first] =
          fragment.macro_functions.begin()->second;
      break;
    case CommandKind::kUpsertUser:
      store.users[fragment.users.begin()->first] = fragment.users.begin()->second;
      break;
    default: break;
  }
  return std::nullopt;
}

std::optional<Error> apply_grant_revoke(EntitlementStore& store,
                                        const AdminCommand& command) {
  auto user_id = payload_string(command.payload, "user");
  if (!user_id) return user_id.error();
  auto user_it = store.users.find(user_id.value());
  if (user_it == store.users.end()) {
    return rejected("unknown user '" + user_id.value() + "'");
  }
  const bool has_macro = command.payload.contains("macroFunction");
  const bool has_profile = command.payload.contains("profile");
  if (has_macro == has_profile) {
    return rejected("payload needs exactly one of 'macroFunction' or 'profile'");
  }
  const bool grant = command.kind == CommandKind::kGrant;
  if (has_macro) {
    auto macro_id = payload_string(command.payload, "macroFunction");
    if (!macro_id) return macro_id.error();
    if (grant) {
      user_it->second.macro_functions.insert(macro_id.value());
    } else {
      user_it->second.macro_functions.erase(macro_id.value());
    }
  } else {
    auto profile_id = payload_string(command.payload, "profile");
    if (!profile_id) return profile_id.error();
    if (grant) {
      user_it->second.profiles.insert(profile_id.value());
    } else {
      user_it->second.profiles.erase(profile_id.value());
    }
  }
  return std::nullopt;
}

}  // namespace

Result<EntitlementStore> apply_to_store(const EntitlementStore& store,
                                        const AdminCommand& command) {
  EntitlementStore next = store;
  switch (command.kind) {
    case CommandKind::kBulkImport: {
      auto imported = store_from_json(command.payload);
      if (!imported) return rejected(imported.error().message);
      next = std::move(imported).value();
      break;
    }
    case CommandKind::kMigrate: {
      auto migrated = migrate_grants(store);
      if (!migrated) return rejected(migrated.error().message);
      // migrate_grants already advanced the generation.
      return migrated;
    }
    case CommandKind::kGrant:
    case CommandKind::kRevoke: {
      if (auto err = apply_grant_revoke(next, command)) return *err;
      break;
    }
    default: {
      if (auto err = apply_upsert(next, command)) return *err;
      break;
    }
  }

  auto violations = validate_store(next);
  if (!violations.empty()) return rejected(violations.front());
  next.generation = store.generation + 1;
  return next;
}

Persistence::Persistence(std::string data_dir) : data_dir_(std::move(data_dir)) {}

std::string Persistence::journal_path() const {
  return (fs::path(data_dir_) / "journal.log").string();
}
std::string Persistence::snapshot_path() const {
  return (fs::path(data_dir_) / "snapshot.json").string();
}
std::string Persistence::audit_path() const {
  return (fs::path(data_dir_) / "audit.log").string();
}

Result<Persistence> Persistence::open(const std::string& data_dir) {
  std::error_code ec;
  fs::create_directories(data_dir, ec);
  if (ec) {
    return Error{Errc::kIoError,
                 "cannot create data directory '" + data_dir + "': " + ec.message(),
                 std::nullopt};
  }
  // Probe writability up front so serve fails before binding a socket.
  const fs::path probe = fs::path(data_dir) / ".write-probe";
  {
    std::ofstream out(probe, std::ios::binary | std::ios::trunc);
    if (!out) {
      return Error{Errc::kIoError,
                   "data directory '" + data_dir + "' is not writable",
                   std::nullopt};
    }
  }
  fs::remove(probe, ec);
  return Persistence(data_dir);
}

namespace {

std::optional<Error> append_line(const std::string& path, const json& doc) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) {
    return Error{Errc::kIoError, "cannot open '" + path + "' for append",
                 std::nullopt};
  }
  out << doc.dump() << '\n';
  out.flush();
  if (!out) {
    return Error{Errc::kIoError, "write to '" + path + "' failed", std::nullopt};
  }
  return std::nullopt;
}

Error corrupt(const std::string& path, std::uint64_t offset,
              const std::string& detail) {
  return Error{Errc::kCorruptJournal,
               "corrupt journal '" + path + "' at byte offset " +
                   std::to_string(offset) + ": " + detail,
               offset};
}

}  // namespace

std::optional<Error> Persistence::append_journal(const AdminCommand& command) {
  return append_line(journal_path(), command.to_json());
}

std::optional<Error> Persistence::append_audit(const AuditRecord& record) {
  return append_line(audit_path(), record.to_json());
}

std::optional<Error> Persistence::write_snapshot(const EntitlementStore& store,
                                                 std::uint64_t sequence) {
  const std::string path = snapshot_path();
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      return Error{Errc::kIoError, "cannot write snapshot '" + tmp + "'",
                   std::nullopt};
    }
    json doc{{"sequence", sequence}, {"store", store_to_json(store)}};
    out << doc.dump(2) << '\n';
    out.flush();
    if (!out) {
      return Error{Errc::kIoError, "snapshot write to '" + tmp + "' failed",
                   std::nullopt};
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    return Error{Errc::kIoError,
                 "cannot move snapshot into place: " + ec.message(), std::nullopt};
  }
  return std::nullopt;
}

Result<Persistence::Recovered> Persistence::recover() const {
  Recovered recovered;
  std::uint64_t snapshot_sequence = 0;

  if (fs::exists(snapshot_path())) {
    std::ifstream in(snapshot_path(), std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    json doc = json::parse(buffer.str(), nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("sequence") ||
        !doc["sequence"].is_number_unsigned() || !doc.contains("store")) {
      return Error{Errc::kCorruptJournal,
                   "snapshot '" + snapshot_path() + "' is unreadable",
                   std::uint64_t{0}};
    }
    auto store = store_from_json(doc["store"]);
    if (!store) {
      return Error{Errc::kCorruptJournal,
                   "snapshot '" + snapshot_path() + "': " + store.error().message,
                   std::uint64_t{0}};
    }
    recovered.store = std::move(store).value();
    snapshot_sequence = doc["sequence"].get<std::uint64_t>();
    recovered.last_sequence = snapshot_sequence;
  }

  const std::string path = journal_path();
  if (fs::exists(path)) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();

    std::uint64_t offset = 0;
    std::uint64_t previous_sequence = 0;
    bool have_previous = false;
    while (offset < text.size()) {
      auto newline = text.find('\n', offset);
      if (newline == std::string::npos) {
        return corrupt(path, offset, "record truncated before newline");
      }
      const std::string line = text.substr(offset, newline - offset);
      json doc = json::parse(line, nullptr, false);
      if (doc.is_discarded()) {
        return corrupt(path, offset, "record is not valid JSON");
      }
      auto command = AdminCommand::from_json(doc);
      if (!command) {
        return corrupt(path, offset, command.error().message);
      }
      if (have_previous && command.value().sequence <= previous_sequence) {
        return corrupt(path, offset, "sequence numbers are not increasing");
      }
      previous_sequence = command.value().sequence;
      have_previous = true;

      if (command.value().sequence > snapshot_sequence) {
        auto next = apply_to_store(recovered.store, command.value());
        if (!next) {
          return corrupt(path, offset,
                         "journaled command no longer applies: " +
                             next.error().message);
        }
        recovered.store = std::move(next).value();
        recovered.last_sequence = command.value().sequence;
        ++recovered.replayed_commands;
      }
      offset = newline + 1;
    }
  }

  // Rejected commands consume sequence numbers but are never journaled; the
  // audit log carries the true high-water mark.
  if (fs::exists(audit_path())) {
    std::ifstream in(audit_path(), std::ios::binary);
    std::string line;
    std::uint64_t last_audit = 0;
    while (std::getline(in, line)) {
      json doc = json::parse(line, nullptr, false);
      if (doc.is_object() && doc.contains("sequence") &&
          doc["sequence"].is_number_unsigned()) {
        last_audit = std::max(last_audit, doc["sequence"].get<std::uint64_t>());
      }
    }
    recovered.last_sequence = std::max(recovered.last_sequence, last_audit);
  }

  return recovered;
}

}  // namespace habilis::service
