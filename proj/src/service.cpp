#include "habilis/service.hpp"

#include <cerrno>
#include <cstdlib>

#include "habilis/engine.hpp"
#include "habilis/store.hpp"

namespace habilis::service {

using nlohmann::json;

namespace {

DocResponse error_response(int status, Errc code, const std::string& message) {
  return DocResponse{status,
                     json{{"code", std::string(to_string(code))},
                          {"message", message}}};
}

}  // namespace

Result<std::unique_ptr<ServiceCore>> ServiceCore::open(ServiceOptions options) {
  if (!options.clock) options.clock = wall_clock_millis;

  if (!options.data_dir) {
    EntitlementStore store;
    if (options.initial_store) store = std::move(*options.initial_store);
    return std::unique_ptr<ServiceCore>(
        new ServiceCore(std::move(options), std::move(store), 0, std::nullopt));
  }

  auto persistence = Persistence::open(*options.data_dir);
  if (!persistence) return persistence.error();
  auto recovered = persistence.value().recover();
  if (!recovered) return recovered.error();

  return std::unique_ptr<ServiceCore>(new ServiceCore(
      std::move(options), std::move(recovered.value().store),
      recovered.value().last_sequence, std::move(persistence).value()));
}

ServiceCore::ServiceCore(ServiceOptions options, EntitlementStore store,
                         std::uint64_t last_sequence,
                         std::optional<Persistence> persistence)
    : options_(std::move(options)),
      persistence_(std::move(persistence)),
      started_(std::chrono::steady_clock::now()),
      store_(std::make_shared<const EntitlementStore>(std::move(store))),
      last_sequence_(last_sequence) {}

std::shared_ptr<const EntitlementStore> ServiceCore::snapshot() const {
  std::lock_guard lock(mutex_);
  return store_;
}

std::uint64_t ServiceCore::generation() const { return snapshot()->generation; }

std::uint64_t ServiceCore::last_sequence() const {
  std::lock_guard lock(mutex_);
  return last_sequence_;
}

std::uint64_t ServiceCore::uptime_seconds() const {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::seconds>(
          std::chrono::steady_clock::now() - started_)
          .count());
}

std::vector<AuditRecord> ServiceCore::audit_tail() const {
  std::lock_guard lock(mutex_);
  return audit_;
}

DocResponse ServiceCore::handle_health() const {
  auto store = snapshot();
  return DocResponse{200, json{{"status", "ok"},
                               {"generation", store->generation},
                               {"uptimeSeconds", uptime_seconds()}}};
}

DocResponse ServiceCore::handle_get_grants(
    const std::string& user_id,
    const std::optional<std::string>& known_generation_header) const {
  auto store = snapshot();
  auto grants = expand_macro_functions(*store, user_id);
  if (!grants) {
    return error_response(404, Errc::kUnknownUser, grants.error().message);
  }
  if (known_generation_header) {
    errno = 0;
    char* end = nullptr;
    const unsigned long long known =
        std::strtoull(known_generation_header->c_str(), &end, 10);
    if (errno == 0 && end && *end == '\0' &&
        !known_generation_header->empty() && known == store->generation) {
      return DocResponse{200, json{{"unchanged", true},
                                   {"generation", store->generation}}};
    }
  }
  return DocResponse{200, grant_set_to_json(grants.value())};
}

DocResponse ServiceCore::handle_authorize(const json& body) const {
  if (!body.is_object() || !body.contains("user") || !body["user"].is_string() ||
      !body.contains("action") || !body["action"].is_string() ||
      !body.contains("mode") || !body["mode"].is_string()) {
    return error_response(400, Errc::kMalformedRequest,
                          "authorize body needs string user, action and mode");
  }
  const std::string mode = body["mode"].get<std::string>();
  if (mode != "LEGACY" && mode != "MACRO") {
    return error_response(400, Errc::kMalformedRequest,
                          "mode must be LEGACY or MACRO");
  }
  std::optional<std::string> geo;
  if (body.contains("geo") && !body["geo"].is_null()) {
    if (!body["geo"].is_string()) {
      return error_response(400, Errc::kMalformedRequest, "geo must be a string");
    }
    geo = body["geo"].get<std::string>();
  }

  auto store = snapshot();
  const std::string user = body["user"].get<std::string>();
  const std::string action = body["action"].get<std::string>();

  Decision decision;
  if (mode == "LEGACY") {
    decision = legacy_authorize(*store, user, action, geo);
  } else {
    auto grants = expand_macro_functions(*store, user);
    // Unknown ids are deny decisions here, never request failures: only the
    // grant-retrieval endpoint distinguishes absence.
    decision = grants ? ms_authorize(grants.value(), action)
                      : Decision::deny(Reason::kDenyUnknownUser);
  }

  json doc = decision_to_json(decision);
  doc["generation"] = store->generation;
  return DocResponse{200, std::move(doc)};
}

Result<ServiceCore::ApplyOutcome> ServiceCore::apply_command(
    AdminCommand command) {
  std::lock_guard lock(mutex_);

  command.sequence = ++last_sequence_;
  if (command.issued_at_ms == 0) command.issued_at_ms = options_.clock();

  AuditRecord record;
  record.sequence = command.sequence;
  record.issued_at_ms = command.issued_at_ms;
  record.kind = command.kind;

  auto finish_audit = [this](AuditRecord audit_record) {
    audit_.push_back(audit_record);
    if (persistence_) persistence_->append_audit(audit_record);
  };

  auto next = apply_to_store(*store_, command);
  if (!next) {
    record.applied = false;
    record.reason = next.error().message;
    finish_audit(record);
    return Error{Errc::kRejected, next.error().message, std::nullopt};
  }

  if (persistence_) {
    if (auto err = persistence_->append_journal(command)) {
      record.applied = false;
      record.reason = "journal append failed: " + err->message;
      finish_audit(record);
      return *err;
    }
  }

  store_ = std::make_shared<const EntitlementStore>(std::move(next).value());
  record.applied = true;
  finish_audit(record);

  if (persistence_ && ++applied_since_snapshot_ >= options_.snapshot_every) {
    if (!persistence_->write_snapshot(*store_, last_sequence_)) {
      applied_since_snapshot_ = 0;
    }
  }

  return ApplyOutcome{store_->generation, command.sequence};
}

Result<std::uint64_t> ServiceCore::apply(CommandKind kind, json payload) {
  AdminCommand command;
  command.kind = kind;
  command.payload = std::move(payload);
  auto outcome = apply_command(std::move(command));
  if (!outcome) return outcome.error();
  return outcome.value().generation;
}

DocResponse ServiceCore::handle_admin_command(const json& body) {
  auto command = AdminCommand::from_json(body);
  if (!command) {
    return error_response(400, Errc::kMalformedRequest, command.error().message);
  }
  auto outcome = apply_command(std::move(command).value());
  if (!outcome) {
    if (outcome.error().code == Errc::kRejected) {
      return error_response(409, Errc::kRejected, outcome.error().message);
    }
    return error_response(500, outcome.error().code, outcome.error().message);
  }
  return DocResponse{200, json{{"applied", true},
                               {"generation", outcome.value().generation},
                               {"sequence", outcome.value().sequence}}};
}

DocResponse ServiceCore::handle_import(const json& fixture) {
  json body{{"kind", "BULK_IMPORT"}, {"payload", fixture}};
  return handle_admin_command(body);
}

DocResponse ServiceCore::handle_migrate() {
  json body{{"kind", "MIGRATE"}, {"payload", json::object()}};
  return handle_admin_command(body);
}

std::optional<Error> ServiceCore::flush_snapshot() {
  std::lock_guard lock(mutex_);
  if (!persistence_) return std::nullopt;
  auto err = persistence_->write_snapshot(*store_, last_sequence_);
  if (!err) applied_since_snapshot_ = 0;
  return err;
}

}  // namespace habilis::service
