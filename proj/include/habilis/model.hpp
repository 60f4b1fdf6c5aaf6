#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace habilis {

struct Tenant {
  std::string id;
  std::string name;

  bool operator==(const Tenant&) const = default;
};

// Geographic entities form a forest: every parent reference resolves and the
// parent relation is acyclic. A scope covers its own subtree, so every entity
// is an ancestor of itself.
struct GeographicEntity {
  std::string id;
  std::optional<std::string> parent;

  bool operator==(const GeographicEntity&) const = default;
};

struct Role {
  std::string id;
  std::string name;
  std::set<std::string> permissions;

  bool operator==(const Role&) const = default;
};

struct ProfileAssociation {
  std::string role;
  std::string scope;

  auto operator<=>(const ProfileAssociation&) const = default;
};

struct Profile {
  std::string id;
  std::string name;
  std::set<ProfileAssociation> associations;

  bool operator==(const Profile&) const = default;
};

struct MacroFunction {
  std::string id;
  std::string name;
  std::set<std::string> functions;

  bool operator==(const MacroFunction&) const = default;
};

struct User {
  std::string id;
  std::string tenant;
  std::set<std::string> profiles;         // legacy grants
  std::set<std::string> macro_functions;  // new-model grants
  std::optional<std::string> preferred_geo;

  bool operator==(const User&) const = default;
};

// Immutable snapshot of every entitlement collection. Permissions and
// functions carry nothing beyond their identifier, so they are kept as plain
// id sets. Keying every collection by id gives canonical (byte-ordered)
// iteration for free.
struct EntitlementStore {
  std::uint64_t generation = 0;
  std::map<std::string, Tenant> tenants;
  std::map<std::string, GeographicEntity> geo_entities;
  std::set<std::string> permissions;
  std::map<std::string, Role> roles;
  std::map<std::string, Profile> profiles;
  std::set<std::string> functions;
  std::map<std::string, MacroFunction> macro_functions;
  std::map<std::string, User> users;

  bool operator==(const EntitlementStore&) const = default;
};

enum class Reason {
  kAllowedByRole,
  kAllowedByMacroFunction,
  kDenyNoGrant,
  kDenyUnknownUser,
  kDenyUnknownAction,
  kDenyOutOfGeoScope,
  kDenyCrossTenant,
  kDenyUpstreamUnreachable,
};

std::string_view to_string(Reason reason);
std::optional<Reason> reason_from_string(std::string_view text);

struct Decision {
  bool allowed = false;
  Reason reason = Reason::kDenyNoGrant;
  std::string trace;  // matched grant identifier, empty when absent

  static Decision allow(Reason reason, std::string trace) {
    return Decision{true, reason, std::move(trace)};
  }
  static Decision deny(Reason reason, std::string trace = {}) {
    return Decision{false, reason, std::move(trace)};
  }

  bool operator==(const Decision&) const = default;
};

// A user's expanded function set at one store generation: the unit served by
// the habilitation service and cached by clients. macro_functions keeps the
// per-grant breakdown so decision traces can name the granting macro.
struct GrantSet {
  std::string user;
  std::uint64_t generation = 0;
  std::map<std::string, std::set<std::string>> macro_functions;
  std::set<std::string> functions;

  bool operator==(const GrantSet&) const = default;
};

}  // namespace habilis
