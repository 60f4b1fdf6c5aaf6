#include "habilis/store.hpp"

#include <fstream>
#include <sstream>

namespace habilis {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::kUnknownGeoEntity: return "UNKNOWN_GEO_ENTITY";
    case Errc::kUnknownUser: return "UNKNOWN_USER";
    case Errc::kMalformedStore: return "MALFORMED_STORE";
    case Errc::kMalformedRequest: return "MALFORMED_REQUEST";
    case Errc::kNotMigrated: return "NOT_MIGRATED";
    case Errc::kCorruptJournal: return "CORRUPT_JOURNAL";
    case Errc::kRejected: return "REJECTED";
    case Errc::kUpstreamUnreachable: return "UPSTREAM_UNREACHABLE";
    case Errc::kIoError: return "IO_ERROR";
  }
  return "IO_ERROR";
}

std::string_view to_string(Reason reason) {
  switch (reason) {
    case Reason::kAllowedByRole: return "ALLOWED_BY_ROLE";
    case Reason::kAllowedByMacroFunction: return "ALLOWED_BY_MACRO_FUNCTION";
    case Reason::kDenyNoGrant: return "DENY_NO_GRANT";
    case Reason::kDenyUnknownUser: return "DENY_UNKNOWN_USER";
    case Reason::kDenyUnknownAction: return "DENY_UNKNOWN_ACTION";
    case Reason::kDenyOutOfGeoScope: return "DENY_OUT_OF_GEO_SCOPE";
    case Reason::kDenyCrossTenant: return "DENY_CROSS_TENANT";
    case Reason::kDenyUpstreamUnreachable: return "DENY_UPSTREAM_UNREACHABLE";
  }
  return "DENY_NO_GRANT";
}

std::optional<Reason> reason_from_string(std::string_view text) {
  static const std::pair<std::string_view, Reason> table[] = {
      {"ALLOWED_BY_ROLE", Reason::kAllowedByRole},
      {"ALLOWED_BY_MACRO_FUNCTION", Reason::kAllowedByMacroFunction},
      {"DENY_NO_GRANT", Reason::kDenyNoGrant},
      {"DENY_UNKNOWN_USER", Reason::kDenyUnknownUser},
      {"DENY_UNKNOWN_ACTION", Reason::kDenyUnknownAction},
      {"DENY_OUT_OF_GEO_SCOPE", Reason::kDenyOutOfGeoScope},
      {"DENY_CROSS_TENANT", Reason::kDenyCrossTenant},
      {"DENY_UPSTREAM_UNREACHABLE", Reason::kDenyUpstreamUnreachable},
  };
  for (const auto& [name, value] : table) {
    if (name == text) return value;
  }
  return std::nullopt;
}

namespace {

bool is_identifier_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' ||
         c == '_' || c == '.';
}

}  // namespace

bool is_action_identifier(std::string_view id) {
  auto colon = id.find(':');
  if (colon == std::string_view::npos || colon == 0 ||
      colon + 1 == id.size()) {
    return false;
  }
  if (id.find(':', colon + 1) != std::string_view::npos) return false;
  for (std::size_t i = 0; i < id.size(); ++i) {
    if (i == colon) continue;
    if (!is_identifier_char(id[i])) return false;
  }
  return true;
}

std::string action_resource(std::string_view action) {
  auto colon = action.find(':');
  if (colon == std::string_view::npos) return {};
  return std::string(action.substr(0, colon));
}

namespace {

// The geo parent relation must be a forest: every chain terminates at a root
// without revisiting a node.
bool geo_chain_acyclic(const EntitlementStore& store, const std::string& start) {
  std::set<std::string> seen;
  const std::string* cur = &start;
  while (true) {
    if (!seen.insert(*cur).second) return false;
    auto it = store.geo_entities.find(*cur);
    if (it == store.geo_entities.end() || !it->second.parent) return true;
    cur = &*it->second.parent;
  }
}

}  // namespace

std::vector<std::string> validate_store(const EntitlementStore& store) {
  std::vector<std::string> violations;
  auto fail = [&violations](std::string message) {
    violations.push_back(std::move(message));
  };

  for (const auto& [id, tenant] : store.tenants) {
    if (tenant.name.empty()) fail("tenant '" + id + "' has an empty name");
  }

  for (const auto& [id, geo] : store.geo_entities) {
    if (geo.parent && !store.geo_entities.count(*geo.parent)) {
      fail("geo entity '" + id + "' references unknown parent '" +
           *geo.parent + "'");
    }
  }
  for (const auto& [id, geo] : store.geo_entities) {
    if (geo.parent && store.geo_entities.count(*geo.parent) &&
        !geo_chain_acyclic(store, id)) {
      fail("geo entity '" + id + "' participates in a parent cycle");
    }
  }

  for (const auto& id : store.permissions) {
    if (!is_action_identifier(id)) {
      fail("permission '" + id + "' is not a lowercase resource:verb identifier");
    }
  }
  for (const auto& id : store.functions) {
    if (!is_action_identifier(id)) {
      fail("function '" + id + "' is not a lowercase resource:verb identifier");
    }
  }

  for (const auto& [id, role] : store.roles) {
    for (const auto& perm : role.permissions) {
      if (!store.permissions.count(perm)) {
        fail("role '" + id + "' references unknown permission '" + perm + "'");
      }
    }
  }

  for (const auto& [id, profile] : store.profiles) {
    for (const auto& assoc : profile.associations) {
      if (!store.roles.count(assoc.role)) {
        fail("profile '" + id + "' references unknown role '" + assoc.role + "'");
      }
      if (!store.geo_entities.count(assoc.scope)) {
        fail("profile '" + id + "' references unknown geo scope '" +
             assoc.scope + "'");
      }
    }
  }

  for (const auto& [id, macro] : store.macro_functions) {
    if (macro.name.empty()) {
      fail("macro-function '" + id + "' has an empty name");
    }
    for (const auto& fn : macro.functions) {
      if (!store.functions.count(fn)) {
        fail("macro-function '" + id + "' references unknown function '" + fn +
             "'");
      }
    }
  }

  for (const auto& [id, user] : store.users) {
    if (!store.tenants.count(user.tenant)) {
      fail("user '" + id + "' references unknown tenant '" + user.tenant + "'");
    }
    for (const auto& p : user.profiles) {
      if (!store.profiles.count(p)) {
        fail("user '" + id + "' references unknown profile '" + p + "'");
      }
    }
    for (const auto& mf : user.macro_functions) {
      if (!store.macro_functions.count(mf)) {
        fail("user '" + id + "' references unknown macro-function '" + mf + "'");
      }
    }
    if (user.preferred_geo && !store.geo_entities.count(*user.preferred_geo)) {
      fail("user '" + id + "' references unknown preferred geo '" +
           *user.preferred_geo + "'");
    }
  }

  return violations;
}

namespace {

using nlohmann::json;

json string_set_to_json(const std::set<std::string>& values) {
  return json(values);  // std::set iterates sorted
}

}  // namespace

nlohmann::json store_to_json(const EntitlementStore& store) {
  json doc;
  doc["generation"] = store.generation;

  json tenants = json::array();
  for (const auto& [id, t] : store.tenants) {
    tenants.push_back({{"id", t.id}, {"name", t.name}});
  }
  doc["tenants"] = std::move(tenants);

  json geo = json::array();
  for (const auto& [id, g] : store.geo_entities) {
    json node{{"id", g.id}};
    if (g.parent) node["parent"] = *g.parent;
    geo.push_back(std::move(node));
  }
  doc["geoEntities"] = std::move(geo);

  doc["permissions"] = string_set_to_json(store.permissions);
  doc["functions"] = string_set_to_json(store.functions);

  json roles = json::array();
  for (const auto& [id, r] : store.roles) {
    roles.push_back({{"id", r.id},
                     {"name", r.name},
                     {"permissions", string_set_to_json(r.permissions)}});
  }
  doc["roles"] = std::move(roles);

  json profiles = json::array();
  for (const auto& [id, p] : store.profiles) {
    json assocs = json::array();
    for (const auto& a : p.associations) {
      assocs.push_back({{"role", a.role}, {"scope", a.scope}});
    }
    profiles.push_back(
        {{"id", p.id}, {"name", p.name}, {"associations", std::move(assocs)}});
  }
  doc["profiles"] = std::move(profiles);

  json macros = json::array();
  for (const auto& [id, m] : store.macro_functions) {
    macros.push_back({{"id", m.id},
                      {"name", m.name},
                      {"functions", string_set_to_json(m.functions)}});
  }
  doc["macroFunctions"] = std::move(macros);

  json users = json::array();
  for (const auto& [id, u] : store.users) {
    json user{{"id", u.id},
              {"tenant", u.tenant},
              {"profiles", string_set_to_json(u.profiles)},
              {"macroFunctions", string_set_to_json(u.macro_functions)}};
    if (u.preferred_geo) user["preferredGeo"] = *u.preferred_geo;
    users.push_back(std::move(user));
  }
  doc["users"] = std::move(users);

  return doc;
}

std::string to_canonical_json(const EntitlementStore& store) {
  // nlohmann::json objects are std::map-backed, so keys already serialize in
  // byte order; collections above are emitted in map/set order.
  return store_to_json(store).dump(2) + "\n";
}

namespace {

Error malformed(const std::string& detail) {
  return Error{Errc::kMalformedStore, detail, std::nullopt};
}

Result<std::set<std::string>> parse_string_set(const json& value,
                                               const std::string& where) {
  if (!value.is_array()) return malformed(where + " must be an array");
  std::set<std::string> out;
  for (const auto& item : value) {
    if (!item.is_string()) return malformed(where + " must contain strings");
    out.insert(item.get<std::string>());
  }
  return out;
}

Result<std::string> required_string(const json& obj, const char* key,
                                    const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_string()) {
    return Error{Errc::kMalformedStore,
                 where + " is missing string field '" + key + "'",
                 std::nullopt};
  }
  return obj[key].get<std::string>();
}

}  // namespace

Result<EntitlementStore> store_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) return malformed("store document must be a JSON object");
  EntitlementStore store;

  if (doc.contains("generation")) {
    if (!doc["generation"].is_number_unsigned()) {
      return malformed("generation must be a non-negative integer");
    }
    store.generation = doc["generation"].get<std::uint64_t>();
  }

  auto collection = [&doc](const char* key) -> const json& {
    static const json empty = json::array();
    if (!doc.contains(key)) return empty;
    return doc[key];
  };

  const json& tenants = collection("tenants");
  if (!tenants.is_array()) return malformed("tenants must be an array");
  for (const auto& item : tenants) {
    auto id = required_string(item, "id", "tenant");
    if (!id) return id.error();
    auto name = required_string(item, "name", "tenant '" + id.value() + "'");
    if (!name) return name.error();
    if (!store.tenants.emplace(id.value(), Tenant{id.value(), name.value()})
             .second) {
      return malformed("duplicate tenant id '" + id.value() + "'");
    }
  }

  const json& geo = collection("geoEntities");
  if (!geo.is_array()) return malformed("geoEntities must be an array");
  for (const auto& item : geo) {
    auto id = required_string(item, "id", "geo entity");
    if (!id) return id.error();
    GeographicEntity entity{id.value(), std::nullopt};
    if (item.contains("parent") && !item["parent"].is_null()) {
      if (!item["parent"].is_string()) {
        return malformed("geo entity '" + id.value() + "' parent must be a string");
      }
      entity.parent = item["parent"].get<std::string>();
    }
    if (!store.geo_entities.emplace(id.value(), std::move(entity)).second) {
      return malformed("duplicate geo entity id '" + id.value() + "'");
    }
  }

  auto perms = parse_string_set(collection("permissions"), "permissions");
  if (!perms) return perms.error();
  store.permissions = std::move(perms).value();

  auto fns = parse_string_set(collection("functions"), "functions");
  if (!fns) return fns.error();
  store.functions = std::move(fns).value();

  const json& roles = collection("roles");
  if (!roles.is_array()) return malformed("roles must be an array");
  for (const auto& item : roles) {
    auto id = required_string(item, "id", "role");
    if (!id) return id.error();
    auto name = required_string(item, "name", "role '" + id.value() + "'");
    if (!name) return name.error();
    auto rp = parse_string_set(item.contains("permissions") ? item["permissions"]
                                                            : json::array(),
                               "role '" + id.value() + "' permissions");
    if (!rp) return rp.error();
    Role role{id.value(), name.value(), std::move(rp).value()};
    if (!store.roles.emplace(id.value(), std::move(role)).second) {
      return malformed("duplicate role id '" + id.value() + "'");
    }
  }

  const json& profiles = collection("profiles");
  if (!profiles.is_array()) return malformed("profiles must be an array");
  for (const auto& item : profiles) {
    auto id = required_string(item, "id", "profile");
    if (!id) return id.error();
    auto name = required_string(item, "name", "profile '" + id.value() + "'");
    if (!name) return name.error();
    Profile profile{id.value(), name.value(), {}};
    const json& assocs =
        item.contains("associations") ? item["associations"] : json::array();
    if (!assocs.is_array()) {
      return malformed("profile '" + id.value() + "' associations must be an array");
    }
    for (const auto& a : assocs) {
      auto role = required_string(a, "role", "profile '" + id.value() + "' association");
      if (!role) return role.error();
      auto scope = required_string(a, "scope", "profile '" + id.value() + "' association");
      if (!scope) return scope.error();
      profile.associations.insert(
          ProfileAssociation{role.value(), scope.value()});
    }
    if (!store.profiles.emplace(id.value(), std::move(profile)).second) {
      return malformed("duplicate profile id '" + id.value() + "'");
    }
  }

  const json& macros = collection("macroFunctions");
  if (!macros.is_array()) return malformed("macroFunctions must be an array");
  for (const auto& item : macros) {
    auto id = required_string(item, "id", "macro-function");
    if (!id) return id.error();
    auto name = required_string(item, "name", "macro-function '" + id.value() + "'");
    if (!name) return name.error();
    auto mfns = parse_string_set(
        item.contains("functions") ? item["functions"] : json::array(),
        "macro-function '" + id.value() + "' functions");
    if (!mfns) return mfns.error();
    MacroFunction macro{id.value(), name.value(), std::move(mfns).value()};
    if (!store.macro_functions.emplace(id.value(), std::move(macro)).second) {
      return malformed("duplicate macro-function id '" + id.value() + "'");
    }
  }

  const json& users = collection("users");
  if (!users.is_array()) return malformed("users must be an array");
  for (const auto& item : users) {
    auto id = required_string(item, "id", "user");
    if (!id) return id.error();
    auto tenant = required_string(item, "tenant", "user '" + id.value() + "'");
    if (!tenant) return tenant.error();
    auto up = parse_string_set(
        item.contains("profiles") ? item["profiles"] : json::array(),
        "user '" + id.value() + "' profiles");
    if (!up) return up.error();
    auto um = parse_string_set(
        item.contains("macroFunctions") ? item["macroFunctions"] : json::array(),
        "user '" + id.value() + "' macroFunctions");
    if (!um) return um.error();
    User user{id.value(), tenant.value(), std::move(up).value(),
              std::move(um).value(), std::nullopt};
    if (item.contains("preferredGeo") && !item["preferredGeo"].is_null()) {
      if (!item["preferredGeo"].is_string()) {
        return malformed("user '" + id.value() + "' preferredGeo must be a string");
      }
      user.preferred_geo = item["preferredGeo"].get<std::string>();
    }
    if (!store.users.emplace(id.value(), std::move(user)).second) {
      return malformed("duplicate user id '" + id.value() + "'");
    }
  }

  return store;
}

Result<EntitlementStore> parse_store(const std::string& text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) return malformed("store document is not valid JSON");
  return store_from_json(doc);
}

Result<EntitlementStore> load_store_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return Error{Errc::kIoError, "cannot open fixture file '" + path + "'",
                 std::nullopt};
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  auto parsed = parse_store(buffer.str());
  if (!parsed) return parsed.error();
  auto violations = validate_store(parsed.value());
  if (!violations.empty()) {
    return malformed("fixture '" + path + "': " + violations.front());
  }
  return parsed;
}

nlohmann::json decision_to_json(const Decision& decision) {
  json doc{{"allowed", decision.allowed},
           {"reason", std::string(to_string(decision.reason))}};
  if (!decision.trace.empty()) doc["trace"] = decision.trace;
  return doc;
}

nlohmann::json grant_set_to_json(const GrantSet& grants) {
  json macros = json::array();
  for (const auto& [id, fns] : grants.macro_functions) {
    macros.push_back({{"id", id}, {"functions", json(fns)}});
  }
  return json{{"user", grants.user},
              {"generation", grants.generation},
              {"macroFunctions", std::move(macros)},
              {"functions", json(grants.functions)}};
}

Result<GrantSet> grant_set_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("user") || !doc.contains("generation") ||
      !doc.contains("functions") || !doc.contains("macroFunctions")) {
    return Error{Errc::kMalformedRequest, "malformed grant document",
                 std::nullopt};
  }
  GrantSet grants;
  if (!doc["user"].is_string() || !doc["generation"].is_number_unsigned() ||
      !doc["functions"].is_array() || !doc["macroFunctions"].is_array()) {
    return Error{Errc::kMalformedRequest, "malformed grant document",
                 std::nullopt};
  }
  grants.user = doc["user"].get<std::string>();
  grants.generation = doc["generation"].get<std::uint64_t>();
  for (const auto& fn : doc["functions"]) {
    if (!fn.is_string()) {
      return Error{Errc::kMalformedRequest, "malformed grant document",
                   std::nullopt};
    }
    grants.functions.insert(fn.get<std::string>());
  }
  for (const auto& m : doc["macroFunctions"]) {
    if (!m.is_object() || !m.contains("id") || !m["id"].is_string() ||
        !m.contains("functions") || !m["functions"].is_array()) {
      return Error{Errc::kMalformedRequest, "malformed grant document",
                   std::nullopt};
    }
    std::set<std::string> fns;
    for (const auto& fn : m["functions"]) {
      if (!fn.is_string()) {
        return Error{Errc::kMalformedRequest, "malformed grant document",
                     std::nullopt};
      }
      fns.insert(fn.get<std::string>());
    }
    grants.macro_functions.emplace(m["id"].get<std::string>(), std::move(fns));
  }
  return grants;
}

}  // namespace habilis
