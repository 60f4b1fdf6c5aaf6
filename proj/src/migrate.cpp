#include "habilis/migrate.hpp"

#include <vector>

#include "habilis/engine.hpp"
#include "habilis/store.hpp"

namespace habilis {

std::string migrated_macro_id(const std::string& role_id) {
  return std::string(kMigratedMacroPrefix) + role_id;
}

namespace {

// Ancestor chain from the entity up to its root, entity first.
std::vector<std::string> ancestor_chain(const EntitlementStore& store,
                                        const std::string& start) {
  std::vector<std::string> chain;
  const std::string* cur = &start;
  for (std::size_t steps = 0; steps <= store.geo_entities.size(); ++steps) {
    chain.push_back(*cur);
    auto it = store.geo_entities.find(*cur);
    if (it == store.geo_entities.end() || !it->second.parent) break;
    cur = &*it->second.parent;
  }
  return chain;
}

// Lowest common ancestor across a set of scopes, unset when the scopes span
// different trees of the forest.
std::optional<std::string> lowest_common_ancestor(
    const EntitlementStore& store, const std::set<std::string>& scopes) {
  if (scopes.empty()) return std::nullopt;
  auto first_chain = ancestor_chain(store, *scopes.begin());
  for (const auto& candidate : first_chain) {
    bool common = true;
    for (const auto& scope : scopes) {
      auto within = geo_within(store, scope, candidate);
      if (!within.ok() || !within.value()) {
        common = false;
        break;
      }
    }
    if (common) return candidate;
  }
  return std::nullopt;
}

// Roles reachable through the user's profiles, and the scopes attached to
// their associations.
void collect_reachable(const EntitlementStore& store, const User& user,
                       std::set<std::string>& roles,
                       std::set<std::string>& scopes) {
  for (const auto& profile_id : user.profiles) {
    auto it = store.profiles.find(profile_id);
    if (it == store.profiles.end()) continue;
    for (const auto& assoc : it->second.associations) {
      roles.insert(assoc.role);
      scopes.insert(assoc.scope);
    }
  }
}

}  // namespace

Result<EntitlementStore> migrate_grants(const EntitlementStore& store) {
  auto violations = validate_store(store);
  if (!violations.empty()) {
    return Error{Errc::kMalformedStore, violations.front(), std::nullopt};
  }

  EntitlementStore out = store;

  for (const auto& [role_id, role] : store.roles) {
    MacroFunction macro;
    macro.id = migrated_macro_id(role_id);
    macro.name = role.name.empty() ? role_id : role.name;
    macro.functions = role.permissions;
    out.functions.insert(role.permissions.begin(), role.permissions.end());
    out.macro_functions[macro.id] = std::move(macro);
  }

  for (auto& [user_id, user] : out.users) {
    std::set<std::string> roles;
    std::set<std::string> scopes;
    collect_reachable(store, user, roles, scopes);

    user.macro_functions.clear();
    for (const auto& role_id : roles) {
      user.macro_functions.insert(migrated_macro_id(role_id));
    }
    user.preferred_geo = lowest_common_ancestor(store, scopes);
  }

  out.generation = store.generation + 1;
  return out;
}

Result<EquivalenceReport> check_migrated(const EntitlementStore& store) {
  for (const auto& [user_id, user] : store.users) {
    std::set<std::string> roles;
    std::set<std::string> scopes;
    collect_reachable(store, user, roles, scopes);
    for (const auto& role_id : roles) {
      const std::string macro_id = migrated_macro_id(role_id);
      if (!store.macro_functions.count(macro_id) ||
          !user.macro_functions.count(macro_id)) {
        return Error{Errc::kNotMigrated,
                     "user '" + user_id + "' reaches role '" + role_id +
                         "' but macro-function '" + macro_id +
                         "' is absent or ungranted",
                     std::nullopt};
      }
    }
  }
  return EquivalenceReport{};
}

Result<EquivalenceReport> decisions_equivalent(const EntitlementStore& store) {
  auto migrated = check_migrated(store);
  if (!migrated) return migrated.error();

  EquivalenceReport report;
  for (const auto& [user_id, user] : store.users) {
    auto grants = expand_macro_functions(store, user_id);
    for (const auto& action : store.permissions) {
      bool legacy = legacy_authorize(store, user_id, action).allowed;
      bool macro = ms_authorize(grants.value(), action).allowed;
      ++report.pairs_checked;
      if (legacy != macro) {
        report.mismatches.push_back(
            MismatchedPair{user_id, action, legacy, macro});
      }
    }
  }
  return report;
}

nlohmann::json equivalence_report_to_json(const EquivalenceReport& report) {
  nlohmann::json mismatches = nlohmann::json::array();
  for (const auto& pair : report.mismatches) {
    mismatches.push_back({{"user", pair.user},
                          {"action", pair.action},
                          {"legacyAllowed", pair.legacy_allowed},
                          {"macroAllowed", pair.macro_allowed}});
  }
  return {{"pairsChecked", report.pairs_checked},
          {"mismatchCount", report.mismatches.size()},
          {"mismatches", std::move(mismatches)}};
}

}  // namespace habilis
