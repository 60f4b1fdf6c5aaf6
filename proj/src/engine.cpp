#include "habilis/engine.hpp"

namespace habilis {

Result<bool> geo_within(const EntitlementStore& store,
                        const std::string& candidate,
                        const std::string& scope) {
  if (!store.geo_entities.count(candidate)) {
    return Error{Errc::kUnknownGeoEntity,
                 "unknown geo entity '" + candidate + "'", std::nullopt};
  }
  if (!store.geo_entities.count(scope)) {
    return Error{Errc::kUnknownGeoEntity, "unknown geo entity '" + scope + "'",
                 std::nullopt};
  }
  const std::string* cur = &candidate;
  // A consistent store is acyclic; the step cap keeps the walk finite even on
  // an unvalidated one.
  for (std::size_t steps = 0; steps <= store.geo_entities.size(); ++steps) {
    if (*cur == scope) return true;
    auto it = store.geo_entities.find(*cur);
    if (it == store.geo_entities.end() || !it->second.parent) return false;
    cur = &*it->second.parent;
  }
  return false;
}

Decision legacy_authorize(const EntitlementStore& store,
                          const std::string& user_id,
                          const std::string& action,
                          const std::optional<std::string>& geo) {
  auto user_it = store.users.find(user_id);
  if (user_it == store.users.end()) {
    return Decision::deny(Reason::kDenyUnknownUser);
  }
  if (!store.permissions.count(action)) {
    return Decision::deny(Reason::kDenyUnknownAction);
  }

  const User& user = user_it->second;
  bool geo_blocked = false;
  // std::set iteration gives the fixed lexicographic ordering the trace
  // contract requires: profiles by id, associations by (role, scope).
  for (const auto& profile_id : user.profiles) {
    auto profile_it = store.profiles.find(profile_id);
    if (profile_it == store.profiles.end()) continue;
    for (const auto& assoc : profile_it->second.associations) {
      auto role_it = store.roles.find(assoc.role);
      if (role_it == store.roles.end()) continue;
      if (!role_it->second.permissions.count(action)) continue;
      if (!geo) {
        return Decision::allow(Reason::kAllowedByRole,
                               profile_id + "/" + assoc.role);
      }
      auto within = geo_within(store, *geo, assoc.scope);
      if (within.ok() && within.value()) {
        return Decision::allow(Reason::kAllowedByRole,
                               profile_id + "/" + assoc.role);
      }
      // The grant exists but not at this perimeter; an unresolved geo
      // argument is equally outside every scope.
      geo_blocked = true;
    }
  }
  return Decision::deny(geo_blocked ? Reason::kDenyOutOfGeoScope
                                    : Reason::kDenyNoGrant);
}

Result<GrantSet> expand_macro_functions(const EntitlementStore& store,
                                        const std::string& user_id) {
  auto user_it = store.users.find(user_id);
  if (user_it == store.users.end()) {
    return Error{Errc::kUnknownUser, "unknown user '" + user_id + "'",
                 std::nullopt};
  }
  GrantSet grants;
  grants.user = user_id;
  grants.generation = store.generation;
  for (const auto& macro_id : user_it->second.macro_functions) {
    auto macro_it = store.macro_functions.find(macro_id);
    if (macro_it == store.macro_functions.end()) continue;
    grants.macro_functions.emplace(macro_id, macro_it->second.functions);
    grants.functions.insert(macro_it->second.functions.begin(),
                            macro_it->second.functions.end());
  }
  return grants;
}

Decision ms_authorize(const GrantSet& grants, const std::string& action) {
  // Trace the lexicographically first granting macro-function.
  for (const auto& [macro_id, functions] : grants.macro_functions) {
    if (functions.count(action)) {
      return Decision::allow(Reason::kAllowedByMacroFunction, macro_id);
    }
  }
  if (grants.macro_functions.empty() && grants.functions.count(action)) {
    return Decision::allow(Reason::kAllowedByMacroFunction, {});
  }
  return Decision::deny(Reason::kDenyNoGrant);
}

}  // namespace habilis
