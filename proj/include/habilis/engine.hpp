#pragma once

#include <optional>
#include <string>

#include "habilis/model.hpp"
#include "habilis/result.hpp"

namespace habilis {

// True iff scope is candidate itself or an ancestor of candidate: a scope
// covers its whole subtree. Errors with UNKNOWN_GEO_ENTITY when either id
// does not resolve.
Result<bool> geo_within(const EntitlementStore& store,
                        const std::string& candidate,
                        const std::string& scope);

// Legacy RBAC decision: allowed iff some profile of the user carries an
// association (role, scope) whose role grants the action and, when a geo is
// given, the geo lies within the association's scope. Deny-by-default; never
// fails. The trace names the first matching profile/role pair under
// lexicographic ordering.
Decision legacy_authorize(const EntitlementStore& store,
                          const std::string& user_id,
                          const std::string& action,
                          const std::optional<std::string>& geo = std::nullopt);

// Union of functions over every macro-function granted to the user, with the
// store generation and the per-grant breakdown.
Result<GrantSet> expand_macro_functions(const EntitlementStore& store,
                                        const std::string& user_id);

// New-model decision: pure membership of the action in the retrieved set. No
// store access.
Decision ms_authorize(const GrantSet& grants, const std::string& action);

}  // namespace habilis
