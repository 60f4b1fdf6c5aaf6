#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "habilis/model.hpp"
#include "habilis/result.hpp"

namespace habilis {

// Migrated macro-functions are named after the role they compile from.
inline constexpr std::string_view kMigratedMacroPrefix = "mf:";

std::string migrated_macro_id(const std::string& role_id);

// Deterministic migration compiler: one macro-function per role carrying one
// function per permission (same identifiers), users granted the
// macro-functions of every role reachable through their profiles, and
// preferredGeo derived as the lowest common ancestor of their association
// scopes. Legacy collections are preserved for the dual-run window; the
// output generation is input + 1.
Result<EntitlementStore> migrate_grants(const EntitlementStore& store);

struct MismatchedPair {
  std::string user;
  std::string action;
  bool legacy_allowed = false;
  bool macro_allowed = false;

  auto operator<=>(const MismatchedPair&) const = default;
};

struct EquivalenceReport {
  std::uint64_t pairs_checked = 0;
  std::vector<MismatchedPair> mismatches;
};

// Fails with NOT_MIGRATED when some user still reaches a role whose compiled
// macro-function is absent or ungranted.
Result<EquivalenceReport> check_migrated(const EntitlementStore& store);

// Enumerates every (user, permission) pair and compares the legacy decision
// (geo absent) against the new-model decision over the user's expanded
// grants. An empty mismatch list is the success condition.
Result<EquivalenceReport> decisions_equivalent(const EntitlementStore& store);

nlohmann::json equivalence_report_to_json(const EquivalenceReport& report);

}  // namespace habilis
