#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "habilis/model.hpp"
#include "habilis/result.hpp"

namespace habilis {

// Action identifiers (permissions and functions share this lexical space)
// are lowercase "resource:verb", e.g. "account:read".
bool is_action_identifier(std::string_view id);

// Splits "account:read" into its resource half; empty when malformed.
std::string action_resource(std::string_view action);

// Returns every violated referential-integrity or shape constraint, each
// message naming the offending entity. Empty result means the store is
// internally consistent.
std::vector<std::string> validate_store(const EntitlementStore& store);

nlohmann::json store_to_json(const EntitlementStore& store);

// Canonical serialization: collections and set members sorted by id, object
// keys sorted, fixed indentation. Identical logical content yields identical
// bytes.
std::string to_canonical_json(const EntitlementStore& store);

Result<EntitlementStore> store_from_json(const nlohmann::json& doc);
Result<EntitlementStore> parse_store(const std::string& text);

// Parse + validate in one step, as used by fixture loading paths.
Result<EntitlementStore> load_store_file(const std::string& path);

nlohmann::json decision_to_json(const Decision& decision);
nlohmann::json grant_set_to_json(const GrantSet& grants);
Result<GrantSet> grant_set_from_json(const nlohmann::json& doc);

}  // namespace habilis
