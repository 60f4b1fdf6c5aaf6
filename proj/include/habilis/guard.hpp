#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "habilis/model.hpp"
#include "habilis/result.hpp"

namespace habilis::guard {

struct OwnedResource {
  std::string id;
  std::string owner_tenant;
  std::string kind;  // matches the resource half of action identifiers
  std::optional<std::string> geo_tag;

  bool operator==(const OwnedResource&) const = default;
};

class ResourceRegistry {
 public:
  // Duplicate ids or missing fields fail the whole load.
  static Result<ResourceRegistry> from_json(const nlohmann::json& doc);
  static Result<ResourceRegistry> load_file(const std::string& path);

  bool add(OwnedResource resource);  // false on duplicate id
  const OwnedResource* find(const std::string& id) const;
  std::vector<OwnedResource> all() const;  // sorted by id
  std::size_t size() const { return resources_.size(); }

 private:
  std::map<std::string, OwnedResource> resources_;
};

nlohmann::json resources_to_json(const std::vector<OwnedResource>& resources);

struct GuardOptions {
  // The strict reading of preferred-geo: deny point access to resources
  // tagged outside the user's preferred subtree, instead of only filtering
  // listings.
  bool strict_geo = false;
};

// Layer-2 check over an already-computed action-level decision: the acting
// user's tenant must own the resource. Evaluation order is fixed — request
// shape, then the action layer, then the tenant layer — and the trace names
// the layer that denied.
Decision guard_with_decision(const EntitlementStore& store, const User& user,
                             const std::string& action,
                             const Decision& action_decision,
                             const OwnedResource& resource,
                             const GuardOptions& options = {});

// Full new-model guard: membership of the action in the user's grants, then
// tenant ownership.
Decision guard(const EntitlementStore& store, const User& user,
               const std::string& action, const OwnedResource& resource,
               const GrantSet& grants, const GuardOptions& options = {});

// Resources the user may see: guard allows, and — when the user has a
// preferred geographic granularity — the resource is untagged or tagged
// within that subtree. Order preserved.
std::vector<OwnedResource> filter_visible(const EntitlementStore& store,
                                          const User& user,
                                          const std::vector<OwnedResource>& resources,
                                          const GrantSet& grants,
                                          const std::string& read_action,
                                          const GuardOptions& options = {});

}  // namespace habilis::guard
