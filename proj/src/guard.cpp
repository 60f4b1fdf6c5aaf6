#include "habilis/guard.hpp"

#include <fstream>
#include <sstream>

#include "habilis/engine.hpp"
#include "habilis/store.hpp"

namespace habilis::guard {

Result<ResourceRegistry> ResourceRegistry::from_json(const nlohmann::json& doc) {
  if (!doc.is_array()) {
    return Error{Errc::kMalformedRequest, "resource fixture must be a JSON array",
                 std::nullopt};
  }
  ResourceRegistry registry;
  for (const auto& item : doc) {
    if (!item.is_object() || !item.contains("id") || !item["id"].is_string() ||
        !item.contains("ownerTenant") || !item["ownerTenant"].is_string() ||
        !item.contains("kind") || !item["kind"].is_string()) {
      return Error{Errc::kMalformedRequest,
                   "resource entries need string id, ownerTenant and kind",
                   std::nullopt};
    }
    OwnedResource resource{item["id"].get<std::string>(),
                           item["ownerTenant"].get<std::string>(),
                           item["kind"].get<std::string>(), std::nullopt};
    if (resource.kind.empty()) {
      return Error{Errc::kMalformedRequest,
                   "resource '" + resource.id + "' has an empty kind",
                   std::nullopt};
    }
    if (item.contains("geoTag") && !item["geoTag"].is_null()) {
      if (!item["geoTag"].is_string()) {
        return Error{Errc::kMalformedRequest,
                     "resource '" + resource.id + "' geoTag must be a string",
                     std::nullopt};
      }
      resource.geo_tag = item["geoTag"].get<std::string>();
    }
    if (!registry.add(std::move(resource))) {
      return Error{Errc::kMalformedRequest,
                   "duplicate resource id '" + item["id"].get<std::string>() + "'",
                   std::nullopt};
    }
  }
  return registry;
}

Result<ResourceRegistry> ResourceRegistry::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return Error{Errc::kIoError, "cannot open resource file '" + path + "'",
                 std::nullopt};
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  auto doc = nlohmann::json::parse(buffer.str(), nullptr, false);
  if (doc.is_discarded()) {
    return Error{Errc::kMalformedRequest,
                 "resource file '" + path + "' is not valid JSON", std::nullopt};
  }
  return from_json(doc);
}

bool ResourceRegistry::add(OwnedResource resource) {
  auto id = resource.id;
  return resources_.emplace(std::move(id), std::move(resource)).second;
}

const OwnedResource* ResourceRegistry::find(const std::string& id) const {
  auto it = resources_.find(id);
  return it == resources_.end() ? nullptr : &it->second;
}

std::vector<OwnedResource> ResourceRegistry::all() const {
  std::vector<OwnedResource> out;
  out.reserve(resources_.size());
  for (const auto& [id, resource] : resources_) out.push_back(resource);
  return out;
}

nlohmann::json resources_to_json(const std::vector<OwnedResource>& resources) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& r : resources) {
    nlohmann::json item{{"id", r.id}, {"ownerTenant", r.owner_tenant}, {"kind", r.kind}};
    if (r.geo_tag) item["geoTag"] = *r.geo_tag;
    doc.push_back(std::move(item));
  }
  return doc;
}

namespace {

constexpr const char* kActionLayer = "action-layer";
constexpr const char* kTenantLayer = "tenant-layer";
constexpr const char* kGeoLayer = "geo-layer";

bool within_preferred_geo(const EntitlementStore& store, const User& user,
                          const OwnedResource& resource) {
  if (!user.preferred_geo || !resource.geo_tag) return true;
  auto within = geo_within(store, *resource.geo_tag, *user.preferred_geo);
  return within.ok() && within.value();
}

}  // namespace

Decision guard_with_decision(const EntitlementStore& store, const User& user,
                             const std::string& action,
                             const Decision& action_decision,
                             const OwnedResource& resource,
                             const GuardOptions& options) {
  // Mismatched request shape: the action names a different resource kind.
  if (action_resource(action) != resource.kind) {
    return Decision::deny(Reason::kDenyUnknownAction, kActionLayer);
  }
  if (!action_decision.allowed) {
    Decision denied = action_decision;
    denied.trace = kActionLayer;
    return denied;
  }
  if (resource.owner_tenant != user.tenant) {
    return Decision::deny(Reason::kDenyCrossTenant, kTenantLayer);
  }
  if (options.strict_geo && !within_preferred_geo(store, user, resource)) {
    return Decision::deny(Reason::kDenyOutOfGeoScope, kGeoLayer);
  }
  return action_decision;
}

Decision guard(const EntitlementStore& store, const User& user,
               const std::string& action, const OwnedResource& resource,
               const GrantSet& grants, const GuardOptions& options) {
  return guard_with_decision(store, user, action, ms_authorize(grants, action),
                             resource, options);
}

std::vector<OwnedResource> filter_visible(const EntitlementStore& store,
                                          const User& user,
                                          const std::vector<OwnedResource>& resources,
                                          const GrantSet& grants,
                                          const std::string& read_action,
                                          const GuardOptions& options) {
  std::vector<OwnedResource> visible;
  for (const auto& resource : resources) {
    if (!guard(store, user, read_action, resource, grants, options).allowed) {
      continue;
    }
    if (!within_preferred_geo(store, user, resource)) continue;
    visible.push_back(resource);
  }
  return visible;
}

}  // namespace habilis::guard
