#pragma once

#include <vector>

#include "habilis/guard.hpp"
#include "habilis/model.hpp"

namespace habilis {

// The canonical demo fixture: two enterprises (acme, globex), a French
// geographic tree, gestionnaire/lecteur/facturier roles, and users covering
// the scoped, unscoped and grantless cases. Shipped by `habilis seed`.
EntitlementStore demo_store();

// Accounts and invoices owned by both tenants, tagged across the geo tree.
std::vector<guard::OwnedResource> demo_resources();

}  // namespace habilis
