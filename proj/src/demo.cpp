#include "habilis/demo.hpp"

namespace habilis {

EntitlementStore demo_store() {
  EntitlementStore store;
  store.generation = 0;

  store.tenants["acme"] = Tenant{"acme", "ACME"};
  store.tenants["globex"] = Tenant{"globex", "GLOBEX"};

  store.geo_entities["fr"] = GeographicEntity{"fr", std::nullopt};
  store.geo_entities["fr-idf"] = GeographicEntity{"fr-idf", "fr"};
  store.geo_entities["fr-sud"] = GeographicEntity{"fr-sud", "fr"};
  store.geo_entities["paris"] = GeographicEntity{"paris", "fr-idf"};
  store.geo_entities["marseille"] = GeographicEntity{"marseille", "fr-sud"};

  store.permissions = {"account:read", "account:write", "invoice:read"};

  store.roles["gestionnaire"] =
      Role{"gestionnaire", "Gestionnaire", {"account:read", "account:write"}};
  store.roles["lecteur"] = Role{"lecteur", "Lecteur", {"account:read"}};
  store.roles["facturier"] = Role{"facturier", "Facturier", {"invoice:read"}};

  store.profiles["p-gestion-idf"] =
      Profile{"p-gestion-idf", "Gestion IdF", {{"gestionnaire", "fr-idf"}}};
  store.profiles["p-lecture-fr"] =
      Profile{"p-lecture-fr", "Lecture France", {{"lecteur", "fr"}}};
  store.profiles["p-gestion-sud"] =
      Profile{"p-gestion-sud", "Gestion Sud", {{"gestionnaire", "fr-sud"}}};
  store.profiles["p-facture-paris"] =
      Profile{"p-facture-paris", "Facturation Paris",
              {{"facturier", "paris"}, {"lecteur", "paris"}}};

  store.users["alice"] =
      User{"alice", "acme", {"p-gestion-idf"}, {}, std::nullopt};
  store.users["bruno"] =
      User{"bruno", "acme", {"p-lecture-fr"}, {}, std::nullopt};
  store.users["chloe"] =
      User{"chloe", "globex", {"p-gestion-sud"}, {}, std::nullopt};
  store.users["diane"] =
      User{"diane", "globex", {"p-facture-paris"}, {}, std::nullopt};
  store.users["eve"] = User{"eve", "acme", {}, {}, std::nullopt};

  return store;
}

std::vector<guard::OwnedResource> demo_resources() {
  return {
      {"acct-acme-01", "acme", "account", "paris"},
      {"acct-acme-02", "acme", "account", "fr-sud"},
      {"acct-acme-03", "acme", "account", std::nullopt},
      {"acct-globex-01", "globex", "account", "marseille"},
      {"acct-globex-02", "globex", "account", "fr-idf"},
      {"inv-acme-01", "acme", "invoice", "paris"},
      {"inv-globex-01", "globex", "invoice", std::nullopt},
  };
}

}  // namespace habilis
