// habilis: operator entry point for the habilitation service and its tools.
//
// Exit codes are a stable contract: 0 allow/success, 1 deny/mismatch,
// 2 usage or input error, 3 data corruption, 4 upstream unreachable.
// Machine-readable JSON goes to stdout, human diagnostics to stderr.

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "habilis/client.hpp"
#include "habilis/demo.hpp"
#include "habilis/engine.hpp"
#include "habilis/http_server.hpp"
#include "habilis/migrate.hpp"
#include "habilis/service.hpp"
#include "habilis/sim.hpp"
#include "habilis/store.hpp"

namespace {

using nlohmann::json;

constexpr int kExitAllow = 0;
constexpr int kExitDeny = 1;
constexpr int kExitUsage = 2;
constexpr int kExitCorrupt = 3;
constexpr int kExitUnreachable = 4;

std::atomic<bool> g_shutdown{false};

void handle_signal(int) { g_shutdown = true; }

void print_error(const habilis::Error& error) {
  json doc{{"code", std::string(habilis::to_string(error.code))},
           {"message", error.message}};
  if (error.byte_offset) doc["byteOffset"] = *error.byte_offset;
  std::cout << doc.dump() << std::endl;
  std::cerr << "error: " << error.message << std::endl;
}

int exit_code_for(const habilis::Error& error) {
  switch (error.code) {
    case habilis::Errc::kCorruptJournal: return kExitCorrupt;
    case habilis::Errc::kUpstreamUnreachable: return kExitUnreachable;
    default: return kExitUsage;
  }
}

bool write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return false;
  out << content;
  return static_cast<bool>(out);
}

std::pair<std::string, int> split_listen(const std::string& listen) {
  auto colon = listen.rfind(':');
  if (colon == std::string::npos) return {listen, 8080};
  return {listen.substr(0, colon), std::atoi(listen.c_str() + colon + 1)};
}

int run_serve(const std::string& data_dir, const std::string& listen,
              const std::string& admin_secret, int snapshot_every) {
  habilis::service::ServiceOptions options;
  options.data_dir = data_dir;
  options.snapshot_every = snapshot_every;
  auto core = habilis::service::ServiceCore::open(std::move(options));
  if (!core) {
    print_error(core.error());
    return exit_code_for(core.error());
  }

  if (admin_secret.empty()) {
    std::cerr << "warning: no admin secret configured; admin endpoints are disabled"
              << std::endl;
  }

  habilis::service::HttpServer server(*core.value(), admin_secret);
  auto [host, port] = split_listen(listen);
  if (!server.start(host, port)) {
    habilis::Error error{habilis::Errc::kIoError,
                         "cannot bind listen address '" + listen + "'",
                         std::nullopt};
    print_error(error);
    return kExitUsage;
  }

  std::cout << json{{"status", "serving"},
                    {"listen", host + ":" + std::to_string(server.port())},
                    {"generation", core.value()->generation()}}
                   .dump()
            << std::endl;

  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  while (!g_shutdown) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }

  std::cerr << "shutting down" << std::endl;
  server.stop();
  if (auto err = core.value()->flush_snapshot()) {
    std::cerr << "snapshot flush failed: " << err->message << std::endl;
  }
  return kExitAllow;
}

int run_seed(const std::string& fixture_path, const std::string& resources_path) {
  const auto store = habilis::demo_store();
  if (!write_file(fixture_path, habilis::to_canonical_json(store))) {
    std::cerr << "cannot write '" << fixture_path << "'" << std::endl;
    return kExitUsage;
  }
  const auto resources = habilis::demo_resources();
  if (!write_file(resources_path,
                  habilis::guard::resources_to_json(resources).dump(2) + "\n")) {
    std::cerr << "cannot write '" << resources_path << "'" << std::endl;
    return kExitUsage;
  }
  std::cout << json{{"fixture", fixture_path}, {"resources", resources_path}}.dump()
            << std::endl;
  return kExitAllow;
}

int run_migrate(const std::string& fixture_path) {
  auto store = habilis::load_store_file(fixture_path);
  if (!store) {
    print_error(store.error());
    return kExitUsage;
  }
  auto migrated = habilis::migrate_grants(store.value());
  if (!migrated) {
    print_error(migrated.error());
    return kExitUsage;
  }
  std::cout << habilis::to_canonical_json(migrated.value());
  return kExitAllow;
}

int run_verify(const std::string& fixture_path) {
  auto store = habilis::load_store_file(fixture_path);
  if (!store) {
    print_error(store.error());
    return kExitUsage;
  }
  auto migrated = habilis::migrate_grants(store.value());
  if (!migrated) {
    print_error(migrated.error());
    return kExitUsage;
  }
  auto report = habilis::decisions_equivalent(migrated.value());
  if (!report) {
    print_error(report.error());
    return kExitUsage;
  }
  std::cout << habilis::equivalence_report_to_json(report.value()).dump(2)
            << std::endl;
  return report.value().mismatches.empty() ? kExitAllow : kExitDeny;
}

int run_check(const std::string& user, const std::string& action,
              const std::string& geo, const std::string& mode,
              const std::string& endpoint, const std::string& fixture_path) {
  std::optional<std::string> geo_arg;
  if (!geo.empty()) geo_arg = geo;

  habilis::Decision decision;
  std::uint64_t generation = 0;

  if (!endpoint.empty()) {
    habilis::client::ClientConfig config;
    config.mode = mode == "MACRO" ? habilis::client::Mode::kPhase2
                                  : habilis::client::Mode::kPhase1;
    habilis::client::AuthzClient client(
        std::make_shared<habilis::client::HttpTransport>(endpoint), config);
    auto result = client.check(user, action, geo_arg);
    decision = result.decision;
    generation = result.generation;
    std::cerr << client.counters().to_json().dump() << std::endl;
  } else {
    auto store = habilis::load_store_file(fixture_path);
    if (!store) {
      print_error(store.error());
      return kExitUsage;
    }
    generation = store.value().generation;
    if (mode == "MACRO") {
      auto grants = habilis::expand_macro_functions(store.value(), user);
      decision = grants
                     ? habilis::ms_authorize(grants.value(), action)
                     : habilis::Decision::deny(habilis::Reason::kDenyUnknownUser);
    } else {
      decision = habilis::legacy_authorize(store.value(), user, action, geo_arg);
    }
  }

  json doc = habilis::decision_to_json(decision);
  doc["generation"] = generation;
  std::cout << doc.dump() << std::endl;
  if (decision.reason == habilis::Reason::kDenyUpstreamUnreachable) {
    return kExitUnreachable;
  }
  return decision.allowed ? kExitAllow : kExitDeny;
}

int run_simulate(const std::string& fixture_path, const std::string& resources_path,
                 std::uint64_t seed, std::uint64_t requests,
                 const std::string& topology_name, int services,
                 int replica_refresh_every, std::int64_t ttl_ms,
                 std::int64_t hop_cost_ms) {
  auto store = habilis::load_store_file(fixture_path);
  if (!store) {
    print_error(store.error());
    return kExitUsage;
  }
  auto registry = habilis::guard::ResourceRegistry::load_file(resources_path);
  if (!registry) {
    print_error(registry.error());
    return kExitUsage;
  }

  habilis::sim::Workload workload;
  workload.seed = seed;
  workload.request_count = requests;

  const std::int64_t ttl =
      ttl_ms < 0 ? habilis::sim::kTtlInfinite : ttl_ms;

  habilis::Result<habilis::sim::SimReport> report{habilis::sim::SimReport{}};
  if (topology_name == "COMPARE_PHASES") {
    habilis::sim::PhaseOptions options;
    options.service_count = services;
    options.hop_cost_ms = hop_cost_ms;
    options.cache_ttl_ms = ttl;
    report = habilis::sim::compare_phases(store.value(), registry.value(),
                                          workload, options);
  } else {
    auto kind = habilis::sim::topology_kind_from_string(topology_name);
    if (!kind) {
      std::cerr << "unknown topology '" << topology_name << "'" << std::endl;
      return kExitUsage;
    }
    habilis::sim::Topology topology;
    topology.kind = *kind;
    topology.service_count = services;
    topology.replica_refresh_every = replica_refresh_every;
    topology.hop_cost_ms = hop_cost_ms;
    topology.cache_ttl_ms = ttl;
    report = habilis::sim::run_sim(store.value(), registry.value(), topology,
                                   workload);
  }

  if (!report) {
    print_error(report.error());
    return kExitUsage;
  }

  auto started = std::chrono::steady_clock::now();
  json doc = report.value().to_json();
  doc["config"]["fixtureRef"] = fixture_path;
  doc["config"]["resourceRef"] = resources_path;
  std::cout << doc.dump(2) << std::endl;
  std::cerr << report.value().to_table();
  auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                     std::chrono::steady_clock::now() - started)
                     .count();
  std::cerr << "wall-clock report emission: " << elapsed << " ms" << std::endl;
  return report.value().mismatched_decisions.empty() ? kExitAllow : kExitDeny;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"habilis: centralized entitlement service, migration compiler and fleet simulator"};
  app.require_subcommand(1);

  // serve
  auto* serve = app.add_subcommand("serve", "run the habilitation service");
  std::string data_dir;
  std::string listen = "127.0.0.1:8080";
  std::string admin_secret;
  int snapshot_every = 100;
  serve->add_option("--data-dir", data_dir, "journal/snapshot directory")
      ->envname("HABILIS_DATA_DIR")
      ->required();
  serve->add_option("--listen", listen, "listen address host:port")
      ->envname("HABILIS_LISTEN");
  serve->add_option("--admin-secret", admin_secret, "admin bearer secret")
      ->envname("HABILIS_ADMIN_SECRET");
  serve->add_option("--snapshot-every", snapshot_every,
                    "snapshot interval in applied commands")
      ->envname("HABILIS_SNAPSHOT_EVERY");

  // seed
  auto* seed_cmd = app.add_subcommand("seed", "write the demo fixture and resources");
  std::string seed_fixture = "demo-fixture.json";
  std::string seed_resources = "demo-resources.json";
  seed_cmd->add_option("--fixture", seed_fixture, "fixture output path")
      ->envname("HABILIS_FIXTURE");
  seed_cmd->add_option("--resources", seed_resources, "resource output path")
      ->envname("HABILIS_RESOURCES");

  // migrate
  auto* migrate_cmd =
      app.add_subcommand("migrate", "compile legacy grants to macro-functions");
  std::string migrate_fixture;
  migrate_cmd->add_option("--fixture", migrate_fixture, "fixture to migrate")
      ->envname("HABILIS_FIXTURE")
      ->required();

  // verify
  auto* verify_cmd = app.add_subcommand(
      "verify", "migrate and check legacy/macro decision equivalence");
  std::string verify_fixture;
  verify_cmd->add_option("--fixture", verify_fixture, "fixture to verify")
      ->envname("HABILIS_FIXTURE")
      ->required();

  // check
  auto* check_cmd = app.add_subcommand("check", "evaluate a single decision");
  std::string check_user;
  std::string check_action;
  std::string check_geo;
  std::string check_mode = "LEGACY";
  std::string check_endpoint;
  std::string check_fixture;
  check_cmd->add_option("user", check_user, "user id")->required();
  check_cmd->add_option("action", check_action, "action identifier")->required();
  check_cmd->add_option("--geo", check_geo, "geographic entity id");
  check_cmd->add_option("--mode", check_mode, "LEGACY or MACRO")
      ->envname("HABILIS_MODE")
      ->check(CLI::IsMember({"LEGACY", "MACRO"}));
  check_cmd->add_option("--endpoint", check_endpoint,
                        "habilitation service base URL")
      ->envname("HABILIS_ENDPOINT");
  check_cmd->add_option("--fixture", check_fixture, "local fixture path")
      ->envname("HABILIS_FIXTURE");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "run the deterministic fleet simulator");
  std::string sim_fixture;
  std::string sim_resources;
  std::uint64_t sim_seed = 1;
  std::uint64_t sim_requests = 1000;
  std::string sim_topology = "CENTRALIZED_HS";
  int sim_services = 1;
  int sim_refresh = 100;
  std::int64_t sim_ttl = -1;
  std::int64_t sim_hop = 1;
  sim_cmd->add_option("--fixture", sim_fixture, "entitlement fixture")
      ->envname("HABILIS_FIXTURE")
      ->required();
  sim_cmd->add_option("--resources", sim_resources, "resource fixture")
      ->envname("HABILIS_RESOURCES")
      ->required();
  sim_cmd->add_option("--seed", sim_seed, "workload seed")
      ->envname("HABILIS_SEED");
  sim_cmd->add_option("--requests", sim_requests, "request count")
      ->envname("HABILIS_REQUESTS");
  sim_cmd
      ->add_option("--topology", sim_topology,
                   "MONOLITH_RBAC | CENTRALIZED_HS | DECENTRALIZED_REPLICAS | COMPARE_PHASES")
      ->envname("HABILIS_TOPOLOGY");
  sim_cmd->add_option("--services", sim_services, "simulated service count")
      ->envname("HABILIS_SERVICES");
  sim_cmd
      ->add_option("--replica-refresh-every", sim_refresh,
                   "decentralized replica refresh interval")
      ->envname("HABILIS_REPLICA_REFRESH_EVERY");
  sim_cmd->add_option("--ttl-ms", sim_ttl, "client cache TTL, -1 = infinite")
      ->envname("HABILIS_TTL_MS");
  sim_cmd->add_option("--hop-cost-ms", sim_hop, "simulated per-call latency")
      ->envname("HABILIS_HOP_COST_MS");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (serve->parsed()) {
    return run_serve(data_dir, listen, admin_secret, snapshot_every);
  }
  if (seed_cmd->parsed()) return run_seed(seed_fixture, seed_resources);
  if (migrate_cmd->parsed()) return run_migrate(migrate_fixture);
  if (verify_cmd->parsed()) return run_verify(verify_fixture);
  if (check_cmd->parsed()) {
    if (check_endpoint.empty() && check_fixture.empty()) {
      std::cerr << "check needs --endpoint or --fixture" << std::endl;
      return kExitUsage;
    }
    return run_check(check_user, check_action, check_geo, check_mode,
                     check_endpoint, check_fixture);
  }
  if (sim_cmd->parsed()) {
    return run_simulate(sim_fixture, sim_resources, sim_seed, sim_requests,
                        sim_topology, sim_services, sim_refresh, sim_ttl,
                        sim_hop);
  }
  return kExitUsage;
}
