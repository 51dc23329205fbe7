#include "coresim/cli.hpp"

#include <cstdlib>
#include <iostream>

#include "coresim/harness.hpp"
#include "coresim/model.hpp"
#include "coresim/netem.hpp"
#include "coresim/telemetry.hpp"
#include "coresim/vnf.hpp"

#include "CLI11.hpp"

namespace coresim::cli {

namespace {

netem::Topology resolve_topology(const std::string& spec) {
  if (spec.empty() || spec == "builtin:aws") return netem::reference_topology();
  return netem::Topology::load_file(spec);
}

// The bundled topology links every edge zone to exactly one AZ anchor, so the
// AZ can be inferred from the edge zone.
ZoneId infer_az(const netem::Topology& topo, const ZoneId& edge) {
  const ZoneId* found = nullptr;
  for (const auto& l : topo.links) {
    const ZoneId* other = nullptr;
    if (l.a == edge) other = &l.b;
    if (l.b == edge) other = &l.a;
    if (other && other->kind == ZoneKind::Az) {
      if (found && !(*found == *other)) {
        throw ConfigError("AmbiguousAz",
                          edge.str() + " links to several AZs; pass --az explicitly");
      }
      found = other;
    }
  }
  if (!found) {
    throw ConfigError("UnknownZone", "cannot infer an AZ for " + edge.str() + "; pass --az");
  }
  return *found;
}

std::string csv_path_for(const std::string& json_path) {
  const std::string suffix = ".json";
  if (json_path.size() > suffix.size() &&
      json_path.compare(json_path.size() - suffix.size(), suffix.size(), suffix) == 0) {
    return json_path.substr(0, json_path.size() - suffix.size()) + ".csv";
  }
  return json_path + ".csv";
}

int cmd_run(const std::string& strategy_name, const std::string& edge_name,
            const std::string& az_name, const std::string& topology_spec,
            const std::string& mode_name, const std::string& delay_name, int runs, int ues,
            uint64_t seed, const std::string& processing_path, const std::string& out_path,
            std::string store_dir, bool concurrent, bool passthrough) {
  harness::ExperimentSpec spec;
  spec.strategy = strategy_from_string(strategy_name);
  spec.topology = resolve_topology(topology_spec);

  if (!az_name.empty()) {
    spec.az_zone = ZoneId::parse(az_name);
  } else if (!edge_name.empty()) {
    spec.az_zone = infer_az(spec.topology, ZoneId::parse(edge_name));
  } else {
    throw ConfigError("MissingZone", "pass --edge (and optionally --az)");
  }
  if (spec.strategy == Strategy::Monolithic) {
    // The benchmark slice lives entirely in the AZ; an --edge argument only
    // selects which AZ anchor via its link.
    spec.edge_zone = spec.az_zone;
  } else {
    if (edge_name.empty()) throw ConfigError("MissingZone", "hybrid strategies need --edge");
    spec.edge_zone = ZoneId::parse(edge_name);
  }

  if (mode_name == "virtual") {
    spec.clock = ClockKind::Virtual;
  } else if (mode_name == "wall") {
    spec.clock = ClockKind::Wall;
  } else {
    throw ConfigError("BadMode", "mode must be virtual or wall, got " + mode_name);
  }
  spec.delay_mode = netem::DelayMode::parse(delay_name, seed);
  spec.runs = runs;
  spec.ue_count = ues;
  spec.seed = seed;
  spec.concurrent_ues = concurrent;
  spec.passthrough = passthrough;
  if (!processing_path.empty()) {
    spec.processing = vnf::ProcessingModel::load_file(processing_path);
  }
  if (const char* env_dir = std::getenv("CORESIM_STORE_DIR"); env_dir && store_dir.empty()) {
    store_dir = env_dir;
  }
  spec.store_dir = store_dir;

  harness::BreakdownReport report = harness::run_experiment(spec);
  harness::write_report_files(report, out_path, csv_path_for(out_path));

  std::cout << "strategy=" << to_string(report.strategy) << " edge=" << report.edge_zone.str()
            << " total=" << report.total_latency_ms() << "ms"
            << " (5g_aka=" << report.category_mean_ms(Category::FiveGAka)
            << " session_setup=" << report.category_mean_ms(Category::SessionSetup)
            << " nrf_register=" << report.category_mean_ms(Category::NrfRegister)
            << " hn_internal=" << report.hn_internal_us / 1000.0 << ")\n";
  if (!report.failed_runs.empty()) {
    std::cerr << report.failed_runs.size() << " of " << report.runs << " runs failed;"
              << " first cause: " << report.failed_causes.front() << "\n";
    return 1;
  }
  std::cout << "report written to " << out_path << " and " << csv_path_for(out_path) << "\n";
  return 0;
}

int cmd_validate(const std::string& path) {
  try {
    netem::Topology topo = netem::Topology::load_file(path);
    std::cout << path << ": OK (" << topo.zones.size() << " zones, " << topo.links.size()
              << " links)\n";
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "validation failed: " << e.what() << "\n";
    return 2;
  }
}

int cmd_trace(const std::string& store_path, const std::string& category,
              const std::string& service, const std::string& trace_id_hex, int64_t start_us,
              int64_t end_us, const std::string& export_path) {
  telemetry::SpanStore store = telemetry::SpanStore::open_existing(store_path);
  telemetry::QueryFilter filter;
  if (!category.empty()) filter.category = category_from_string(category);
  if (!service.empty()) filter.service = vnf_kind_from_string(service);
  if (!trace_id_hex.empty()) filter.trace_id = telemetry::TraceId::from_hex(trace_id_hex);
  if (start_us >= 0) filter.start_us = start_us;
  if (end_us >= 0) filter.end_us = end_us;

  auto traces = telemetry::query(store.spans(), filter);
  if (!export_path.empty()) {
    telemetry::export_traces(traces, export_path);
    std::cout << "exported " << traces.size() << " trace(s) to " << export_path << "\n";
    return 0;
  }
  for (const auto& t : traces) std::cout << telemetry::render_trace(t);
  std::cout << traces.size() << " trace(s), clock=" << store.clock() << "\n";
  return 0;
}

int cmd_topology_list(const std::string& topology_spec) {
  netem::Topology topo = resolve_topology(topology_spec);
  std::cout << "zones (" << topo.zones.size() << "):\n";
  for (const auto& z : topo.zones) std::cout << "  " << z.str() << "\n";
  std::cout << "links (" << topo.links.size() << "), rtt ms p50/p90/p99:\n";
  char buf[160];
  for (const auto& l : topo.links) {
    std::snprintf(buf, sizeof(buf), "  %-10s <-> %-10s  %6.2f %6.2f %6.2f\n", l.a.str().c_str(),
                  l.b.str().c_str(), l.p50_ms, l.p90_ms, l.p99_ms);
    std::cout << buf;
  }
  std::cout << "intra-zone rtt: " << topo.intra_zone_rtt_ms << " ms\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"coresim: desk-scale 5G core control-plane latency simulator"};
  app.require_subcommand(1);

  // run
  auto* run_cmd = app.add_subcommand("run", "run a placement experiment and write reports");
  std::string strategy_name, edge_name, az_name, topology_spec = "builtin:aws";
  std::string mode_name = "virtual", delay_name = "p50", processing_path, out_path = "report.json";
  std::string store_dir;
  int runs = 10, ues = 1;
  uint64_t seed = 1;
  bool concurrent = false, passthrough = false;
  run_cmd->add_option("--strategy", strategy_name,
                      "monolithic | urllc-user | mcs-static | mcs-mobile")
      ->required();
  run_cmd->add_option("--edge", edge_name, "edge zone, e.g. nyc-lz");
  run_cmd->add_option("--az", az_name, "availability zone; inferred from --edge when omitted");
  run_cmd->add_option("--topology", topology_spec, "topology file or builtin:aws");
  run_cmd->add_option("--mode", mode_name, "clock mode: virtual | wall");
  run_cmd->add_option("--delay", delay_name, "p50 | percentile:<p> | stochastic");
  run_cmd->add_option("--runs", runs, "measurement repetitions to average");
  run_cmd->add_option("--ues", ues, "UEs per run");
  run_cmd->add_option("--seed", seed, "seed for ids and stochastic delays");
  run_cmd->add_option("--processing", processing_path, "processing model JSON file");
  run_cmd->add_option("--out", out_path, "report JSON path (CSV lands beside it)");
  run_cmd->add_option("--store-dir", store_dir, "directory for per-run span stores");
  run_cmd->add_flag("--concurrent-ues", concurrent, "drive UEs concurrently");
  run_cmd->add_flag("--passthrough", passthrough, "disable tracing in the sidecars");

  // validate
  auto* validate_cmd = app.add_subcommand("validate", "check a topology file");
  std::string validate_path;
  validate_cmd->add_option("topology", validate_path, "topology JSON file")->required();

  // trace
  auto* trace_cmd = app.add_subcommand("trace", "inspect or export stored traces");
  std::string store_path, trace_category, trace_service, trace_id_hex, export_path;
  int64_t start_us = -1, end_us = -1;
  trace_cmd->add_option("--store", store_path, "a .spans.jsonl store file")->required();
  trace_cmd->add_option("--category", trace_category,
                        "5g_aka | session_setup | nrf_register | hn_internal");
  trace_cmd->add_option("--service", trace_service, "VNF name, e.g. AMF");
  trace_cmd->add_option("--trace-id", trace_id_hex, "32-char hex trace id");
  trace_cmd->add_option("--start", start_us, "span start lower bound (us)");
  trace_cmd->add_option("--end", end_us, "span start upper bound (us)");
  trace_cmd->add_option("--export", export_path, "write matching traces as JSON");

  // topology-list
  auto* list_cmd = app.add_subcommand("topology-list", "print zones and link profiles");
  std::string list_topology = "builtin:aws";
  list_cmd->add_option("--topology", list_topology, "topology file or builtin:aws");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      app.exit(e);
      return 0;
    }
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (run_cmd->parsed()) {
      return cmd_run(strategy_name, edge_name, az_name, topology_spec, mode_name, delay_name,
                     runs, ues, seed, processing_path, out_path, store_dir, concurrent,
                     passthrough);
    }
    if (validate_cmd->parsed()) return cmd_validate(validate_path);
    if (trace_cmd->parsed()) {
      return cmd_trace(store_path, trace_category, trace_service, trace_id_hex, start_us, end_us,
                       export_path);
    }
    if (list_cmd->parsed()) return cmd_topology_list(list_topology);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    if (e.code() == "StoreNotFound" || e.code() == "FileNotFound") {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    }
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace coresim::cli
