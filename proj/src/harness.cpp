#include "coresim/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace coresim::harness {

void ExperimentSpec::validate() const {
  if (runs < 1) throw ConfigError("BadExperiment", "runs must be >= 1");
  if (ue_count < 1) throw ConfigError("InvalidUeCount", "ueCount must be positive");
  topology.validate();
  if (!topology.has_zone(edge_zone)) {
    throw ConfigError("UnknownZone", edge_zone.str() + " not in topology");
  }
  if (!topology.has_zone(az_zone)) {
    throw ConfigError("UnknownZone", az_zone.str() + " not in topology");
  }
  processing.validate();
  make_placement(strategy, edge_zone, az_zone);
}

double BreakdownReport::category_mean_ms(Category c) const {
  auto it = category_mean_us.find(c);
  return it == category_mean_us.end() ? 0.0 : it->second / 1000.0;
}

nlohmann::json BreakdownReport::to_json() const {
  nlohmann::json j;
  j["strategy"] = to_string(strategy);
  j["edgeZone"] = edge_zone.str();
  j["azZone"] = az_zone.str();
  j["topology"] = topology_fingerprint;
  j["delayMode"] = delay_mode;
  j["clock"] = clock;
  j["ueCount"] = ue_count;
  j["runs"] = runs;
  j["failedRuns"] = failed_runs;
  j["seed"] = seed;
  j["omitHnInternal"] = omit_hn_internal;
  nlohmann::json cats;
  for (const auto& [c, us] : category_mean_us) {
    double sd = 0;
    if (auto it = category_stddev_us.find(c); it != category_stddev_us.end()) sd = it->second;
    cats[to_string(c)] = {{"meanMs", us / 1000.0}, {"stddevMs", sd / 1000.0}};
  }
  j["categories"] = cats;
  j["totalLatencyMs"] = total_latency_us / 1000.0;
  j["hnInternalMs"] = hn_internal_us / 1000.0;
  nlohmann::json txs = nlohmann::json::array();
  for (const auto& t : transactions) {
    txs.push_back({{"id", t.id},
                   {"category", to_string(t.category)},
                   {"operation", t.operation},
                   {"src", to_string(t.src)},
                   {"dst", to_string(t.dst)},
                   {"samples", t.samples},
                   {"meanMs", t.mean_us / 1000.0},
                   {"stddevMs", t.stddev_us / 1000.0}});
  }
  j["transactions"] = txs;
  j["telemetry"] = {{"emitted", telemetry.emitted},
                    {"dropped", telemetry.dropped},
                    {"rejected", telemetry.rejected},
                    {"stored", telemetry.stored},
                    {"deduplicated", telemetry.deduplicated}};
  return j;
}

std::string BreakdownReport::to_csv() const {
  std::ostringstream os;
  os << "strategy,zone,category,transaction,mean_ms,stddev_ms\n";
  char buf[64];
  for (const auto& t : transactions) {
    os << to_string(strategy) << "," << edge_zone.str() << "," << to_string(t.category) << ","
       << t.id << ",";
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f", t.mean_us / 1000.0, t.stddev_us / 1000.0);
    os << buf << "\n";
  }
  return os.str();
}

namespace {

struct RunAccumulator {
  std::map<Category, int64_t> category_sum_us;
  std::map<std::string, std::vector<int64_t>> tx_durations_us;
};

const CapifMessage* match_span(const telemetry::Span& s) {
  auto space = s.operation.find(' ');
  if (space == std::string::npos) return nullptr;
  return find_catalog_entry(s.operation.substr(0, space), s.operation.substr(space + 1),
                            s.src_vnf, s.dst_vnf);
}

RunAccumulator accumulate_run(const std::vector<telemetry::Trace>& traces) {
  RunAccumulator acc;
  for (Category c : kAllCategories) acc.category_sum_us[c] = 0;
  for (const auto& t : traces) {
    for (const auto& s : t.spans) {
      if (s.side != telemetry::Side::Sender || s.error) continue;
      const CapifMessage* entry = match_span(s);
      if (!entry) continue;
      acc.category_sum_us[s.category] += s.duration_us;
      acc.tx_durations_us[entry->id].push_back(s.duration_us);
    }
  }
  return acc;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0;
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0;
  const double m = mean_of(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

BreakdownReport aggregate_runs(const std::vector<RunAccumulator>& runs, bool omit_hn) {
  BreakdownReport r;
  r.omit_hn_internal = omit_hn;
  for (Category c : kAllCategories) {
    std::vector<double> sums;
    for (const auto& run : runs) sums.push_back(static_cast<double>(run.category_sum_us.at(c)));
    r.category_mean_us[c] = mean_of(sums);
    r.category_stddev_us[c] = stddev_of(sums);
  }
  r.hn_internal_us = r.category_mean_us[Category::HnInternal];
  r.total_latency_us = r.category_mean_us[Category::NrfRegister] +
                       r.category_mean_us[Category::FiveGAka] +
                       r.category_mean_us[Category::SessionSetup];
  if (!omit_hn) r.total_latency_us += r.hn_internal_us;

  for (const auto& m : catalog()) {
    std::vector<double> samples;
    for (const auto& run : runs) {
      auto it = run.tx_durations_us.find(m.id);
      if (it == run.tx_durations_us.end()) continue;
      for (int64_t d : it->second) samples.push_back(static_cast<double>(d));
    }
    TransactionStats ts;
    ts.id = m.id;
    ts.category = m.category;
    ts.operation = m.operation();
    ts.src = m.src;
    ts.dst = m.dst;
    ts.samples = static_cast<int64_t>(samples.size());
    ts.mean_us = mean_of(samples);
    ts.stddev_us = stddev_of(samples);
    r.transactions.push_back(ts);
  }
  return r;
}

}  // namespace

BreakdownReport compute_breakdown(const std::vector<telemetry::Trace>& traces,
                                  bool omit_hn_internal) {
  if (traces.empty()) throw Error("IncompleteTrace", "no traces to break down");
  size_t span_count = 0;
  for (const auto& t : traces) {
    if (!t.orphans().empty()) {
      throw Error("IncompleteTrace", "trace " + t.trace_id.hex() + " has orphan spans");
    }
    span_count += t.spans.size();
  }
  if (span_count == 0) throw Error("IncompleteTrace", "traces contain no spans");
  return aggregate_runs({accumulate_run(traces)}, omit_hn_internal);
}

BreakdownReport predict_breakdown(const ExperimentSpec& spec, bool omit_hn_internal) {
  spec.validate();
  if (spec.delay_mode.kind == netem::DelayModeKind::Stochastic) {
    throw ConfigError("BadDelayMode", "the predictor needs a deterministic delay mode");
  }
  const Placement placement = spec.placement();
  Rng unused(0);

  RunAccumulator acc;
  for (Category c : kAllCategories) acc.category_sum_us[c] = 0;
  for (const auto& m : catalog()) {
    const ZoneId& src_zone = placement.zone_of(m.src);
    const ZoneId& dst_zone = placement.zone_of(m.dst);
    const int64_t rtt_us = netem::ms_to_us(
        netem::sample_rtt_ms(spec.topology, src_zone, dst_zone, spec.delay_mode, unused));
    const int64_t tx_us = rtt_us + spec.processing.us_for(m.src, m.id) +
                          spec.processing.us_for(m.dst, m.id);
    // Registration happens once per run; per-UE procedures scale with UEs.
    const int copies = m.category == Category::NrfRegister ? 1 : spec.ue_count;
    acc.category_sum_us[m.category] += tx_us * copies;
    for (int i = 0; i < copies; ++i) acc.tx_durations_us[m.id].push_back(tx_us);
  }

  BreakdownReport r = aggregate_runs({acc}, omit_hn_internal);
  r.strategy = spec.strategy;
  r.edge_zone = spec.edge_zone;
  r.az_zone = spec.az_zone;
  r.topology_fingerprint = spec.topology.fingerprint();
  r.delay_mode = spec.delay_mode.str();
  r.clock = "predicted";
  r.ue_count = spec.ue_count;
  r.runs = 1;
  r.seed = spec.seed;
  return r;
}

BreakdownReport run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  std::vector<RunAccumulator> completed;
  std::vector<int> failed_runs;
  std::vector<std::string> failed_causes;
  telemetry::PipelineCounters totals;

  for (int run = 0; run < spec.runs; ++run) {
    WorldOptions opts;
    opts.placement = spec.placement();
    opts.topology = spec.topology;
    opts.delay_mode = spec.delay_mode;
    if (opts.delay_mode.kind == netem::DelayModeKind::Stochastic) {
      opts.delay_mode.seed = mix_seed(spec.delay_mode.seed, static_cast<uint64_t>(run));
    }
    opts.processing = spec.processing;
    opts.seed = mix_seed(spec.seed, static_cast<uint64_t>(run) + 1);
    opts.passthrough = spec.passthrough;
    if (!spec.store_dir.empty()) {
      opts.store_path = spec.store_dir + "/run" + std::to_string(run) + ".spans.jsonl";
    }

    try {
      auto world = make_world(spec.clock, std::move(opts));
      world->boot();
      auto summary = world->run_ues(spec.ue_count, spec.concurrent_ues);
      world->drain();
      if (summary.succeeded != spec.ue_count) {
        std::string cause = summary.failures.empty() ? "UnknownFailure"
                                                     : summary.failures.front().second;
        throw Error("RunFailed", "run " + std::to_string(run) + ": " + cause);
      }
      auto traces = telemetry::assemble_traces(world->store().spans());
      if (spec.passthrough) {
        // Nothing was traced; the run only validates transparency externally.
        completed.push_back(RunAccumulator{});
      } else {
        for (const auto& t : traces) {
          if (!t.orphans().empty()) {
            throw Error("RunFailed", "run " + std::to_string(run) + ": orphan spans in trace " +
                                         t.trace_id.hex());
          }
        }
        completed.push_back(accumulate_run(traces));
      }
      auto c = world->counters();
      totals.emitted += c.emitted;
      totals.dropped += c.dropped;
      totals.rejected += c.rejected;
      totals.stored += c.stored;
      totals.deduplicated += c.deduplicated;
    } catch (const Error& e) {
      failed_runs.push_back(run);
      failed_causes.push_back(e.what());
    }
  }

  if (completed.empty()) {
    throw Error("RunFailed", "all " + std::to_string(spec.runs) + " runs failed" +
                                 (failed_causes.empty() ? "" : ": " + failed_causes.front()));
  }

  BreakdownReport r = aggregate_runs(completed, true);
  r.strategy = spec.strategy;
  r.edge_zone = spec.edge_zone;
  r.az_zone = spec.az_zone;
  r.topology_fingerprint = spec.topology.fingerprint();
  r.delay_mode = spec.delay_mode.str();
  r.clock = to_string(spec.clock);
  r.ue_count = spec.ue_count;
  r.runs = spec.runs;
  r.failed_runs = failed_runs;
  r.failed_causes = failed_causes;
  r.seed = spec.seed;
  r.telemetry = totals;
  return r;
}

nlohmann::json Comparison::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json cats;
    for (const auto& [c, us] : row.category_us) cats[to_string(c)] = us / 1000.0;
    arr.push_back({{"strategy", to_string(row.strategy)},
                   {"edgeZone", row.edge_zone.str()},
                   {"totalLatencyMs", row.total_us / 1000.0},
                   {"categoriesMs", cats}});
  }
  return nlohmann::json{{"rows", arr}};
}

std::string Comparison::to_text() const {
  std::ostringstream os;
  os << "strategy      edge      total_ms   5g_aka   session  nrf_reg\n";
  char buf[160];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%-13s %-9s %8.3f %8.3f %8.3f %8.3f\n",
                  to_string(row.strategy).c_str(), row.edge_zone.str().c_str(),
                  row.total_us / 1000.0, row.category_us.at(Category::FiveGAka) / 1000.0,
                  row.category_us.at(Category::SessionSetup) / 1000.0,
                  row.category_us.at(Category::NrfRegister) / 1000.0);
    os << buf;
  }
  return os.str();
}

Comparison compare(const std::vector<BreakdownReport>& reports) {
  if (reports.size() < 2) {
    throw ConfigError("BadComparison", "need at least two reports to compare");
  }
  for (const auto& r : reports) {
    if (r.topology_fingerprint != reports.front().topology_fingerprint) {
      throw Error("MismatchedTopology", "reports were produced on different topologies");
    }
  }
  Comparison cmp;
  for (const auto& r : reports) {
    ComparisonRow row;
    row.strategy = r.strategy;
    row.edge_zone = r.edge_zone;
    row.total_us = r.total_latency_us;
    for (const auto& [c, us] : r.category_mean_us) row.category_us[c] = us;
    cmp.rows.push_back(row);
  }
  std::sort(cmp.rows.begin(), cmp.rows.end(),
            [](const ComparisonRow& a, const ComparisonRow& b) { return a.total_us < b.total_us; });
  return cmp;
}

void write_report_files(const BreakdownReport& report, const std::string& json_path,
                        const std::string& csv_path) {
  {
    std::ofstream out(json_path);
    if (!out) throw Error("IoFailure", "cannot open " + json_path);
    out << report.to_json().dump(2) << "\n";
    if (!out) throw Error("IoFailure", "write failed on " + json_path);
  }
  {
    std::ofstream out(csv_path);
    if (!out) throw Error("IoFailure", "cannot open " + csv_path);
    out << report.to_csv();
    if (!out) throw Error("IoFailure", "write failed on " + csv_path);
  }
}

}  // namespace coresim::harness
