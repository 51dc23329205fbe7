#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coresim/model.hpp"
#include "coresim/netem.hpp"
#include "coresim/telemetry.hpp"
#include "coresim/vnf.hpp"
#include "coresim/world.hpp"

namespace coresim::harness {

struct ExperimentSpec {
  Strategy strategy = Strategy::Monolithic;
  ZoneId edge_zone;
  ZoneId az_zone;
  netem::Topology topology;
  netem::DelayMode delay_mode = netem::DelayMode::p50();
  vnf::ProcessingModel processing;
  int ue_count = 1;
  int runs = 10;
  uint64_t seed = 1;
  ClockKind clock = ClockKind::Virtual;
  bool concurrent_ues = false;
  bool passthrough = false;
  std::string store_dir;  // per-run stores land here when set

  void validate() const;
  Placement placement() const { return make_placement(strategy, edge_zone, az_zone); }
};

struct TransactionStats {
  std::string id;
  Category category = Category::FiveGAka;
  std::string operation;
  VnfKind src = VnfKind::Amf;
  VnfKind dst = VnfKind::Amf;
  int64_t samples = 0;
  double mean_us = 0;
  double stddev_us = 0;

  double mean_ms() const { return mean_us / 1000.0; }
};

// Per-category latency sums (sender-side span durations) with the
// home-network chain listed separately and excluded from the total.
struct BreakdownReport {
  Strategy strategy = Strategy::Monolithic;
  ZoneId edge_zone;
  ZoneId az_zone;
  std::string topology_fingerprint;
  std::string delay_mode;
  std::string clock = "virtual";
  int ue_count = 1;
  int runs = 1;
  std::vector<int> failed_runs;
  std::vector<std::string> failed_causes;
  uint64_t seed = 0;
  bool omit_hn_internal = true;

  // Mean over completed runs of the per-run category sum, in microseconds.
  std::map<Category, double> category_mean_us;
  std::map<Category, double> category_stddev_us;
  double total_latency_us = 0;  // non-HnInternal categories (plus HN when not omitted)
  double hn_internal_us = 0;

  std::vector<TransactionStats> transactions;
  telemetry::PipelineCounters telemetry;

  double total_latency_ms() const { return total_latency_us / 1000.0; }
  double category_mean_ms(Category c) const;

  nlohmann::json to_json() const;
  std::string to_csv() const;  // one row per transaction
};

// Sums sender-side span durations per category for one completed scenario.
// IncompleteTrace when the trace set is empty or contains orphan spans.
BreakdownReport compute_breakdown(const std::vector<telemetry::Trace>& traces,
                                  bool omit_hn_internal = true);

// Closed-form counterpart: per non-heartbeat catalog transaction,
// latency = RTT(zone(src), zone(dst)) + proc(src) + proc(dst), scaled by the
// UE count for per-UE procedures. Requires a deterministic delay mode.
BreakdownReport predict_breakdown(const ExperimentSpec& spec, bool omit_hn_internal = true);

// Boots a fresh world per run, drives the UE procedures, queries the stored
// traces and averages the per-run breakdowns. Failed runs are excluded from
// the averages and flagged; RunFailed only if every run failed.
BreakdownReport run_experiment(const ExperimentSpec& spec);

struct ComparisonRow {
  Strategy strategy = Strategy::Monolithic;
  ZoneId edge_zone;
  double total_us = 0;
  std::map<Category, double> category_us;
};

struct Comparison {
  std::vector<ComparisonRow> rows;  // sorted by total ascending
  nlohmann::json to_json() const;
  std::string to_text() const;
};

// MismatchedTopology unless all reports share a topology fingerprint.
Comparison compare(const std::vector<BreakdownReport>& reports);

void write_report_files(const BreakdownReport& report, const std::string& json_path,
                        const std::string& csv_path);

}  // namespace coresim::harness
