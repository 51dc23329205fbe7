#include <filesystem>
#include <set>

#include "coresim/harness.hpp"

#include "doctest.h"

using namespace coresim;
using namespace coresim::harness;

namespace {

ExperimentSpec base_spec(Strategy strategy, const std::string& edge, uint64_t seed = 1) {
  ExperimentSpec spec;
  spec.strategy = strategy;
  spec.topology = netem::reference_topology();
  if (strategy == Strategy::Monolithic) {
    spec.az_zone = ZoneId::parse(edge);
    spec.edge_zone = spec.az_zone;
  } else {
    spec.edge_zone = ZoneId::parse(edge);
    for (const auto& l : spec.topology.links) {
      if (l.a == spec.edge_zone) spec.az_zone = l.b;
      if (l.b == spec.edge_zone) spec.az_zone = l.a;
    }
  }
  spec.runs = 1;
  spec.ue_count = 1;
  spec.seed = seed;
  return spec;
}

int64_t category_us(const BreakdownReport& r, Category c) {
  return static_cast<int64_t>(r.category_mean_us.at(c));
}

// Independent oracle: which catalog transactions cross the edge<->AZ boundary
// under a strategy, counted per category.
std::map<Category, int> crossing_counts(Strategy s) {
  std::set<VnfKind> edge_side;
  switch (s) {
    case Strategy::Monolithic: break;
    case Strategy::McsMobile: edge_side.insert(VnfKind::Nrf); [[fallthrough]];
    case Strategy::McsStatic: edge_side.insert(VnfKind::Amf); [[fallthrough]];
    case Strategy::UrllcUser:
      edge_side.insert(VnfKind::Upf);
      edge_side.insert(VnfKind::Smf);
      edge_side.insert(VnfKind::UeGnb);
      break;
  }
  std::map<Category, int> out;
  for (const auto& m : catalog()) {
    if (edge_side.count(m.src) != edge_side.count(m.dst)) out[m.category]++;
  }
  return out;
}

}  // namespace

TEST_CASE("predictor prices single transactions from RTT plus endpoint processing") {
  ExperimentSpec urllc = base_spec(Strategy::UrllcUser, "nyc-lz");
  BreakdownReport r = predict_breakdown(urllc);

  auto tx_us = [&](const BreakdownReport& rep, const std::string& id) {
    for (const auto& t : rep.transactions) {
      if (t.id == id) return static_cast<int64_t>(t.mean_us);
    }
    FAIL("missing transaction ", id);
    return int64_t{0};
  };

  // AMF(az) -> SMF(lz) crosses the boundary: 8.05 + 1 + 1 ms.
  CHECK(tx_us(r, "context-creation") == 10050);
  // AMF(az) -> AUSF(az) stays inside: 0.2 + 1 + 1 ms.
  CHECK(tx_us(r, "ue-authentication") == 2200);

  ExperimentSpec mcs = base_spec(Strategy::McsStatic, "nyc-lz");
  BreakdownReport r2 = predict_breakdown(mcs);
  // With the AMF at the edge the authentication hop crosses instead.
  CHECK(tx_us(r2, "ue-authentication") == 10050);

  ExperimentSpec mono = base_spec(Strategy::Monolithic, "use1-az");
  BreakdownReport r3 = predict_breakdown(mono);
  for (const auto& t : r3.transactions) CHECK(static_cast<int64_t>(t.mean_us) == 2200);
}

TEST_CASE("predictor category sums match the crossing-set oracle") {
  const int64_t intra_us = 200, cross_us = 8050, proc_pair_us = 2000;
  const std::map<Category, int> totals = {{Category::NrfRegister, 6},
                                          {Category::FiveGAka, 3},
                                          {Category::HnInternal, 2},
                                          {Category::SessionSetup, 6}};

  for (Strategy s : kAllStrategies) {
    ExperimentSpec spec = base_spec(s, s == Strategy::Monolithic ? "use1-az" : "nyc-lz");
    BreakdownReport r = predict_breakdown(spec);
    auto crossings = crossing_counts(s);
    for (const auto& [cat, n_total] : totals) {
      const int n_cross = crossings.count(cat) ? crossings.at(cat) : 0;
      const int64_t expected = n_cross * cross_us + (n_total - n_cross) * intra_us +
                               n_total * proc_pair_us;
      CHECK_MESSAGE(category_us(r, cat) == expected,
                    to_string(s), "/", to_string(cat));
    }
  }
}

TEST_CASE("virtual simulation reproduces the predictor to the microsecond") {
  for (Strategy s : {Strategy::UrllcUser, Strategy::McsMobile}) {
    ExperimentSpec spec = base_spec(s, "ldn-wz", 7);
    BreakdownReport simulated = run_experiment(spec);
    BreakdownReport predicted = predict_breakdown(spec);
    for (Category c : kAllCategories) {
      CHECK_MESSAGE(category_us(simulated, c) == category_us(predicted, c),
                    to_string(s), "/", to_string(c));
    }
    CHECK(simulated.total_latency_us == predicted.total_latency_us);
  }
}

TEST_CASE("zero-RTT monolithic equals the processing-model sum exactly") {
  ExperimentSpec spec = base_spec(Strategy::Monolithic, "use1-az");
  spec.topology.intra_zone_rtt_ms = 0.0;

  BreakdownReport r = run_experiment(spec);

  // Oracle straight from the processing model: sum of both endpoints'
  // processing over the non-home-network transactions.
  int64_t expected = 0;
  for (const auto& m : catalog()) {
    if (m.category == Category::HnInternal) continue;
    expected += spec.processing.us_for(m.src, m.id) + spec.processing.us_for(m.dst, m.id);
  }
  CHECK(expected == 30'000);
  CHECK(static_cast<int64_t>(r.total_latency_us) == expected);
  CHECK(r.total_latency_us == predict_breakdown(spec).total_latency_us);
}

TEST_CASE("including the home-network chain adds exactly its own sum") {
  ExperimentSpec spec = base_spec(Strategy::UrllcUser, "sea-wz");
  BreakdownReport omit = predict_breakdown(spec, true);
  BreakdownReport keep = predict_breakdown(spec, false);
  CHECK(keep.total_latency_us - omit.total_latency_us == omit.hn_internal_us);
  CHECK(omit.hn_internal_us == 2 * 2200.0);
}

TEST_CASE("compute_breakdown rejects empty or orphaned trace sets") {
  CHECK_THROWS_WITH_AS(compute_breakdown({}), doctest::Contains("IncompleteTrace"), Error);

  telemetry::Span orphan;
  orphan.trace_id = {1, 1};
  orphan.span_id = 5;
  orphan.parent_span_id = 99;
  orphan.operation = "POST /nausf-auth";
  orphan.src_zone = orphan.dst_zone = ZoneId::parse("use1-az");
  auto traces = telemetry::assemble_traces({orphan});
  CHECK_THROWS_WITH_AS(compute_breakdown(traces), doctest::Contains("IncompleteTrace"), Error);
}

TEST_CASE("reported means equal the arithmetic mean of per-run sums") {
  namespace fs = std::filesystem;
  const std::string dir = (fs::temp_directory_path() / "coresim_avg_test").string();
  fs::remove_all(dir);
  fs::create_directories(dir);

  ExperimentSpec spec = base_spec(Strategy::UrllcUser, "nyc-lz", 11);
  spec.runs = 3;
  spec.delay_mode = netem::DelayMode::stochastic(11);
  spec.store_dir = dir;

  BreakdownReport report = run_experiment(spec);
  REQUIRE(report.failed_runs.empty());

  std::map<Category, double> manual;
  for (int run = 0; run < spec.runs; ++run) {
    auto store = telemetry::SpanStore::open_existing(dir + "/run" + std::to_string(run) +
                                                     ".spans.jsonl");
    auto traces = telemetry::assemble_traces(store.spans());
    BreakdownReport one = compute_breakdown(traces);
    for (Category c : kAllCategories) manual[c] += one.category_mean_us.at(c);
  }
  for (Category c : kAllCategories) {
    CHECK(report.category_mean_us.at(c) == doctest::Approx(manual[c] / 3.0).epsilon(1e-12));
  }

  // Stochastic draws actually varied between runs.
  CHECK(report.category_stddev_us.at(Category::SessionSetup) > 0.0);
  fs::remove_all(dir);
}

TEST_CASE("paper orderings hold at nyc-lz") {
  BreakdownReport urllc = run_experiment(base_spec(Strategy::UrllcUser, "nyc-lz"));
  BreakdownReport mcs_static = run_experiment(base_spec(Strategy::McsStatic, "nyc-lz"));
  BreakdownReport mcs_mobile = run_experiment(base_spec(Strategy::McsMobile, "nyc-lz"));

  CHECK(category_us(mcs_static, Category::FiveGAka) > category_us(urllc, Category::FiveGAka));
  CHECK(category_us(mcs_static, Category::SessionSetup) <
        category_us(urllc, Category::SessionSetup));
  CHECK(category_us(mcs_mobile, Category::SessionSetup) <
        category_us(mcs_static, Category::SessionSetup));
  CHECK(category_us(mcs_mobile, Category::NrfRegister) <
        category_us(mcs_static, Category::NrfRegister));
  // The home-network chain never moves.
  CHECK(category_us(mcs_mobile, Category::HnInternal) ==
        category_us(urllc, Category::HnInternal));
}

TEST_CASE("comparisons sort by total and refuse mixed topologies") {
  std::vector<BreakdownReport> reports;
  for (Strategy s : kAllStrategies) {
    reports.push_back(
        predict_breakdown(base_spec(s, s == Strategy::Monolithic ? "use1-az" : "nyc-lz")));
  }
  Comparison cmp = compare(reports);
  REQUIRE(cmp.rows.size() == 4);
  for (size_t i = 1; i < cmp.rows.size(); ++i) {
    CHECK(cmp.rows[i - 1].total_us <= cmp.rows[i].total_us);
  }
  CHECK(cmp.rows.front().strategy == Strategy::Monolithic);
  CHECK(cmp.to_json()["rows"].size() == 4);
  CHECK(cmp.to_text().find("monolithic") != std::string::npos);

  // LZ beats WZ in the same city under a hybrid strategy.
  BreakdownReport lz = predict_breakdown(base_spec(Strategy::McsMobile, "nyc-lz"));
  BreakdownReport wz = predict_breakdown(base_spec(Strategy::McsMobile, "nyc-wz"));
  CHECK(lz.total_latency_us < wz.total_latency_us);

  BreakdownReport other = lz;
  other.topology_fingerprint = "deadbeef";
  CHECK_THROWS_WITH_AS(compare({lz, other}), doctest::Contains("MismatchedTopology"), Error);
  CHECK_THROWS_AS(compare({lz}), ConfigError);
}

TEST_CASE("experiment spec validation") {
  ExperimentSpec spec = base_spec(Strategy::UrllcUser, "nyc-lz");
  spec.runs = 0;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = base_spec(Strategy::UrllcUser, "nyc-lz");
  spec.ue_count = 0;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = base_spec(Strategy::UrllcUser, "nyc-lz");
  spec.edge_zone = ZoneId::parse("mars-lz");
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  CHECK_THROWS_AS(predict_breakdown([] {
             ExperimentSpec s = base_spec(Strategy::UrllcUser, "nyc-lz");
             s.delay_mode = netem::DelayMode::stochastic(1);
             return s;
           }()),
           ConfigError);
}

TEST_CASE("an unreachable zone pair fails every run and raises RunFailed") {
  ExperimentSpec spec = base_spec(Strategy::UrllcUser, "nyc-lz");
  spec.topology.links.clear();  // zones exist, but nothing connects them
  spec.runs = 2;
  CHECK_THROWS_WITH_AS(run_experiment(spec), doctest::Contains("RunFailed"), Error);
}

TEST_CASE("report files carry the documented JSON and CSV shapes") {
  namespace fs = std::filesystem;
  ExperimentSpec spec = base_spec(Strategy::McsMobile, "seo-wz", 3);
  BreakdownReport report = run_experiment(spec);

  nlohmann::json j = report.to_json();
  for (const char* f : {"strategy", "edgeZone", "azZone", "topology", "delayMode", "clock",
                        "ueCount", "runs", "failedRuns", "seed", "categories", "totalLatencyMs",
                        "hnInternalMs", "transactions", "telemetry"}) {
    CHECK_MESSAGE(j.contains(f), f);
  }
  CHECK(j["transactions"].size() == 17);
  CHECK(j["clock"] == "virtual");

  std::string csv = report.to_csv();
  size_t lines = std::count(csv.begin(), csv.end(), '\n');
  CHECK(lines == 18);  // header + one row per transaction
  CHECK(csv.find("strategy,zone,category,transaction,mean_ms,stddev_ms") == 0);
  CHECK(csv.find("mcs-mobile,seo-wz,5g_aka,ue-authentication,") != std::string::npos);

  const std::string jp = (fs::temp_directory_path() / "coresim_report.json").string();
  const std::string cp = (fs::temp_directory_path() / "coresim_report.csv").string();
  write_report_files(report, jp, cp);
  CHECK(fs::file_size(jp) > 100);
  CHECK(fs::file_size(cp) > 100);
  fs::remove(jp);
  fs::remove(cp);
}

TEST_CASE("wall-clock smoke run conserves telemetry") {
  ExperimentSpec spec = base_spec(Strategy::Monolithic, "use1-az", 5);
  spec.clock = ClockKind::Wall;
  spec.runs = 1;
  BreakdownReport r = run_experiment(spec);
  CHECK(r.clock == "wall");
  CHECK(r.telemetry.emitted == 34);
  CHECK(r.telemetry.emitted == r.telemetry.stored + r.telemetry.dropped + r.telemetry.rejected);
  CHECK(r.total_latency_us > 0);
}
