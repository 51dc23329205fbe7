#include <algorithm>
#include <cmath>
#include <vector>

#include "coresim/netem.hpp"

#include "doctest.h"

using namespace coresim;
using namespace coresim::netem;

namespace {

struct GoldenRow {
  const char* zone;
  double p50, p90, p99;
};

// The weekly AZ <-> edge-zone latency table, transcribed row by row.
const std::vector<GoldenRow> kGoldenRows = {
    {"atl-lz", 15.5, 15.7, 16.7},  {"atl-wz", 34.1, 39.1, 40.6},
    {"nyc-lz", 8.05, 8.36, 10.5},  {"nyc-wz", 14.6, 14.9, 16.3},
    {"chi-lz", 21.8, 23.7, 24.69}, {"chi-wz", 61.6, 63.7, 63.9},
    {"dnv-lz", 22.5, 23.0, 24.4},  {"dnv-wz", 37.6, 39.2, 39.6},
    {"sea-lz", 8.92, 9.35, 10.2},  {"sea-wz", 10.8, 12.3, 12.8},
    {"la-lz", 24.1, 25.4, 25.5},   {"la-wz", 30.5, 31.1, 33.5},
    {"trn-wz", 9.67, 9.84, 10.5},  {"ldn-wz", 3.87, 4.49, 8.25},
    {"be-wz", 12.2, 13.81, 14.3},  {"tky-wz", 5.29, 5.57, 8.87},
    {"seo-wz", 4.97, 5.27, 5.48},  {"pe-lz", 41.6, 42.5, 53.5},
};

double empirical_quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  size_t idx = static_cast<size_t>(std::llround(p * (static_cast<double>(v.size()) - 1)));
  return v[idx];
}

}  // namespace

TEST_CASE("bundled topology reproduces every published edge-zone row") {
  const Topology& topo = reference_topology();
  CHECK(topo.zones.size() == 26);  // 18 edge zones + 8 AZ anchors
  CHECK(topo.links.size() == 18);
  CHECK(topo.intra_zone_rtt_ms == 0.2);

  for (const auto& row : kGoldenRows) {
    ZoneId z = ZoneId::parse(row.zone);
    REQUIRE_MESSAGE(topo.has_zone(z), row.zone);
    const LinkProfile* link = nullptr;
    for (const auto& l : topo.links) {
      if (l.a == z || l.b == z) link = &l;
    }
    REQUIRE_MESSAGE(link != nullptr, row.zone);
    CHECK(link->p50_ms == row.p50);
    CHECK(link->p90_ms == row.p90);
    CHECK(link->p99_ms == row.p99);
    // Each edge zone anchors to its region's AZ.
    CHECK((link->a.kind == ZoneKind::Az || link->b.kind == ZoneKind::Az));
  }
}

TEST_CASE("percentile monotonicity holds for every bundled profile") {
  for (const auto& l : reference_topology().links) {
    CHECK(l.p50_ms >= 0);
    CHECK(l.p50_ms <= l.p90_ms);
    CHECK(l.p90_ms <= l.p99_ms);
  }
  CHECK_NOTHROW(reference_topology().validate());
}

TEST_CASE("topology validation names violations") {
  Topology t;
  t.zones = {ZoneId::parse("nyc-lz"), ZoneId::parse("use1-az")};
  t.links = {{ZoneId::parse("nyc-lz"), ZoneId::parse("use1-az"), 10.0, 9.0, 12.0}};
  CHECK_THROWS_WITH_AS(t.validate(), doctest::Contains("p50 <= p90"), ConfigError);

  SUBCASE("LZ to WZ links are rejected") {
    Topology w;
    w.zones = {ZoneId::parse("nyc-lz"), ZoneId::parse("nyc-wz")};
    w.links = {{ZoneId::parse("nyc-lz"), ZoneId::parse("nyc-wz"), 1, 2, 3}};
    CHECK_THROWS_WITH_AS(w.validate(), doctest::Contains("LZs and WZs"), ConfigError);
  }
  SUBCASE("unknown zone endpoints are rejected") {
    Topology w;
    w.zones = {ZoneId::parse("nyc-lz")};
    w.links = {{ZoneId::parse("nyc-lz"), ZoneId::parse("use1-az"), 1, 2, 3}};
    CHECK_THROWS_WITH_AS(w.validate(), doctest::Contains("unknown zone"), ConfigError);
  }
  SUBCASE("duplicate pairs are rejected") {
    Topology w;
    w.zones = {ZoneId::parse("nyc-lz"), ZoneId::parse("use1-az")};
    w.links = {{ZoneId::parse("nyc-lz"), ZoneId::parse("use1-az"), 1, 2, 3},
               {ZoneId::parse("use1-az"), ZoneId::parse("nyc-lz"), 1, 2, 3}};
    CHECK_THROWS_WITH_AS(w.validate(), doctest::Contains("duplicate"), ConfigError);
  }
}

TEST_CASE("sample_rtt: deterministic modes and intra-zone constant") {
  const Topology& topo = reference_topology();
  Rng rng(1);
  ZoneId nyc = ZoneId::parse("nyc-lz");
  ZoneId az = ZoneId::parse("use1-az");

  CHECK(sample_rtt_ms(topo, nyc, az, DelayMode::p50(), rng) == 8.05);
  CHECK(sample_rtt_ms(topo, az, nyc, DelayMode::p50(), rng) == 8.05);
  CHECK(sample_rtt_ms(topo, az, az, DelayMode::p50(), rng) == 0.2);
  CHECK(sample_rtt_ms(topo, az, az, DelayMode::stochastic(9), rng) == 0.2);
  CHECK(sample_rtt_ms(topo, nyc, az, DelayMode::at_percentile(0.9), rng) == 8.36);
  CHECK(sample_rtt_ms(topo, nyc, az, DelayMode::at_percentile(0.99), rng) == 10.5);

  CHECK_THROWS_WITH_AS(
      sample_rtt_ms(topo, nyc, ZoneId::parse("usw2-az"), DelayMode::p50(), rng),
      doctest::Contains("NoLinkProfile"), Error);
}

TEST_CASE("link quantile is exact at the calibration points and bounded above") {
  for (const auto& l : reference_topology().links) {
    CHECK(link_quantile_ms(l, 0.5) == doctest::Approx(l.p50_ms).epsilon(1e-12));
    CHECK(link_quantile_ms(l, 0.9) == doctest::Approx(l.p90_ms).epsilon(1e-12));
    CHECK(link_quantile_ms(l, 0.99) == doctest::Approx(l.p99_ms).epsilon(1e-12));
    CHECK(link_quantile_ms(l, 1.0) == doctest::Approx(1.2 * l.p99_ms).epsilon(1e-12));
    CHECK(link_quantile_ms(l, 0.0) >= 0.0);
    // Monotone non-decreasing over a grid.
    double prev = -1;
    for (int i = 0; i <= 100; ++i) {
      double v = link_quantile_ms(l, i / 100.0);
      CHECK(v >= prev);
      prev = v;
    }
  }
}

TEST_CASE("stochastic draws are reproducible per seed") {
  const Topology& topo = reference_topology();
  ZoneId ldn = ZoneId::parse("ldn-wz");
  ZoneId az = ZoneId::parse("euw2-az");

  auto draw_sequence = [&](uint64_t seed) {
    Rng rng(seed);
    std::vector<double> out;
    for (int i = 0; i < 100; ++i) {
      out.push_back(sample_rtt_ms(topo, ldn, az, DelayMode::stochastic(seed), rng));
    }
    return out;
  };
  CHECK(draw_sequence(42) == draw_sequence(42));
  CHECK(draw_sequence(42) != draw_sequence(43));
}

TEST_CASE("ten thousand seeded draws reproduce the London profile within 5%") {
  const Topology& topo = reference_topology();
  ZoneId ldn = ZoneId::parse("ldn-wz");
  ZoneId az = ZoneId::parse("euw2-az");
  Rng rng(42);
  std::vector<double> draws;
  for (int i = 0; i < 10'000; ++i) {
    draws.push_back(sample_rtt_ms(topo, ldn, az, DelayMode::stochastic(42), rng));
  }
  CHECK(empirical_quantile(draws, 0.5) == doctest::Approx(3.87).epsilon(0.05));
  CHECK(empirical_quantile(draws, 0.9) == doctest::Approx(4.49).epsilon(0.05));
  CHECK(empirical_quantile(draws, 0.99) == doctest::Approx(8.25).epsilon(0.05));
}

TEST_CASE("sampled legs always sum back to the transaction RTT") {
  DelaySampler sampler(reference_topology(), DelayMode::stochastic(7));
  ZoneId chi = ZoneId::parse("chi-wz");
  ZoneId az = ZoneId::parse("use1-az");
  for (int i = 0; i < 2'000; ++i) {
    auto legs = sampler.sample_legs(chi, az);
    CHECK(legs.request_us + legs.response_us == legs.rtt_us);
    CHECK(legs.request_us >= 0);
    CHECK(legs.response_us >= 0);
  }
}

TEST_CASE("virtual scheduler runs events in time then insertion order") {
  VirtualScheduler sched;
  std::vector<int> order;
  sched.schedule_at(5'000, [&] { order.push_back(1); });
  sched.schedule_at(3'000, [&] { order.push_back(2); });
  sched.schedule_at(3'000, [&] { order.push_back(3); });

  CHECK(sched.advance());
  CHECK(sched.now_us() == 3'000);
  sched.run_until_idle();
  CHECK(order == std::vector<int>{2, 3, 1});
  CHECK(sched.now_us() == 5'000);
  CHECK_FALSE(sched.advance());
}

TEST_CASE("scheduling in the past fails loudly") {
  VirtualScheduler sched;
  sched.schedule_at(100, [] {});
  sched.run_until_idle();
  CHECK(sched.now_us() == 100);
  CHECK_THROWS_WITH_AS(sched.schedule_at(50, [] {}), doctest::Contains("SchedulingInPast"),
                       Error);
  CHECK_NOTHROW(sched.schedule_at(100, [] {}));
}

TEST_CASE("run_until raises on starvation instead of spinning") {
  VirtualScheduler sched;
  CHECK_THROWS_WITH_AS(sched.run_until([] { return false; }), doctest::Contains("Deadlock"),
                       Error);
}

TEST_CASE("topology JSON round trips and fingerprints are stable") {
  const Topology& topo = reference_topology();
  Topology copy = Topology::from_json(topo.to_json());
  CHECK(copy.zones == topo.zones);
  CHECK(copy.links.size() == topo.links.size());
  CHECK(copy.fingerprint() == topo.fingerprint());

  Topology tweaked = copy;
  tweaked.intra_zone_rtt_ms = 0.3;
  CHECK(tweaked.fingerprint() != topo.fingerprint());
}

TEST_CASE("millisecond to microsecond conversion rounds half away from zero") {
  CHECK(ms_to_us(8.05) == 8050);
  CHECK(ms_to_us(0.2) == 200);
  CHECK(ms_to_us(24.69) == 24690);
  CHECK(ms_to_us(0.0) == 0);
  CHECK(ms_to_us(0.0005) == 1);
}

TEST_CASE("delay modes parse from CLI names") {
  CHECK(DelayMode::parse("p50", 1).kind == DelayModeKind::DeterministicP50);
  CHECK(DelayMode::parse("stochastic", 99).seed == 99);
  auto p = DelayMode::parse("percentile:0.9", 1);
  CHECK(p.kind == DelayModeKind::Percentile);
  CHECK(p.percentile == 0.9);
  CHECK_THROWS_AS(DelayMode::parse("gaussian", 1), ConfigError);
  CHECK_THROWS_AS(DelayMode::at_percentile(1.5), ConfigError);
}
