#pragma once

#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "coresim/error.hpp"
#include "coresim/model.hpp"
#include "coresim/rng.hpp"

#include "json.hpp"

namespace coresim::netem {

// Measured round-trip percentiles between two zones, in milliseconds.
struct LinkProfile {
  ZoneId a;
  ZoneId b;
  double p50_ms = 0;
  double p90_ms = 0;
  double p99_ms = 0;
};

struct Topology {
  std::vector<ZoneId> zones;
  std::vector<LinkProfile> links;
  double intra_zone_rtt_ms = 0.2;

  bool has_zone(const ZoneId& z) const;
  const LinkProfile* find_link(const ZoneId& a, const ZoneId& b) const;

  // Percentile monotonicity, zone references, pair uniqueness and the
  // LZ<->WZ connectivity ban. Throws ConfigError naming the violation.
  void validate() const;

  // Stable fingerprint over zones, links and the intra-zone RTT; reports
  // carry it so comparisons can detect mismatched topologies.
  std::string fingerprint() const;

  nlohmann::json to_json() const;
  static Topology from_json(const nlohmann::json& j);
  static Topology load_file(const std::string& path);
};

// Transcription of the weekly AZ <-> edge-zone latency table: 18 edge zones
// with their parent-region AZ anchors.
const Topology& reference_topology();

enum class DelayModeKind { DeterministicP50, Percentile, Stochastic };

struct DelayMode {
  DelayModeKind kind = DelayModeKind::DeterministicP50;
  double percentile = 0.5;     // Percentile mode only
  uint64_t seed = 0;           // Stochastic mode only; must be explicit

  static DelayMode p50() { return {DelayModeKind::DeterministicP50, 0.5, 0}; }
  static DelayMode at_percentile(double p);
  static DelayMode stochastic(uint64_t seed) { return {DelayModeKind::Stochastic, 0.0, seed}; }

  std::string str() const;
  static DelayMode parse(const std::string& s, uint64_t default_seed);
};

// Inverse CDF of the three-point-calibrated RTT distribution for one link:
// a single linear segment through (0.5, p50) and (0.9, p90) covering
// u in [0, 0.9] (clamped at zero below), a linear segment to (0.99, p99),
// and a tail ramp ending at 1.2 * p99. Exact at all three calibration points.
double link_quantile_ms(const LinkProfile& link, double u);

// One RTT draw for a zone pair. Intra-zone pairs always yield the topology's
// constant; cross-zone pairs require a link profile (NoLinkProfile otherwise).
double sample_rtt_ms(const Topology& topo, const ZoneId& a, const ZoneId& b,
                     const DelayMode& mode, Rng& rng);

int64_t ms_to_us(double ms);

// Samples whole-transaction RTTs in microseconds and splits them into
// request/response legs that sum back exactly. Thread-safe.
class DelaySampler {
 public:
  DelaySampler(Topology topo, DelayMode mode);

  struct Legs {
    int64_t rtt_us;
    int64_t request_us;
    int64_t response_us;
  };
  Legs sample_legs(const ZoneId& a, const ZoneId& b);

  const Topology& topology() const { return topo_; }
  const DelayMode& mode() const { return mode_; }

 private:
  Topology topo_;
  DelayMode mode_;
  Rng rng_;
  std::mutex mutex_;
};

// Deterministic discrete-event clock: events run in (time, insertion) order
// and advance() is the only way time moves.
class VirtualScheduler {
 public:
  int64_t now_us() const { return now_us_; }

  void schedule_at(int64_t at_us, std::function<void()> fn);
  void schedule_in(int64_t delta_us, std::function<void()> fn);

  // Executes the next event, advancing the clock to it. False when idle.
  bool advance();

  void run_until_idle();
  void run_until(const std::function<bool()>& done);

  size_t pending() const { return queue_.size(); }

 private:
  struct Event {
    int64_t at_us;
    uint64_t seq;
    std::function<void()> fn;
  };
  struct Later {
    bool operator()(const Event& x, const Event& y) const {
      return std::tie(x.at_us, x.seq) > std::tie(y.at_us, y.seq);
    }
  };
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  int64_t now_us_ = 0;
  uint64_t seq_ = 0;
};

}  // namespace coresim::netem
