#include "coresim/netem.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace coresim::netem {

bool Topology::has_zone(const ZoneId& z) const {
  return std::find(zones.begin(), zones.end(), z) != zones.end();
}

const LinkProfile* Topology::find_link(const ZoneId& a, const ZoneId& b) const {
  for (const auto& l : links) {
    if ((l.a == a && l.b == b) || (l.a == b && l.b == a)) return &l;
  }
  return nullptr;
}

void Topology::validate() const {
  if (intra_zone_rtt_ms < 0) {
    throw ConfigError("BadTopology", "intraZoneRttMs must be >= 0");
  }
  for (const auto& l : links) {
    const std::string pair = l.a.str() + "<->" + l.b.str();
    if (!has_zone(l.a) || !has_zone(l.b)) {
      throw ConfigError("BadTopology", "link references unknown zone: " + pair);
    }
    if (l.a == l.b) {
      throw ConfigError("BadTopology", "link endpoints must differ: " + pair);
    }
    if (!(l.p50_ms >= 0 && l.p50_ms <= l.p90_ms && l.p90_ms <= l.p99_ms)) {
      throw ConfigError("BadTopology", "percentiles must satisfy 0 <= p50 <= p90 <= p99 on " +
                                           pair);
    }
    // LZs and WZs have no direct connectivity; such a link is a config error.
    if ((l.a.kind == ZoneKind::Lz && l.b.kind == ZoneKind::Wz) ||
        (l.a.kind == ZoneKind::Wz && l.b.kind == ZoneKind::Lz)) {
      throw ConfigError("BadTopology", "no direct connectivity exists between LZs and WZs: " +
                                           pair);
    }
  }
  for (size_t i = 0; i < links.size(); ++i) {
    for (size_t j = i + 1; j < links.size(); ++j) {
      const auto& x = links[i];
      const auto& y = links[j];
      if ((x.a == y.a && x.b == y.b) || (x.a == y.b && x.b == y.a)) {
        throw ConfigError("BadTopology",
                          "duplicate link profile for " + x.a.str() + "<->" + x.b.str());
      }
    }
  }
}

std::string Topology::fingerprint() const {
  const std::string canon = to_json().dump();
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

nlohmann::json Topology::to_json() const {
  nlohmann::json j;
  j["intraZoneRttMs"] = intra_zone_rtt_ms;
  auto zs = nlohmann::json::array();
  for (const auto& z : zones) zs.push_back(z.str());
  j["zones"] = zs;
  auto ls = nlohmann::json::array();
  for (const auto& l : links) {
    ls.push_back({{"a", l.a.str()},
                  {"b", l.b.str()},
                  {"p50", l.p50_ms},
                  {"p90", l.p90_ms},
                  {"p99", l.p99_ms}});
  }
  j["links"] = ls;
  return j;
}

Topology Topology::from_json(const nlohmann::json& j) {
  Topology t;
  try {
    if (j.contains("intraZoneRttMs")) t.intra_zone_rtt_ms = j.at("intraZoneRttMs").get<double>();
    for (const auto& z : j.at("zones")) t.zones.push_back(ZoneId::parse(z.get<std::string>()));
    for (const auto& l : j.at("links")) {
      LinkProfile p;
      p.a = ZoneId::parse(l.at("a").get<std::string>());
      p.b = ZoneId::parse(l.at("b").get<std::string>());
      p.p50_ms = l.at("p50").get<double>();
      p.p90_ms = l.at("p90").get<double>();
      p.p99_ms = l.at("p99").get<double>();
      t.links.push_back(p);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("BadTopology", std::string("malformed topology JSON: ") + e.what());
  }
  t.validate();
  return t;
}

Topology Topology::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("FileNotFound", "cannot open topology file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("BadTopology", path + ": " + e.what());
  }
  return from_json(j);
}

namespace {

Topology build_reference_topology() {
  Topology t;
  auto az = [&](const std::string& city) {
    ZoneId z{city, ZoneKind::Az};
    t.zones.push_back(z);
    return z;
  };
  auto edge = [&](const std::string& city, ZoneKind kind, const ZoneId& anchor, double p50,
                  double p90, double p99) {
    ZoneId z{city, kind};
    t.zones.push_back(z);
    t.links.push_back(LinkProfile{z, anchor, p50, p90, p99});
  };

  // AZ anchors per parent region.
  ZoneId use1 = az("use1");    // US-East (N. Virginia)
  ZoneId usw2 = az("usw2");    // US-West (Oregon)
  ZoneId cac1 = az("cac1");    // Canada (Central)
  ZoneId euw2 = az("euw2");    // Europe (London)
  ZoneId euc1 = az("euc1");    // Europe (Frankfurt)
  ZoneId apne2 = az("apne2");  // Asia-Pacific (Seoul)
  ZoneId apne1 = az("apne1");  // Asia-Pacific (Tokyo)
  ZoneId apse2 = az("apse2");  // Asia-Pacific (Sydney)

  edge("atl", ZoneKind::Lz, use1, 15.5, 15.7, 16.7);
  edge("atl", ZoneKind::Wz, use1, 34.1, 39.1, 40.6);
  edge("nyc", ZoneKind::Lz, use1, 8.05, 8.36, 10.5);
  edge("nyc", ZoneKind::Wz, use1, 14.6, 14.9, 16.3);
  edge("chi", ZoneKind::Lz, use1, 21.8, 23.7, 24.69);
  edge("chi", ZoneKind::Wz, use1, 61.6, 63.7, 63.9);
  edge("dnv", ZoneKind::Lz, usw2, 22.5, 23.0, 24.4);
  edge("dnv", ZoneKind::Wz, usw2, 37.6, 39.2, 39.6);
  edge("sea", ZoneKind::Lz, usw2, 8.92, 9.35, 10.2);
  edge("sea", ZoneKind::Wz, usw2, 10.8, 12.3, 12.8);
  edge("la", ZoneKind::Lz, usw2, 24.1, 25.4, 25.5);
  edge("la", ZoneKind::Wz, usw2, 30.5, 31.1, 33.5);
  edge("trn", ZoneKind::Wz, cac1, 9.67, 9.84, 10.5);
  edge("ldn", ZoneKind::Wz, euw2, 3.87, 4.49, 8.25);
  edge("be", ZoneKind::Wz, euc1, 12.2, 13.81, 14.3);
  edge("tky", ZoneKind::Wz, apne1, 5.29, 5.57, 8.87);
  edge("seo", ZoneKind::Wz, apne2, 4.97, 5.27, 5.48);
  edge("pe", ZoneKind::Lz, apse2, 41.6, 42.5, 53.5);

  t.validate();
  return t;
}

}  // namespace

const Topology& reference_topology() {
  static const Topology kTopo = build_reference_topology();
  return kTopo;
}

DelayMode DelayMode::at_percentile(double p) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw ConfigError("BadDelayMode", "percentile must be in [0, 1)");
  }
  return {DelayModeKind::Percentile, p, 0};
}

std::string DelayMode::str() const {
  switch (kind) {
    case DelayModeKind::DeterministicP50: return "p50";
    case DelayModeKind::Percentile: {
      std::ostringstream os;
      os << "percentile:" << percentile;
      return os.str();
    }
    case DelayModeKind::Stochastic: return "stochastic";
  }
  throw Error("InternalError", "bad DelayMode");
}

DelayMode DelayMode::parse(const std::string& s, uint64_t default_seed) {
  if (s == "p50") return p50();
  if (s == "stochastic") return stochastic(default_seed);
  const std::string prefix = "percentile:";
  if (s.rfind(prefix, 0) == 0) {
    return at_percentile(std::stod(s.substr(prefix.size())));
  }
  throw ConfigError("BadDelayMode", "no such delay mode: " + s +
                                        " (valid: p50, percentile:<p>, stochastic)");
}

double link_quantile_ms(const LinkProfile& link, double u) {
  u = std::clamp(u, 0.0, 1.0);
  double v;
  if (u <= 0.9) {
    v = link.p50_ms + (u - 0.5) * (link.p90_ms - link.p50_ms) / 0.4;
  } else if (u <= 0.99) {
    v = link.p90_ms + (u - 0.9) * (link.p99_ms - link.p90_ms) / 0.09;
  } else {
    v = link.p99_ms + (u - 0.99) * (0.2 * link.p99_ms) / 0.01;
  }
  return std::max(v, 0.0);
}

double sample_rtt_ms(const Topology& topo, const ZoneId& a, const ZoneId& b,
                     const DelayMode& mode, Rng& rng) {
  if (!topo.has_zone(a)) throw ConfigError("UnknownZone", a.str() + " not in topology");
  if (!topo.has_zone(b)) throw ConfigError("UnknownZone", b.str() + " not in topology");
  if (a == b) return topo.intra_zone_rtt_ms;
  const LinkProfile* link = topo.find_link(a, b);
  if (!link) throw Error("NoLinkProfile", "no link profile for " + a.str() + "<->" + b.str());
  switch (mode.kind) {
    case DelayModeKind::DeterministicP50: return link->p50_ms;
    case DelayModeKind::Percentile: return link_quantile_ms(*link, mode.percentile);
    case DelayModeKind::Stochastic: return link_quantile_ms(*link, rng.uniform01());
  }
  throw Error("InternalError", "bad DelayMode");
}

int64_t ms_to_us(double ms) { return static_cast<int64_t>(std::llround(ms * 1000.0)); }

DelaySampler::DelaySampler(Topology topo, DelayMode mode)
    : topo_(std::move(topo)), mode_(mode), rng_(mode.seed) {
  topo_.validate();
}

DelaySampler::Legs DelaySampler::sample_legs(const ZoneId& a, const ZoneId& b) {
  std::lock_guard<std::mutex> lk(mutex_);
  const int64_t rtt = ms_to_us(sample_rtt_ms(topo_, a, b, mode_, rng_));
  const int64_t request = rtt / 2;
  return Legs{rtt, request, rtt - request};
}

void VirtualScheduler::schedule_at(int64_t at_us, std::function<void()> fn) {
  if (at_us < now_us_) {
    throw Error("SchedulingInPast", "event at " + std::to_string(at_us) + "us but now is " +
                                        std::to_string(now_us_) + "us");
  }
  queue_.push(Event{at_us, seq_++, std::move(fn)});
}

void VirtualScheduler::schedule_in(int64_t delta_us, std::function<void()> fn) {
  schedule_at(now_us_ + delta_us, std::move(fn));
}

bool VirtualScheduler::advance() {
  if (queue_.empty()) return false;
  Event ev = queue_.top();
  queue_.pop();
  now_us_ = ev.at_us;
  ev.fn();
  return true;
}

void VirtualScheduler::run_until_idle() {
  while (advance()) {
  }
}

void VirtualScheduler::run_until(const std::function<bool()>& done) {
  while (!done()) {
    if (!advance()) {
      throw Error("Deadlock", "virtual scheduler drained before completion condition held");
    }
  }
}

}  // namespace coresim::netem
