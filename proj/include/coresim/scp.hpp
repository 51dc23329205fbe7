#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "coresim/model.hpp"
#include "coresim/net.hpp"
#include "coresim/telemetry.hpp"

namespace coresim::scp {

// Leading service segment of a CAPIF URL ("/nsmf-pdusession/v1/sm-contexts/42"
// -> "/nsmf-pdusession"). Accepts origin-form targets and absolute URLs;
// MalformedUrl when no service segment exists. Pure and idempotent.
std::string extract_capif_path(const std::string& url);

struct Route {
  VnfKind vnf;
  NetAddr sidecar;
  uint16_t app_port = 0;
  ZoneId zone;
};

constexpr uint16_t kSidecarPortOffset = 10016;

inline uint16_t default_sidecar_port(uint16_t app_port) {
  return static_cast<uint16_t>(app_port + kSidecarPortOffset);
}

class RouteTable {
 public:
  void add(const Route& r);
  const Route* find(VnfKind k) const;
  const Route& at(VnfKind k) const;  // UnknownRoute when absent

  void validate() const;

  nlohmann::json to_json() const;
  static RouteTable from_json(const nlohmann::json& j);
  static RouteTable load_file(const std::string& path);

  const std::map<VnfKind, Route>& routes() const { return routes_; }

 private:
  std::map<VnfKind, Route> routes_;
};

// Where sidecars hand finished spans. Implementations must not block the
// forwarding path.
class SpanSink {
 public:
  virtual ~SpanSink() = default;
  virtual void emit(const telemetry::Span& span) = 0;
};

// Bounded queue in front of the agent. When the agent is unreachable the
// batch is re-queued for the next flush; overflow drops the oldest-first
// arrivals past the cap and counts them instead of blocking.
class BufferedEmitter : public SpanSink {
 public:
  BufferedEmitter(size_t cap, std::function<bool(const std::vector<telemetry::Span>&)> deliver);
  ~BufferedEmitter() override;

  void emit(const telemetry::Span& span) override;

  // Drains the queue; returns false if spans remain undeliverable.
  bool flush();
  void start_background(int64_t interval_us);
  void stop();

  uint64_t emitted() const { return emitted_; }
  uint64_t dropped() const { return dropped_; }
  size_t buffered() const;

 private:
  size_t cap_;
  std::function<bool(const std::vector<telemetry::Span>&)> deliver_;
  mutable std::mutex mutex_;
  std::deque<telemetry::Span> queue_;
  std::atomic<uint64_t> emitted_{0};
  std::atomic<uint64_t> dropped_{0};
  std::thread flusher_;
  std::atomic<bool> running_{false};
};

struct TraceCtx {
  telemetry::TraceId trace_id;
  telemetry::SpanId span_id = 0;

  std::string traceparent() const;
  static std::optional<TraceCtx> from_traceparent(const std::string& header);
};

// Internal routing/tracing headers used between a VNF and its sidecar and
// between sidecars. Everything the destination application should not see is
// stripped before delivery.
inline constexpr const char* kHdrDst = "x-scp-dst";
inline constexpr const char* kHdrHop = "x-scp-hop";
inline constexpr const char* kHdrSrc = "x-scp-src";
inline constexpr const char* kHdrSrcZone = "x-scp-src-zone";
inline constexpr const char* kHdrMsg = "x-scp-msg";
inline constexpr const char* kHdrTraceEcho = "x-scp-trace";
inline constexpr const char* kHdrTraceparent = "traceparent";

struct SidecarConfig {
  VnfKind own_vnf;
  ZoneId own_zone;
  NetAddr app_addr;            // the co-located application
  bool passthrough = false;
  int64_t hop_deadline_us = 5'000'000;
};

struct SidecarStats {
  uint64_t forwarded = 0;
  uint64_t upstream_failures = 0;
  uint64_t unknown_route = 0;
  uint64_t unknown_message = 0;
};

// The transparent proxy co-located with one VNF. Requests from its own
// application (no hop marker) are matched against the catalog, timed, traced
// and forwarded to the destination sidecar with the port rewritten; requests
// from a peer sidecar (hop marker) are timed on the receiver side and relayed
// to the local application. Emulated network and processing delays are
// injected here so they apply identically with tracing on or off.
class Sidecar : public Endpoint {
 public:
  Sidecar(SidecarConfig cfg, RouteTable routes, Env& env, netem::DelaySampler& delays,
          const std::map<std::pair<VnfKind, std::string>, int64_t>& processing_us,
          SpanSink* sink);

  Task<HttpResponse> serve(HttpRequest req) override;

  void set_passthrough(bool on) { cfg_.passthrough = on; }
  // Wall-mode wiring: routes and the local application address are known only
  // once every listener has bound a port.
  void set_routes(RouteTable routes) { routes_ = std::move(routes); }
  void set_app_addr(NetAddr addr) { cfg_.app_addr = std::move(addr); }
  const SidecarStats& stats() const { return stats_; }
  const SidecarConfig& config() const { return cfg_; }

 private:
  Task<HttpResponse> outbound(HttpRequest req);
  Task<HttpResponse> inbound(HttpRequest req);

  int64_t processing_us(VnfKind vnf, const std::string& msg_id) const;
  void emit(telemetry::Span span);

  SidecarConfig cfg_;
  RouteTable routes_;
  Env& env_;
  netem::DelaySampler& delays_;
  const std::map<std::pair<VnfKind, std::string>, int64_t>& processing_us_;
  SpanSink* sink_;
  SidecarStats stats_;
  std::mutex stats_mutex_;
};

}  // namespace coresim::scp
