#include "coresim/scp.hpp"

#include <fstream>

#include "json.hpp"

namespace coresim {

std::string url_path(const std::string& target) {
  std::string s = target;
  auto scheme = s.find("://");
  if (scheme != std::string::npos) {
    auto path_start = s.find('/', scheme + 3);
    if (path_start == std::string::npos) return "";
    s = s.substr(path_start);
  }
  auto q = s.find_first_of("?#");
  if (q != std::string::npos) s = s.substr(0, q);
  return s;
}

}  // namespace coresim

namespace coresim::scp {

std::string extract_capif_path(const std::string& url) {
  const std::string path = url_path(url);
  if (path.empty() || path[0] != '/') {
    throw Error("MalformedUrl", "no path in request target: " + url);
  }
  auto end = path.find('/', 1);
  std::string service = end == std::string::npos ? path : path.substr(0, end);
  if (service.size() < 2) {
    throw Error("MalformedUrl", "no service segment in request target: " + url);
  }
  return service;
}

void RouteTable::add(const Route& r) {
  if (r.sidecar.port == r.app_port && r.sidecar.port != 0) {
    throw ConfigError("BadRouteTable",
                      "sidecar and application port must differ for " + to_string(r.vnf));
  }
  routes_[r.vnf] = r;
}

const Route* RouteTable::find(VnfKind k) const {
  auto it = routes_.find(k);
  return it == routes_.end() ? nullptr : &it->second;
}

const Route& RouteTable::at(VnfKind k) const {
  const Route* r = find(k);
  if (!r) throw Error("UnknownRoute", "no route for " + to_string(k));
  return *r;
}

void RouteTable::validate() const {
  for (const auto& [k, r] : routes_) {
    if (r.sidecar.host.empty()) {
      throw ConfigError("BadRouteTable", "route for " + to_string(k) + " has no sidecar host");
    }
    if (r.sidecar.port == r.app_port && r.sidecar.port != 0) {
      throw ConfigError("BadRouteTable",
                        "sidecar and application port must differ for " + to_string(k));
    }
  }
}

nlohmann::json RouteTable::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [k, r] : routes_) {
    arr.push_back({{"vnf", to_string(k)},
                   {"sidecarHost", r.sidecar.host},
                   {"sidecarPort", r.sidecar.port},
                   {"appPort", r.app_port},
                   {"zone", r.zone.str()}});
  }
  return nlohmann::json{{"routes", arr}};
}

RouteTable RouteTable::from_json(const nlohmann::json& j) {
  RouteTable t;
  try {
    for (const auto& e : j.at("routes")) {
      Route r;
      r.vnf = vnf_kind_from_string(e.at("vnf").get<std::string>());
      r.sidecar.host = e.at("sidecarHost").get<std::string>();
      r.sidecar.port = e.at("sidecarPort").get<uint16_t>();
      r.app_port = e.value("appPort", 0);
      r.zone = ZoneId::parse(e.at("zone").get<std::string>());
      t.add(r);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("BadRouteTable", std::string("malformed route table: ") + e.what());
  }
  t.validate();
  return t;
}

RouteTable RouteTable::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("FileNotFound", "cannot open route table " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("BadRouteTable", path + ": " + e.what());
  }
  return from_json(j);
}

BufferedEmitter::BufferedEmitter(size_t cap,
                                 std::function<bool(const std::vector<telemetry::Span>&)> deliver)
    : cap_(cap), deliver_(std::move(deliver)) {}

BufferedEmitter::~BufferedEmitter() { stop(); }

void BufferedEmitter::emit(const telemetry::Span& span) {
  ++emitted_;
  std::lock_guard<std::mutex> lk(mutex_);
  if (queue_.size() >= cap_) {
    ++dropped_;
    return;
  }
  queue_.push_back(span);
}

bool BufferedEmitter::flush() {
  std::vector<telemetry::Span> batch;
  {
    std::lock_guard<std::mutex> lk(mutex_);
    batch.assign(queue_.begin(), queue_.end());
    queue_.clear();
  }
  if (batch.empty()) return true;
  if (deliver_(batch)) return true;
  // Agent unreachable: put the batch back in front, preserving order.
  std::lock_guard<std::mutex> lk(mutex_);
  size_t keep = std::min(batch.size(), cap_ > queue_.size() ? cap_ - queue_.size() : 0);
  dropped_ += batch.size() - keep;
  queue_.insert(queue_.begin(), batch.begin(), batch.begin() + static_cast<long>(keep));
  return false;
}

void BufferedEmitter::start_background(int64_t interval_us) {
  running_ = true;
  flusher_ = std::thread([this, interval_us] {
    while (running_) {
      flush();
      std::this_thread::sleep_for(std::chrono::microseconds(interval_us));
    }
    flush();
  });
}

void BufferedEmitter::stop() {
  if (flusher_.joinable()) {
    running_ = false;
    flusher_.join();
  } else {
    flush();
  }
}

size_t BufferedEmitter::buffered() const {
  std::lock_guard<std::mutex> lk(mutex_);
  return queue_.size();
}

std::string TraceCtx::traceparent() const {
  return "00-" + trace_id.hex() + "-" + telemetry::span_id_hex(span_id) + "-01";
}

std::optional<TraceCtx> TraceCtx::from_traceparent(const std::string& header) {
  // version "-" trace-id(32) "-" parent-id(16) "-" flags
  if (header.size() < 3 + 32 + 1 + 16) return std::nullopt;
  if (header.compare(0, 3, "00-") != 0) return std::nullopt;
  try {
    TraceCtx ctx;
    ctx.trace_id = telemetry::TraceId::from_hex(header.substr(3, 32));
    if (header[35] != '-') return std::nullopt;
    ctx.span_id = telemetry::span_id_from_hex(header.substr(36, 16));
    return ctx;
  } catch (const Error&) {
    return std::nullopt;
  }
}

Sidecar::Sidecar(SidecarConfig cfg, RouteTable routes, Env& env, netem::DelaySampler& delays,
                 const std::map<std::pair<VnfKind, std::string>, int64_t>& processing_us,
                 SpanSink* sink)
    : cfg_(std::move(cfg)),
      routes_(std::move(routes)),
      env_(env),
      delays_(delays),
      processing_us_(processing_us),
      sink_(sink) {}

int64_t Sidecar::processing_us(VnfKind vnf, const std::string& msg_id) const {
  auto it = processing_us_.find({vnf, msg_id});
  return it == processing_us_.end() ? 0 : it->second;
}

void Sidecar::emit(telemetry::Span span) {
  if (sink_) sink_->emit(std::move(span));
}

Task<HttpResponse> Sidecar::serve(HttpRequest req) {
  if (req.header(kHdrHop)) return inbound(std::move(req));
  return outbound(std::move(req));
}

namespace {

HttpResponse error_response(int status, const std::string& code, const std::string& message) {
  HttpResponse r;
  r.status = status;
  r.body = nlohmann::json{{"error", code}, {"message", message}}.dump();
  return r;
}

}  // namespace

Task<HttpResponse> Sidecar::outbound(HttpRequest req) {
  auto dst_header = req.header(kHdrDst);
  if (!dst_header) {
    co_return error_response(400, "MissingDestination", "outbound request lacks " +
                                                            std::string(kHdrDst));
  }
  VnfKind dst;
  std::string service;
  try {
    dst = vnf_kind_from_string(*dst_header);
    service = extract_capif_path(req.target);
  } catch (const Error& e) {
    co_return error_response(400, e.code(), e.what());
  }

  const CapifMessage* entry = find_catalog_entry(req.method, service, cfg_.own_vnf, dst);
  if (!entry) {
    {
      std::lock_guard<std::mutex> lk(stats_mutex_);
      ++stats_.unknown_message;
    }
    co_return error_response(404, "UnknownMessage",
                             req.method + " " + service + " " + to_string(cfg_.own_vnf) + "->" +
                                 to_string(dst) + " is not a catalogued transaction");
  }

  const Route* route = routes_.find(dst);
  const bool tracing = !cfg_.passthrough;

  telemetry::Span span;
  if (tracing) {
    auto parent = req.header(kHdrTraceparent)
                      ? TraceCtx::from_traceparent(*req.header(kHdrTraceparent))
                      : std::nullopt;
    span.trace_id = parent ? parent->trace_id
                           : telemetry::TraceId{env_.next_id(), env_.next_id()};
    span.span_id = env_.next_id();
    if (parent) span.parent_span_id = parent->span_id;
    span.operation = req.method + " " + service;
    span.src_vnf = cfg_.own_vnf;
    span.dst_vnf = dst;
    span.src_zone = cfg_.own_zone;
    span.dst_zone = route ? route->zone : cfg_.own_zone;
    span.category = entry->category;
    span.start_us = env_.now_us();
    span.side = telemetry::Side::Sender;
  }

  if (!route) {
    {
      std::lock_guard<std::mutex> lk(stats_mutex_);
      ++stats_.unknown_route;
    }
    if (tracing) {
      span.duration_us = env_.now_us() - span.start_us;
      span.error = "UnknownRoute";
      emit(std::move(span));
    }
    co_return error_response(502, "UnknownRoute", "no route for " + to_string(dst));
  }

  // Source-side processing, then the request leg of one sampled RTT.
  co_await env_.sleep_us(processing_us(cfg_.own_vnf, entry->id));
  const auto legs = delays_.sample_legs(cfg_.own_zone, route->zone);
  co_await env_.sleep_us(legs.request_us);

  HttpRequest fwd;
  fwd.method = req.method;
  fwd.target = req.target;
  fwd.body = req.body;
  for (const auto& [k, v] : req.headers) fwd.headers[k] = v;
  fwd.headers.erase(kHdrDst);
  fwd.headers.erase(kHdrTraceparent);
  fwd.headers[kHdrHop] = "1";
  fwd.headers[kHdrSrc] = to_string(cfg_.own_vnf);
  fwd.headers[kHdrSrcZone] = cfg_.own_zone.str();
  fwd.headers[kHdrMsg] = entry->id;
  if (tracing) {
    fwd.headers[kHdrTraceparent] = TraceCtx{span.trace_id, span.span_id}.traceparent();
  }

  HttpResponse resp = co_await env_.round_trip(route->sidecar, std::move(fwd),
                                               cfg_.hop_deadline_us);

  if (!resp.transport_ok()) {
    {
      std::lock_guard<std::mutex> lk(stats_mutex_);
      ++stats_.upstream_failures;
    }
    const bool timed_out = resp.header("x-transport-error") &&
                           *resp.header("x-transport-error") == "timeout";
    if (tracing) {
      span.duration_us = env_.now_us() - span.start_us;
      span.error = "UpstreamUnreachable";
      emit(std::move(span));
    }
    co_return error_response(timed_out ? 504 : 502, "UpstreamUnreachable",
                             "no response from " + to_string(dst) + " sidecar at " +
                                 route->sidecar.str());
  }

  co_await env_.sleep_us(legs.response_us);

  {
    std::lock_guard<std::mutex> lk(stats_mutex_);
    ++stats_.forwarded;
  }

  HttpResponse out;
  out.status = resp.status;
  out.body = resp.body;
  for (const auto& [k, v] : resp.headers) out.headers[k] = v;
  if (tracing) {
    span.duration_us = env_.now_us() - span.start_us;
    out.headers[kHdrTraceEcho] = TraceCtx{span.trace_id, span.span_id}.traceparent();
    emit(std::move(span));
  }
  co_return out;
}

Task<HttpResponse> Sidecar::inbound(HttpRequest req) {
  auto msg_id = req.header(kHdrMsg);
  auto src_name = req.header(kHdrSrc);
  auto src_zone = req.header(kHdrSrcZone);
  if (!msg_id || !src_name || !src_zone) {
    co_return error_response(400, "BadHop", "hop request lacks sidecar metadata");
  }

  const CapifMessage& entry = catalog_entry(*msg_id);
  auto parent = req.header(kHdrTraceparent)
                    ? TraceCtx::from_traceparent(*req.header(kHdrTraceparent))
                    : std::nullopt;
  const bool tracing = !cfg_.passthrough && parent.has_value();

  telemetry::Span span;
  if (tracing) {
    span.trace_id = parent->trace_id;
    span.span_id = env_.next_id();
    span.parent_span_id = parent->span_id;
    span.operation = req.method + " " + extract_capif_path(req.target);
    span.src_vnf = vnf_kind_from_string(*src_name);
    span.dst_vnf = cfg_.own_vnf;
    span.src_zone = ZoneId::parse(*src_zone);
    span.dst_zone = cfg_.own_zone;
    span.category = entry.category;
    span.start_us = env_.now_us();
    span.side = telemetry::Side::Receiver;
  }

  HttpRequest fwd;
  fwd.method = req.method;
  fwd.target = req.target;
  fwd.body = req.body;
  for (const auto& [k, v] : req.headers) fwd.headers[k] = v;
  fwd.headers.erase(kHdrHop);
  fwd.headers.erase(kHdrSrc);
  fwd.headers.erase(kHdrSrcZone);
  fwd.headers.erase(kHdrTraceparent);
  if (tracing) {
    fwd.headers[kHdrTraceparent] = TraceCtx{span.trace_id, span.span_id}.traceparent();
  }

  HttpResponse resp = co_await env_.round_trip(cfg_.app_addr, std::move(fwd),
                                               cfg_.hop_deadline_us);

  if (!resp.transport_ok()) {
    {
      std::lock_guard<std::mutex> lk(stats_mutex_);
      ++stats_.upstream_failures;
    }
    if (tracing) {
      span.duration_us = env_.now_us() - span.start_us;
      span.error = "UpstreamUnreachable";
      emit(std::move(span));
    }
    co_return error_response(502, "UpstreamUnreachable",
                             "local application at " + cfg_.app_addr.str() + " did not answer");
  }

  {
    std::lock_guard<std::mutex> lk(stats_mutex_);
    ++stats_.forwarded;
  }
  if (tracing) {
    span.duration_us = env_.now_us() - span.start_us;
    emit(std::move(span));
  }
  co_return resp;
}

}  // namespace coresim::scp
