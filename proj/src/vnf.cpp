#include "coresim/vnf.hpp"

#include <algorithm>
#include <fstream>

namespace coresim::vnf {

double ProcessingModel::ms_for(VnfKind vnf, const std::string& msg_id) const {
  auto it = overrides_ms.find({to_string(vnf), msg_id});
  return it == overrides_ms.end() ? default_ms : it->second;
}

int64_t ProcessingModel::us_for(VnfKind vnf, const std::string& msg_id) const {
  return netem::ms_to_us(ms_for(vnf, msg_id));
}

std::map<std::pair<VnfKind, std::string>, int64_t> ProcessingModel::expand() const {
  std::map<std::pair<VnfKind, std::string>, int64_t> out;
  for (const auto& m : catalog()) {
    out[{m.src, m.id}] = us_for(m.src, m.id);
    out[{m.dst, m.id}] = us_for(m.dst, m.id);
  }
  return out;
}

void ProcessingModel::validate() const {
  if (default_ms < 0) throw ConfigError("BadProcessingModel", "defaultMs must be >= 0");
  for (const auto& [key, ms] : overrides_ms) {
    if (ms < 0) {
      throw ConfigError("BadProcessingModel", "processing delay for (" + key.first + ", " +
                                                  key.second + ") must be >= 0");
    }
    try {
      vnf_kind_from_string(key.first);
      catalog_entry(key.second);
    } catch (const Error& e) {
      throw ConfigError("BadProcessingModel", e.what());
    }
  }
}

nlohmann::json ProcessingModel::to_json() const {
  nlohmann::json overrides = nlohmann::json::array();
  for (const auto& [key, ms] : overrides_ms) {
    overrides.push_back({{"vnf", key.first}, {"message", key.second}, {"ms", ms}});
  }
  return nlohmann::json{{"defaultMs", default_ms}, {"overrides", overrides}};
}

ProcessingModel ProcessingModel::from_json(const nlohmann::json& j) {
  ProcessingModel m;
  try {
    m.default_ms = j.value("defaultMs", 1.0);
    if (j.contains("overrides")) {
      for (const auto& o : j.at("overrides")) {
        m.overrides_ms[{o.at("vnf").get<std::string>(), o.at("message").get<std::string>()}] =
            o.at("ms").get<double>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("BadProcessingModel", std::string("malformed processing model: ") + e.what());
  }
  m.validate();
  return m;
}

ProcessingModel ProcessingModel::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("FileNotFound", "cannot open processing model " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("BadProcessingModel", path + ": " + e.what());
  }
  return from_json(j);
}

nlohmann::json NfProfile::to_json() const {
  return {{"instanceId", instance_id},
          {"kind", to_string(kind)},
          {"zone", zone.str()},
          {"endpoint", endpoint}};
}

NfProfile NfProfile::from_json(const nlohmann::json& j) {
  NfProfile p;
  p.instance_id = j.at("instanceId").get<std::string>();
  p.kind = vnf_kind_from_string(j.at("kind").get<std::string>());
  p.zone = ZoneId::parse(j.at("zone").get<std::string>());
  p.endpoint = j.value("endpoint", "");
  return p;
}

void NrfRegistry::register_profile(NfProfile profile, int64_t now_us) {
  std::lock_guard<std::mutex> lk(mutex_);
  if (by_id_.count(profile.instance_id)) {
    throw Error("DuplicateInstanceId", profile.instance_id + " is already registered");
  }
  profile.last_heartbeat_us = now_us;
  profile.registration_order = next_order_++;
  by_id_[profile.instance_id] = std::move(profile);
}

void NrfRegistry::heartbeat(const std::string& instance_id, const nlohmann::json& delta,
                            int64_t now_us) {
  std::lock_guard<std::mutex> lk(mutex_);
  auto it = by_id_.find(instance_id);
  if (it == by_id_.end()) throw Error("UnknownInstance", instance_id + " is not registered");
  NfProfile& p = it->second;
  p.last_heartbeat_us = std::max(p.last_heartbeat_us, now_us);
  if (delta.is_object() && delta.contains("endpoint")) {
    p.endpoint = delta.at("endpoint").get<std::string>();
  }
}

NfProfile NrfRegistry::discover(VnfKind kind) const {
  std::lock_guard<std::mutex> lk(mutex_);
  const NfProfile* best = nullptr;
  for (const auto& [id, p] : by_id_) {
    if (p.kind != kind) continue;
    if (!best || std::tie(p.registration_order, p.instance_id) <
                     std::tie(best->registration_order, best->instance_id)) {
      best = &p;
    }
  }
  if (!best) throw Error("NoInstanceAvailable", "no " + to_string(kind) + " registered");
  return *best;
}

std::optional<NfProfile> NrfRegistry::find(const std::string& instance_id) const {
  std::lock_guard<std::mutex> lk(mutex_);
  auto it = by_id_.find(instance_id);
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

size_t NrfRegistry::size() const {
  std::lock_guard<std::mutex> lk(mutex_);
  return by_id_.size();
}

std::vector<NfProfile> NrfRegistry::profiles() const {
  std::lock_guard<std::mutex> lk(mutex_);
  std::vector<NfProfile> out;
  for (const auto& [id, p] : by_id_) out.push_back(p);
  std::sort(out.begin(), out.end(), [](const NfProfile& a, const NfProfile& b) {
    return a.registration_order < b.registration_order;
  });
  return out;
}

bool Channel::Reply::timed_out() const {
  if (resp.transport_ok()) return resp.status == 504;
  auto kind = resp.header("x-transport-error");
  return kind && *kind == "timeout";
}

nlohmann::json Channel::Reply::json() const {
  if (resp.body.empty()) return nlohmann::json::object();
  auto parsed = nlohmann::json::parse(resp.body, nullptr, false);
  return parsed.is_discarded() ? nlohmann::json::object() : parsed;
}

Task<Channel::Reply> Channel::call(VnfKind dst, std::string method, std::string target,
                                   nlohmann::json body, std::optional<scp::TraceCtx> parent) {
  HttpRequest req;
  req.method = std::move(method);
  req.target = target;
  if (!body.is_null()) req.body = body.dump();
  req.headers[scp::kHdrDst] = to_string(dst);
  if (parent) req.headers[scp::kHdrTraceparent] = parent->traceparent();

  const int64_t started = env_.now_us();
  HttpResponse resp = co_await env_.round_trip(sidecar_, std::move(req), timeout_us_);
  if (observer_) {
    observer_(HopObservation{dst, target, env_.now_us() - started, resp.status, resp.body});
  }
  Reply reply;
  if (auto echo = resp.header(scp::kHdrTraceEcho)) {
    reply.echo = scp::TraceCtx::from_traceparent(*echo);
  }
  reply.resp = std::move(resp);
  co_return reply;
}

Task<HttpResponse> VnfHost::serve(HttpRequest req) {
  if (auto msg_id = req.header(scp::kHdrMsg)) {
    auto it = processing_us_.find({app_.kind(), *msg_id});
    if (it != processing_us_.end()) co_await env_.sleep_us(it->second);
  }
  std::optional<scp::TraceCtx> ctx;
  if (auto tp = req.header(scp::kHdrTraceparent)) ctx = scp::TraceCtx::from_traceparent(*tp);
  co_return co_await app_.handle(std::move(req), std::move(ctx));
}

HttpResponse json_response(int status, const nlohmann::json& body) {
  HttpResponse r;
  r.status = status;
  r.body = body.dump();
  r.headers["Content-Type"] = "application/json";
  return r;
}

namespace {

bool starts_with(const std::string& s, const std::string& prefix) {
  return s.rfind(prefix, 0) == 0;
}

std::string json_body_field(const std::string& body, const std::string& field) {
  if (body.empty()) return "";
  auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains(field)) return "";
  return j.at(field).is_string() ? j.at(field).get<std::string>() : "";
}

std::string query_param(const std::string& target, const std::string& name) {
  auto q = target.find('?');
  if (q == std::string::npos) return "";
  std::string qs = target.substr(q + 1);
  size_t pos = 0;
  while (pos < qs.size()) {
    auto amp = qs.find('&', pos);
    std::string pair = qs.substr(pos, amp == std::string::npos ? std::string::npos : amp - pos);
    auto eq = pair.find('=');
    if (eq != std::string::npos && pair.substr(0, eq) == name) return pair.substr(eq + 1);
    if (amp == std::string::npos) break;
    pos = amp + 1;
  }
  return "";
}

// Last path segment of the resource part (ignoring any query string).
std::string last_segment(const std::string& target) {
  std::string path = url_path(target);
  auto slash = path.rfind('/');
  return slash == std::string::npos ? path : path.substr(slash + 1);
}

Task<bool> register_nf(Channel& chan, const NfProfile& profile) {
  auto reply = co_await chan.call(VnfKind::Nrf, "PUT",
                                  "/nnrf-nfm/v1/nf-instances/" + profile.instance_id,
                                  profile.to_json(), std::nullopt);
  co_return reply.ok();
}

}  // namespace

Task<HttpResponse> NrfApp::handle(HttpRequest req, std::optional<scp::TraceCtx> ctx) {
  const std::string path = url_path(req.target);

  if (req.method == "PUT" && starts_with(path, "/nnrf-nfm/v1/nf-instances/")) {
    NfProfile profile;
    try {
      profile = NfProfile::from_json(nlohmann::json::parse(req.body));
    } catch (const std::exception& e) {
      co_return json_response(400, {{"error", "BadProfile"}, {"message", e.what()}});
    }
    try {
      registry_.register_profile(profile, env_.now_us());
    } catch (const Error& e) {
      co_return json_response(409, {{"error", e.code()}});
    }
    // One status notification back to the registrant, sent after the
    // registration confirmation goes out.
    env_.spawn([](NrfApp* self, VnfKind registrant, std::string instance_id,
                  std::optional<scp::TraceCtx> parent) -> Task<> {
      co_await self->chan_->call(registrant, "POST", "/nnrf-nfm/v1/notifications",
                                 {{"event", "NF_REGISTERED"}, {"instanceId", instance_id}},
                                 parent);
    }(this, profile.kind, profile.instance_id, ctx));
    co_return json_response(201, {{"status", "REGISTERED"}, {"instanceId", profile.instance_id}});
  }

  if (req.method == "GET" && starts_with(path, "/nnrf-disc/v1/nf-instances")) {
    const std::string type = query_param(req.target, "target-nf-type");
    try {
      NfProfile p = registry_.discover(vnf_kind_from_string(type));
      co_return json_response(200, {{"nfInstances", nlohmann::json::array({p.to_json()})}});
    } catch (const Error& e) {
      co_return json_response(404, {{"error", e.code()}});
    }
  }

  if (req.method == "PATCH" && starts_with(path, "/nnrf-nfm/v1/nf-instances/")) {
    try {
      nlohmann::json delta =
          req.body.empty() ? nlohmann::json::object() : nlohmann::json::parse(req.body);
      registry_.heartbeat(last_segment(req.target), delta, env_.now_us());
      co_return json_response(200, {{"status", "HEARTBEAT_OK"}});
    } catch (const Error& e) {
      co_return json_response(404, {{"error", e.code()}});
    }
  }

  co_return json_response(404, {{"error", "NotFound"}, {"path", path}});
}

Task<HttpResponse> AusfApp::handle(HttpRequest req, std::optional<scp::TraceCtx> ctx) {
  const std::string path = url_path(req.target);

  if (req.method == "POST" && path == "/nausf-auth/v1/ue-authentications") {
    const std::string ue_id = json_body_field(req.body, "ueId");
    // The home-network vector fetch proceeds once the challenge is on the
    // wire; it is reported under its own spans, not inside this transaction.
    env_.spawn([](AusfApp* self, std::string ue, std::optional<scp::TraceCtx> parent) -> Task<> {
      co_await self->chan_->call(
          VnfKind::Udm, "POST", "/nudm-ueau/v1/" + ue + "/security-information/generate-auth-data",
          {{"ueId", ue}, {"servingNetwork", "coresim"}}, parent);
    }(this, ue_id, ctx));
    co_return json_response(
        201, {{"authCtxId", "authctx-" + ue_id}, {"challenge", "rand-autn-" + ue_id}});
  }

  if (req.method == "PUT" && starts_with(path, "/nausf-auth/v1/ue-authentications/")) {
    const std::string ue_id = json_body_field(req.body, "ueId");
    co_return json_response(200, {{"result", "AUTH_SUCCESS"}, {"kseaf", "kseaf-" + ue_id}});
  }

  co_return json_response(404, {{"error", "NotFound"}, {"path", path}});
}

Task<HttpResponse> UdmApp::handle(HttpRequest req, std::optional<scp::TraceCtx> ctx) {
  const std::string path = url_path(req.target);

  if (req.method == "POST" && starts_with(path, "/nudm-ueau/v1/")) {
    const std::string ue_id = json_body_field(req.body, "ueId");
    env_.spawn([](UdmApp* self, std::string ue, std::optional<scp::TraceCtx> parent) -> Task<> {
      co_await self->chan_->call(
          VnfKind::Udr, "GET",
          "/nudr-dr/v1/subscription-data/" + ue + "/authentication-subscription", nullptr,
          parent);
    }(this, ue_id, ctx));
    co_return json_response(200, {{"authVector", "av-" + ue_id}});
  }

  co_return json_response(404, {{"error", "NotFound"}, {"path", path}});
}

Task<HttpResponse> UdrApp::handle(HttpRequest req, std::optional<scp::TraceCtx>) {
  const std::string path = url_path(req.target);
  if (req.method == "GET" && starts_with(path, "/nudr-dr/v1/subscription-data/")) {
    co_return json_response(200, {{"authSubscription", "sub-" + last_segment(req.target)}});
  }
  co_return json_response(404, {{"error", "NotFound"}, {"path", path}});
}

Task<HttpResponse> UpfApp::handle(HttpRequest req, std::optional<scp::TraceCtx>) {
  const std::string path = url_path(req.target);
  if (req.method == "POST" && path == "/nnrf-nfm/v1/notifications") {
    co_return json_response(200, {{"status", "NOTIFIED"}});
  }
  co_return json_response(404, {{"error", "NotFound"}, {"path", path}});
}

Task<bool> UpfApp::register_with_nrf() {
  NfProfile p;
  p.instance_id = instance_id_;
  p.kind = VnfKind::Upf;
  p.zone = zone_;
  p.endpoint = "upf:80";
  co_return co_await register_nf(*chan_, p);
}

Task<HttpResponse> SmfApp::handle(HttpRequest req, std::optional<scp::TraceCtx> ctx) {
  const std::string path = url_path(req.target);

  if (req.method == "POST" && path == "/nsmf-pdusession/v1/sm-contexts") {
    const std::string ue_id = json_body_field(req.body, "ueId");
    const std::string ref = "smctx-" + ue_id;
    // The N1/N2 transfer toward the AMF is its own HTTP transaction, issued
    // once the creation response is sent.
    env_.spawn([](SmfApp* self, std::string ue, std::string r,
                  std::optional<scp::TraceCtx> parent) -> Task<> {
      co_await self->chan_->call(VnfKind::Amf, "POST",
                                 "/namf-comm/v1/ue-contexts/" + ue + "/n1-n2-messages",
                                 {{"ueId", ue}, {"smContextRef", r}, {"n2InfoClass", "SM"}},
                                 parent);
    }(this, ue_id, ref, ctx));
    co_return json_response(201, {{"smContextRef", ref}});
  }

  if (req.method == "PATCH" && starts_with(path, "/nsmf-pdusession/v1/sm-contexts/")) {
    co_return json_response(200, {{"status", "UPDATED"}, {"smContextRef", last_segment(req.target)}});
  }

  if (req.method == "POST" && path == "/nnrf-nfm/v1/notifications") {
    co_return json_response(200, {{"status", "NOTIFIED"}});
  }

  co_return json_response(404, {{"error", "NotFound"}, {"path", path}});
}

Task<bool> SmfApp::register_with_nrf() {
  NfProfile p;
  p.instance_id = instance_id_;
  p.kind = VnfKind::Smf;
  p.zone = zone_;
  p.endpoint = "smf:80";
  co_return co_await register_nf(*chan_, p);
}

Task<SmfApp::PrepareResult> SmfApp::prepare_session(std::string ue_id,
                                                    std::optional<scp::TraceCtx> parent) {
  auto reply = co_await chan_->call(VnfKind::Nrf, "GET",
                                    "/nnrf-disc/v1/nf-instances?target-nf-type=UPF", nullptr,
                                    parent);
  if (!reply.ok()) {
    co_return PrepareResult{false, reply.timed_out() ? "AuthChainTimeout" : "DiscoveryFailed"};
  }
  const auto instances = reply.json().value("nfInstances", nlohmann::json::array());
  if (instances.empty()) co_return PrepareResult{false, "DiscoveryFailed"};
  {
    std::lock_guard<std::mutex> lk(mutex_);
    upf_by_ue_[ue_id] = instances[0].value("instanceId", "");
  }
  co_return PrepareResult{true, ""};
}

Task<HttpResponse> AmfApp::handle(HttpRequest req, std::optional<scp::TraceCtx> ctx) {
  const std::string path = url_path(req.target);

  if (req.method == "POST" && starts_with(path, "/namf-comm/v1/ue-contexts/")) {
    const std::string ue_id = json_body_field(req.body, "ueId");
    std::shared_ptr<OneShot<scp::TraceCtx>> waiter;
    {
      std::lock_guard<std::mutex> lk(mutex_);
      auto it = n1n2_waiters_.find(ue_id);
      if (it != n1n2_waiters_.end()) waiter = it->second;
    }
    if (waiter) waiter->set(env_, ctx ? *ctx : scp::TraceCtx{});
    co_return json_response(200, {{"status", "N1N2_TRANSFERRED"}});
  }

  if (req.method == "POST" && path == "/nnrf-nfm/v1/notifications") {
    co_return json_response(200, {{"status", "NOTIFIED"}});
  }

  co_return json_response(404, {{"error", "NotFound"}, {"path", path}});
}

Task<bool> AmfApp::register_with_nrf() {
  NfProfile p;
  p.instance_id = instance_id_;
  p.kind = VnfKind::Amf;
  p.zone = zone_;
  p.endpoint = "amf:80";
  co_return co_await register_nf(*chan_, p);
}

Task<Channel::Reply> AmfApp::auth_hop(VnfKind dst, std::string method, std::string target,
                                      nlohmann::json body, const std::string& ue_id) {
  std::optional<scp::TraceCtx> parent;
  {
    std::lock_guard<std::mutex> lk(mutex_);
    parent = ues_[ue_id].trace;
  }
  auto reply = co_await chan_->call(dst, std::move(method), std::move(target), std::move(body),
                                    parent);
  if (reply.echo) {
    std::lock_guard<std::mutex> lk(mutex_);
    ues_[ue_id].trace = reply.echo;
  }
  co_return reply;
}

Task<OpResult> AmfApp::register_ue(std::string ue_id) {
  {
    std::lock_guard<std::mutex> lk(mutex_);
    UeContext& ue = ues_[ue_id];
    ue.ue_id = ue_id;
    ue.auth = AuthState::Idle;
    ue.session = SessionState::None;
    ue.trace = std::nullopt;
  }

  auto challenge = co_await auth_hop(VnfKind::Ausf, "POST", "/nausf-auth/v1/ue-authentications",
                                     {{"ueId", ue_id}}, ue_id);
  if (!challenge.ok()) co_return OpResult::failure("AuthChainTimeout");
  const std::string auth_ctx_id = challenge.json().value("authCtxId", "authctx-" + ue_id);
  {
    std::lock_guard<std::mutex> lk(mutex_);
    ues_[ue_id].auth = AuthState::Challenged;
    ues_[ue_id].auth_ctx_id = auth_ctx_id;
  }

  auto mutual = co_await auth_hop(VnfKind::UeGnb, "POST",
                                  "/nran-auth/v1/ue-contexts/" + ue_id + "/authenticate",
                                  {{"ueId", ue_id}, {"challenge", challenge.json().value("challenge", "")}},
                                  ue_id);
  if (!mutual.ok()) co_return OpResult::failure("AuthChainTimeout");

  auto confirm = co_await auth_hop(
      VnfKind::Ausf, "PUT", "/nausf-auth/v1/ue-authentications/" + auth_ctx_id + "/5g-aka-confirmation",
      {{"ueId", ue_id}, {"response", mutual.json().value("response", "")}}, ue_id);
  if (!confirm.ok()) co_return OpResult::failure("AuthChainTimeout");

  {
    std::lock_guard<std::mutex> lk(mutex_);
    ues_[ue_id].auth = AuthState::Authenticated;
  }
  co_return OpResult::success();
}

Task<OpResult> AmfApp::setup_session(std::string ue_id) {
  std::shared_ptr<OneShot<scp::TraceCtx>> n1n2 = std::make_shared<OneShot<scp::TraceCtx>>();
  {
    std::lock_guard<std::mutex> lk(mutex_);
    auto it = ues_.find(ue_id);
    if (it == ues_.end() || it->second.auth != AuthState::Authenticated) {
      co_return OpResult::failure("NotAuthenticated");
    }
    n1n2_waiters_[ue_id] = n1n2;
  }

  auto discovery = co_await auth_hop(VnfKind::Nrf, "GET",
                                     "/nnrf-disc/v1/nf-instances?target-nf-type=SMF", nullptr,
                                     ue_id);
  if (!discovery.ok()) {
    co_return OpResult::failure(discovery.timed_out() ? "AuthChainTimeout" : "DiscoveryFailed");
  }

  // Orchestration nudge: the SMF performs its own UPF discovery before the
  // context-creation request arrives.
  std::optional<scp::TraceCtx> trace_now;
  {
    std::lock_guard<std::mutex> lk(mutex_);
    trace_now = ues_[ue_id].trace;
  }
  auto prepared = co_await smf_.prepare_session(ue_id, trace_now);
  if (!prepared.ok) co_return OpResult::failure(prepared.error);

  auto creation = co_await auth_hop(VnfKind::Smf, "POST", "/nsmf-pdusession/v1/sm-contexts",
                                    {{"ueId", ue_id}}, ue_id);
  if (!creation.ok()) {
    co_return OpResult::failure(creation.timed_out() ? "AuthChainTimeout" : "ContextCreationFailed");
  }
  const std::string ref = creation.json().value("smContextRef", "smctx-" + ue_id);
  {
    std::lock_guard<std::mutex> lk(mutex_);
    ues_[ue_id].session = SessionState::ContextCreated;
    ues_[ue_id].sm_context_ref = ref;
  }

  auto n1n2_ctx = co_await n1n2->wait(env_, n1n2_deadline_us_);
  {
    std::lock_guard<std::mutex> lk(mutex_);
    n1n2_waiters_.erase(ue_id);
  }
  if (!n1n2_ctx) co_return OpResult::failure("AuthChainTimeout");
  if (n1n2_ctx->span_id != 0) {
    std::lock_guard<std::mutex> lk(mutex_);
    ues_[ue_id].trace = *n1n2_ctx;
  }

  auto resource = co_await auth_hop(VnfKind::UeGnb, "POST",
                                    "/nran-sess/v1/ue-contexts/" + ue_id + "/session-resource",
                                    {{"ueId", ue_id}, {"smContextRef", ref}}, ue_id);
  if (!resource.ok()) co_return OpResult::failure("AuthChainTimeout");

  auto update = co_await auth_hop(VnfKind::Smf, "PATCH", "/nsmf-pdusession/v1/sm-contexts/" + ref,
                                  {{"ueId", ue_id}, {"state", "ACTIVE"}}, ue_id);
  if (!update.ok()) co_return OpResult::failure("AuthChainTimeout");

  {
    std::lock_guard<std::mutex> lk(mutex_);
    ues_[ue_id].session = SessionState::Established;
  }
  co_return OpResult::success();
}

std::optional<UeContext> AmfApp::ue_context(const std::string& ue_id) const {
  std::lock_guard<std::mutex> lk(mutex_);
  auto it = ues_.find(ue_id);
  if (it == ues_.end()) return std::nullopt;
  return it->second;
}

Task<HttpResponse> GnbSimApp::handle(HttpRequest req, std::optional<scp::TraceCtx>) {
  const std::string path = url_path(req.target);

  if (req.method == "POST" && starts_with(path, "/nran-auth/v1/ue-contexts/")) {
    const std::string challenge = json_body_field(req.body, "challenge");
    co_return json_response(200, {{"response", "res-" + challenge}});
  }
  if (req.method == "POST" && starts_with(path, "/nran-sess/v1/ue-contexts/")) {
    co_return json_response(200, {{"status", "RESOURCES_ACTIVE"}});
  }
  co_return json_response(404, {{"error", "NotFound"}, {"path", path}});
}

Task<GnbSimApp::RunSummary> GnbSimApp::run(Env& env, int ue_count, bool concurrent) {
  if (ue_count <= 0) {
    throw ConfigError("InvalidUeCount", "ueCount must be positive, got " +
                                            std::to_string(ue_count));
  }
  auto summary = std::make_shared<RunSummary>();
  summary->requested = ue_count;
  auto results_mutex = std::make_shared<std::mutex>();

  auto one_ue = [](GnbSimApp* self, std::string ue_id, std::shared_ptr<RunSummary> sum,
                   std::shared_ptr<std::mutex> m) -> Task<> {
    OpResult reg = co_await self->amf_.register_ue(ue_id);
    OpResult ses = reg.ok ? co_await self->amf_.setup_session(ue_id) : reg;
    std::lock_guard<std::mutex> lk(*m);
    if (reg.ok && ses.ok) {
      ++sum->succeeded;
    } else {
      sum->failures.emplace_back(ue_id, reg.ok ? ses.error : reg.error);
    }
  };

  if (!concurrent) {
    for (int i = 0; i < ue_count; ++i) {
      co_await one_ue(this, "ue-" + std::to_string(i + 1), summary, results_mutex);
    }
    co_return *summary;
  }

  auto done = std::make_shared<OneShot<Unit>>();
  auto remaining = std::make_shared<std::atomic<int>>(ue_count);
  for (int i = 0; i < ue_count; ++i) {
    env.spawn([](GnbSimApp* self, std::string ue_id, std::shared_ptr<RunSummary> sum,
                 std::shared_ptr<std::mutex> m, decltype(one_ue) fn,
                 std::shared_ptr<std::atomic<int>> left, std::shared_ptr<OneShot<Unit>> gate,
                 Env* e) -> Task<> {
      co_await fn(self, std::move(ue_id), std::move(sum), std::move(m));
      if (left->fetch_sub(1) == 1) gate->set(*e, Unit{});
    }(this, "ue-" + std::to_string(i + 1), summary, results_mutex, one_ue, remaining, done,
                  &env));
  }
  // Generous join deadline; per-hop deadlines bound each UE's procedure.
  co_await done->wait(env, 600'000'000);
  co_return *summary;
}

}  // namespace coresim::vnf
