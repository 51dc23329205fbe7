#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "coresim/model.hpp"
#include "coresim/net.hpp"
#include "coresim/scp.hpp"

#include "json.hpp"

namespace coresim::vnf {

// Per-(VNF, message) endpoint processing delays. The paper folds processing
// into endpoint-observed totals without reporting it, so every delay defaults
// to a known constant and is overridable per endpoint and message.
struct ProcessingModel {
  double default_ms = 1.0;
  std::map<std::pair<std::string, std::string>, double> overrides_ms;  // (vnf, msgId) -> ms

  double ms_for(VnfKind vnf, const std::string& msg_id) const;
  int64_t us_for(VnfKind vnf, const std::string& msg_id) const;

  // Full (vnf, msgId) -> microseconds map covering both endpoints of every
  // catalog message; what sidecars and hosts consult at runtime.
  std::map<std::pair<VnfKind, std::string>, int64_t> expand() const;

  void validate() const;
  nlohmann::json to_json() const;
  static ProcessingModel from_json(const nlohmann::json& j);
  static ProcessingModel load_file(const std::string& path);
};

struct NfProfile {
  std::string instance_id;
  VnfKind kind = VnfKind::Amf;
  ZoneId zone;
  std::string endpoint;
  int64_t last_heartbeat_us = 0;
  uint64_t registration_order = 0;

  nlohmann::json to_json() const;
  static NfProfile from_json(const nlohmann::json& j);
};

// The NRF's metadata database. Thread-safe; discovery is deterministic
// (earliest registration first, ties broken by instance id).
class NrfRegistry {
 public:
  void register_profile(NfProfile profile, int64_t now_us);  // DuplicateInstanceId
  void heartbeat(const std::string& instance_id, const nlohmann::json& delta,
                 int64_t now_us);                            // UnknownInstance
  NfProfile discover(VnfKind kind) const;                    // NoInstanceAvailable
  std::optional<NfProfile> find(const std::string& instance_id) const;
  size_t size() const;
  std::vector<NfProfile> profiles() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, NfProfile> by_id_;
  uint64_t next_order_ = 0;
};

// What the application itself observed for one outbound call; feeds the
// tracing-overhead and transparency checks, which need measurements that
// exist with tracing off.
struct HopObservation {
  VnfKind dst;
  std::string target;
  int64_t duration_us;
  int status;
  std::string body;
};

using HopObserver = std::function<void(const HopObservation&)>;

// Outbound HTTP through the co-located sidecar.
class Channel {
 public:
  Channel(Env& env, NetAddr own_sidecar, int64_t call_timeout_us, HopObserver observer = nullptr)
      : env_(env),
        sidecar_(std::move(own_sidecar)),
        timeout_us_(call_timeout_us),
        observer_(std::move(observer)) {}

  struct Reply {
    HttpResponse resp;
    std::optional<scp::TraceCtx> echo;  // this call's sender-span context

    bool ok() const { return resp.transport_ok() && resp.status < 400; }
    bool timed_out() const;
    nlohmann::json json() const;
  };

  Task<Reply> call(VnfKind dst, std::string method, std::string target, nlohmann::json body,
                   std::optional<scp::TraceCtx> parent);

 private:
  Env& env_;
  NetAddr sidecar_;
  int64_t timeout_us_;
  HopObserver observer_;
};

class VnfApp {
 public:
  virtual ~VnfApp() = default;
  virtual VnfKind kind() const = 0;
  virtual Task<HttpResponse> handle(HttpRequest req, std::optional<scp::TraceCtx> ctx) = 0;
};

// Application-side adapter: charges this VNF's processing delay for the
// delivered message, then dispatches to the application handler.
class VnfHost : public Endpoint {
 public:
  VnfHost(VnfApp& app, const std::map<std::pair<VnfKind, std::string>, int64_t>& processing_us,
          Env& env)
      : app_(app), processing_us_(processing_us), env_(env) {}

  Task<HttpResponse> serve(HttpRequest req) override;

 private:
  VnfApp& app_;
  const std::map<std::pair<VnfKind, std::string>, int64_t>& processing_us_;
  Env& env_;
};

HttpResponse json_response(int status, const nlohmann::json& body);

class NrfApp : public VnfApp {
 public:
  NrfApp(Env& env, std::unique_ptr<Channel> chan) : env_(env), chan_(std::move(chan)) {}

  VnfKind kind() const override { return VnfKind::Nrf; }
  Task<HttpResponse> handle(HttpRequest req, std::optional<scp::TraceCtx> ctx) override;

  NrfRegistry& registry() { return registry_; }
  Channel* set_channel(std::unique_ptr<Channel> c) {
    chan_ = std::move(c);
    return chan_.get();
  }

 private:
  Env& env_;
  std::unique_ptr<Channel> chan_;
  NrfRegistry registry_;
};

class AusfApp : public VnfApp {
 public:
  AusfApp(Env& env, std::unique_ptr<Channel> chan) : env_(env), chan_(std::move(chan)) {}

  VnfKind kind() const override { return VnfKind::Ausf; }
  Task<HttpResponse> handle(HttpRequest req, std::optional<scp::TraceCtx> ctx) override;
  Channel* set_channel(std::unique_ptr<Channel> c) {
    chan_ = std::move(c);
    return chan_.get();
  }

 private:
  Env& env_;
  std::unique_ptr<Channel> chan_;
};

class UdmApp : public VnfApp {
 public:
  UdmApp(Env& env, std::unique_ptr<Channel> chan) : env_(env), chan_(std::move(chan)) {}

  VnfKind kind() const override { return VnfKind::Udm; }
  Task<HttpResponse> handle(HttpRequest req, std::optional<scp::TraceCtx> ctx) override;
  Channel* set_channel(std::unique_ptr<Channel> c) {
    chan_ = std::move(c);
    return chan_.get();
  }

 private:
  Env& env_;
  std::unique_ptr<Channel> chan_;
};

class UdrApp : public VnfApp {
 public:
  VnfKind kind() const override { return VnfKind::Udr; }
  Task<HttpResponse> handle(HttpRequest req, std::optional<scp::TraceCtx> ctx) override;
};

class UpfApp : public VnfApp {
 public:
  UpfApp(std::unique_ptr<Channel> chan, ZoneId zone)
      : chan_(std::move(chan)), zone_(std::move(zone)) {}

  VnfKind kind() const override { return VnfKind::Upf; }
  Task<HttpResponse> handle(HttpRequest req, std::optional<scp::TraceCtx> ctx) override;

  Task<bool> register_with_nrf();
  const std::string& instance_id() const { return instance_id_; }
  Channel* set_channel(std::unique_ptr<Channel> c) {
    chan_ = std::move(c);
    return chan_.get();
  }

 private:
  std::unique_ptr<Channel> chan_;
  ZoneId zone_;
  std::string instance_id_ = "upf-1";
};

class AmfApp;

class SmfApp : public VnfApp {
 public:
  SmfApp(Env& env, std::unique_ptr<Channel> chan, ZoneId zone)
      : env_(env), chan_(std::move(chan)), zone_(std::move(zone)) {}

  VnfKind kind() const override { return VnfKind::Smf; }
  Task<HttpResponse> handle(HttpRequest req, std::optional<scp::TraceCtx> ctx) override;

  Task<bool> register_with_nrf();

  struct PrepareResult {
    bool ok = false;
    std::string error;
  };
  // Session-construction prelude: discover a UPF through the NRF. Driven by
  // the AMF between its SMF discovery and the context-creation request;
  // the trigger itself is simulator orchestration, not a 5G message.
  Task<PrepareResult> prepare_session(std::string ue_id, std::optional<scp::TraceCtx> parent);

  const std::string& instance_id() const { return instance_id_; }
  Channel* set_channel(std::unique_ptr<Channel> c) {
    chan_ = std::move(c);
    return chan_.get();
  }

 private:
  Env& env_;
  std::unique_ptr<Channel> chan_;
  ZoneId zone_;
  std::string instance_id_ = "smf-1";
  std::mutex mutex_;
  std::map<std::string, std::string> upf_by_ue_;  // ueId -> discovered UPF instance
};

enum class AuthState { Idle, Challenged, Authenticated };
enum class SessionState { None, ContextCreated, Established };

struct UeContext {
  std::string ue_id;
  AuthState auth = AuthState::Idle;
  SessionState session = SessionState::None;
  std::string auth_ctx_id;
  std::string sm_context_ref;
  std::optional<scp::TraceCtx> trace;  // latest span context of this UE's procedure
};

struct OpResult {
  bool ok = false;
  std::string error;  // stable code when !ok, e.g. "AuthChainTimeout"

  static OpResult success() { return {true, ""}; }
  static OpResult failure(std::string code) { return {false, std::move(code)}; }
};

class AmfApp : public VnfApp {
 public:
  AmfApp(Env& env, std::unique_ptr<Channel> chan, ZoneId zone, SmfApp& smf)
      : env_(env), chan_(std::move(chan)), zone_(std::move(zone)), smf_(smf) {}

  VnfKind kind() const override { return VnfKind::Amf; }
  Task<HttpResponse> handle(HttpRequest req, std::optional<scp::TraceCtx> ctx) override;

  Task<bool> register_with_nrf();

  // Full 5G-AKA exchange for one UE; on success the context is Authenticated.
  Task<OpResult> register_ue(std::string ue_id);

  // PDU session establishment; requires prior authentication.
  Task<OpResult> setup_session(std::string ue_id);

  std::optional<UeContext> ue_context(const std::string& ue_id) const;
  const std::string& instance_id() const { return instance_id_; }
  Channel* set_channel(std::unique_ptr<Channel> c) {
    chan_ = std::move(c);
    return chan_.get();
  }

 private:
  Task<Channel::Reply> auth_hop(VnfKind dst, std::string method, std::string target,
                                nlohmann::json body, const std::string& ue_id);

  Env& env_;
  std::unique_ptr<Channel> chan_;
  ZoneId zone_;
  SmfApp& smf_;
  std::string instance_id_ = "amf-1";
  int64_t n1n2_deadline_us_ = 5'000'000;
  mutable std::mutex mutex_;
  std::map<std::string, UeContext> ues_;
  std::map<std::string, std::shared_ptr<OneShot<scp::TraceCtx>>> n1n2_waiters_;
};

class GnbSimApp : public VnfApp {
 public:
  explicit GnbSimApp(AmfApp& amf) : amf_(amf) {}

  VnfKind kind() const override { return VnfKind::UeGnb; }
  Task<HttpResponse> handle(HttpRequest req, std::optional<scp::TraceCtx> ctx) override;

  struct RunSummary {
    int requested = 0;
    int succeeded = 0;
    std::vector<std::pair<std::string, std::string>> failures;  // (ueId, error code)
  };

  // Registers then establishes a session for each UE. Per-UE failures are
  // reported in the summary; other UEs proceed.
  Task<RunSummary> run(Env& env, int ue_count, bool concurrent);

 private:
  AmfApp& amf_;
};

}  // namespace coresim::vnf
