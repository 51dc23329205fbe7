#include "coresim/world.hpp"

namespace coresim {

namespace {

constexpr uint16_t kSimAppPort = 80;

std::string sim_host(VnfKind k) {
  std::string name = to_string(k);
  for (char& c : name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return name;
}

int64_t channel_timeout(int64_t hop_deadline_us) { return hop_deadline_us * 2 + 5'000'000; }

}  // namespace

// ---------------------------------------------------------------------------
// SimWorld

class SimWorld::Sink : public scp::SpanSink {
 public:
  Sink(netem::VirtualScheduler& sched, telemetry::Agent& agent) : sched_(sched), agent_(agent) {}

  void emit(const telemetry::Span& span) override {
    ++emitted_;
    sched_.schedule_in(0, [this, span] {
      try {
        agent_.ingest({span});
      } catch (const Error&) {
        // Rejections are counted by the agent; nothing else to do here.
      }
    });
  }

  uint64_t emitted() const { return emitted_; }

 private:
  netem::VirtualScheduler& sched_;
  telemetry::Agent& agent_;
  uint64_t emitted_ = 0;
};

SimWorld::SimWorld(WorldOptions opts) : opts_(std::move(opts)) {
  env_ = std::make_unique<SimEnv>(sched_, net_, mix_seed(opts_.seed, 0x51));
  delays_ = std::make_unique<netem::DelaySampler>(opts_.topology, opts_.delay_mode);
  processing_us_ = opts_.processing.expand();

  if (opts_.store_path.empty()) {
    store_ = std::make_unique<telemetry::SpanStore>("virtual");
  } else {
    store_ = std::make_unique<telemetry::SpanStore>(
        telemetry::SpanStore::open(opts_.store_path, "virtual"));
  }
  collector_ = std::make_unique<telemetry::Collector>(*store_);
  agent_ = std::make_unique<telemetry::Agent>(*collector_);
  sink_ = std::make_unique<Sink>(sched_, *agent_);

  add_node(VnfKind::Nrf, std::make_unique<vnf::NrfApp>(*env_, make_channel(VnfKind::Nrf)));
  nrf_ = static_cast<vnf::NrfApp*>(nodes_.at(VnfKind::Nrf).app.get());
  add_node(VnfKind::Ausf, std::make_unique<vnf::AusfApp>(*env_, make_channel(VnfKind::Ausf)));
  add_node(VnfKind::Udm, std::make_unique<vnf::UdmApp>(*env_, make_channel(VnfKind::Udm)));
  add_node(VnfKind::Udr, std::make_unique<vnf::UdrApp>());
  add_node(VnfKind::Upf,
           std::make_unique<vnf::UpfApp>(make_channel(VnfKind::Upf),
                                         opts_.placement.zone_of(VnfKind::Upf)));
  upf_ = static_cast<vnf::UpfApp*>(nodes_.at(VnfKind::Upf).app.get());
  add_node(VnfKind::Smf,
           std::make_unique<vnf::SmfApp>(*env_, make_channel(VnfKind::Smf),
                                         opts_.placement.zone_of(VnfKind::Smf)));
  smf_ = static_cast<vnf::SmfApp*>(nodes_.at(VnfKind::Smf).app.get());
  add_node(VnfKind::Amf,
           std::make_unique<vnf::AmfApp>(*env_, make_channel(VnfKind::Amf),
                                         opts_.placement.zone_of(VnfKind::Amf), *smf_));
  amf_ = static_cast<vnf::AmfApp*>(nodes_.at(VnfKind::Amf).app.get());
  add_node(VnfKind::UeGnb, std::make_unique<vnf::GnbSimApp>(*amf_));
  gnbsim_ = static_cast<vnf::GnbSimApp*>(nodes_.at(VnfKind::UeGnb).app.get());
}

SimWorld::~SimWorld() = default;

NetAddr SimWorld::app_addr(VnfKind kind) const { return {sim_host(kind), kSimAppPort}; }

NetAddr SimWorld::sidecar_addr(VnfKind kind) const {
  return {sim_host(kind), scp::default_sidecar_port(kSimAppPort)};
}

std::unique_ptr<vnf::Channel> SimWorld::make_channel(VnfKind kind) {
  vnf::HopObserver observer;
  if (opts_.record_hops) {
    observer = [this](const vnf::HopObservation& h) {
      std::lock_guard<std::mutex> lk(hop_mutex_);
      hop_log_.push_back(h);
    };
  }
  return std::make_unique<vnf::Channel>(*env_, sidecar_addr(kind),
                                        channel_timeout(opts_.hop_deadline_us),
                                        std::move(observer));
}

void SimWorld::add_node(VnfKind kind, std::unique_ptr<vnf::VnfApp> app) {
  Node node;
  node.app = std::move(app);
  node.host = std::make_unique<vnf::VnfHost>(*node.app, processing_us_, *env_);

  scp::RouteTable routes;
  for (VnfKind k : kAllVnfKinds) {
    routes.add(scp::Route{k, sidecar_addr(k), kSimAppPort, opts_.placement.zone_of(k)});
  }
  scp::SidecarConfig cfg;
  cfg.own_vnf = kind;
  cfg.own_zone = opts_.placement.zone_of(kind);
  cfg.app_addr = app_addr(kind);
  cfg.passthrough = opts_.passthrough;
  cfg.hop_deadline_us = opts_.hop_deadline_us;
  node.sidecar = std::make_unique<scp::Sidecar>(cfg, std::move(routes), *env_, *delays_,
                                                processing_us_, sink_.get());

  net_.add(app_addr(kind), node.host.get());
  net_.add(sidecar_addr(kind), node.sidecar.get());
  nodes_[kind] = std::move(node);
}

void SimWorld::boot() {
  bool ok = run_blocking([](SimWorld* w) -> Task<bool> {
    bool a = co_await w->amf_->register_with_nrf();
    bool s = co_await w->smf_->register_with_nrf();
    bool u = co_await w->upf_->register_with_nrf();
    co_return a && s && u;
  }(this));
  drain();
  if (!ok) throw Error("BootFailed", "NRF registration did not complete");
}

vnf::GnbSimApp::RunSummary SimWorld::run_ues(int ue_count, bool concurrent) {
  auto summary = run_blocking(gnbsim_->run(*env_, ue_count, concurrent));
  drain();
  return summary;
}

void SimWorld::drain() { sched_.run_until_idle(); }

void SimWorld::stop_vnf(VnfKind kind) {
  net_.set_up(app_addr(kind), false);
  net_.set_up(sidecar_addr(kind), false);
}

telemetry::PipelineCounters SimWorld::counters() const {
  telemetry::PipelineCounters c;
  c.emitted = sink_->emitted();
  c.dropped = 0;
  c.rejected = agent_->rejected();
  c.stored = store_->stored();
  c.deduplicated = store_->deduplicated();
  return c;
}

vnf::NrfRegistry& SimWorld::nrf_registry() { return nrf_->registry(); }

void SimWorld::run_heartbeat_rounds(int rounds, int64_t period_us) {
  struct Beat {
    std::string id;
  };
  const std::vector<std::string> instances = {"amf-1", "smf-1", "upf-1"};
  for (int r = 1; r <= rounds; ++r) {
    sched_.schedule_at(sched_.now_us() + r * period_us, [this, instances] {
      for (const auto& id : instances) {
        nrf_->registry().heartbeat(id, nlohmann::json::object(), sched_.now_us());
      }
    });
  }
  drain();
}

// ---------------------------------------------------------------------------
// WallWorld

WallWorld::WallWorld(WorldOptions opts) : opts_(std::move(opts)) {
  env_ = std::make_unique<WallEnv>(mix_seed(opts_.seed, 0x77));
  delays_ = std::make_unique<netem::DelaySampler>(opts_.topology, opts_.delay_mode);
  processing_us_ = opts_.processing.expand();

  if (opts_.store_path.empty()) {
    store_ = std::make_unique<telemetry::SpanStore>("wall");
  } else {
    store_ = std::make_unique<telemetry::SpanStore>(
        telemetry::SpanStore::open(opts_.store_path, "wall"));
  }
  collector_ = std::make_unique<telemetry::Collector>(*store_);
  collector_ep_ = std::make_unique<telemetry::CollectorEndpoint>(*collector_, *store_);
  collector_server_ = std::make_unique<WallServer>(*collector_ep_, opts_.wall_host);
  collector_server_->start();

  // The agent forwards to the collector over its HTTP surface, mirroring the
  // node-level / cluster-level split.
  NetAddr collector_at = collector_server_->addr();
  WallEnv* env = env_.get();
  agent_ = std::make_unique<telemetry::Agent>(
      [env, collector_at](const std::vector<telemetry::Span>& spans) {
        HttpRequest req;
        req.method = "POST";
        req.target = "/spans";
        req.body = telemetry::spans_to_ndjson(spans);
        HttpResponse resp = sync_wait([](WallEnv* e, NetAddr to, HttpRequest r) -> Task<HttpResponse> {
          co_return co_await e->round_trip(to, std::move(r), 10'000'000);
        }(env, collector_at, std::move(req)));
        if (!resp.transport_ok() || resp.status >= 400) {
          throw Error("StoreUnavailable", "collector did not accept spans");
        }
      });
  agent_ep_ = std::make_unique<telemetry::AgentEndpoint>(*agent_);
  agent_server_ = std::make_unique<WallServer>(*agent_ep_, opts_.wall_host);
  agent_server_->start();

  add_node(VnfKind::Nrf, std::make_unique<vnf::NrfApp>(*env_, nullptr));
  nrf_ = static_cast<vnf::NrfApp*>(nodes_.at(VnfKind::Nrf).app.get());
  add_node(VnfKind::Ausf, std::make_unique<vnf::AusfApp>(*env_, nullptr));
  add_node(VnfKind::Udm, std::make_unique<vnf::UdmApp>(*env_, nullptr));
  add_node(VnfKind::Udr, std::make_unique<vnf::UdrApp>());
  add_node(VnfKind::Upf, std::make_unique<vnf::UpfApp>(nullptr,
                                                       opts_.placement.zone_of(VnfKind::Upf)));
  add_node(VnfKind::Smf, std::make_unique<vnf::SmfApp>(*env_, nullptr,
                                                       opts_.placement.zone_of(VnfKind::Smf)));
  smf_ = static_cast<vnf::SmfApp*>(nodes_.at(VnfKind::Smf).app.get());
  add_node(VnfKind::Amf,
           std::make_unique<vnf::AmfApp>(*env_, nullptr,
                                         opts_.placement.zone_of(VnfKind::Amf), *smf_));
  amf_ = static_cast<vnf::AmfApp*>(nodes_.at(VnfKind::Amf).app.get());
  add_node(VnfKind::UeGnb, std::make_unique<vnf::GnbSimApp>(*amf_));
  gnbsim_ = static_cast<vnf::GnbSimApp*>(nodes_.at(VnfKind::UeGnb).app.get());

  // Everything is bound and listening: build the real route table, hand it to
  // the sidecars, and give each application its outbound channel.
  scp::RouteTable routes;
  for (auto& [kind, node] : nodes_) {
    routes.add(scp::Route{kind, node.sidecar_server->addr(),
                          node.app_server->addr().port, opts_.placement.zone_of(kind)});
  }
  routes.validate();
  for (auto& [kind, node] : nodes_) {
    node.sidecar->set_routes(routes);
    node.sidecar->set_app_addr(node.app_server->addr());
    vnf::Channel* chan = nullptr;
    switch (kind) {
      case VnfKind::Nrf: chan = nrf_->set_channel(make_channel(kind)); break;
      case VnfKind::Ausf:
        chan = static_cast<vnf::AusfApp*>(node.app.get())->set_channel(make_channel(kind));
        break;
      case VnfKind::Udm:
        chan = static_cast<vnf::UdmApp*>(node.app.get())->set_channel(make_channel(kind));
        break;
      case VnfKind::Upf:
        chan = static_cast<vnf::UpfApp*>(node.app.get())->set_channel(make_channel(kind));
        break;
      case VnfKind::Smf: chan = smf_->set_channel(make_channel(kind)); break;
      case VnfKind::Amf: chan = amf_->set_channel(make_channel(kind)); break;
      default: break;
    }
    (void)chan;
  }
}

WallWorld::~WallWorld() {
  for (auto& [kind, node] : nodes_) {
    if (node.emitter) node.emitter->stop();
  }
}

std::unique_ptr<vnf::Channel> WallWorld::make_channel(VnfKind kind) {
  vnf::HopObserver observer;
  if (opts_.record_hops) {
    observer = [this](const vnf::HopObservation& h) {
      std::lock_guard<std::mutex> lk(hop_mutex_);
      hop_log_.push_back(h);
    };
  }
  return std::make_unique<vnf::Channel>(*env_, nodes_.at(kind).sidecar_server->addr(),
                                        channel_timeout(opts_.hop_deadline_us),
                                        std::move(observer));
}

void WallWorld::add_node(VnfKind kind, std::unique_ptr<vnf::VnfApp> app) {
  Node node;
  node.app = std::move(app);
  node.host = std::make_unique<vnf::VnfHost>(*node.app, processing_us_, *env_);
  node.app_server = std::make_unique<WallServer>(*node.host, opts_.wall_host);
  node.app_server->start();

  NetAddr agent_at = agent_server_->addr();
  WallEnv* env = env_.get();
  node.emitter = std::make_unique<scp::BufferedEmitter>(
      4096, [env, agent_at](const std::vector<telemetry::Span>& spans) {
        HttpRequest req;
        req.method = "POST";
        req.target = "/ingest";
        req.body = telemetry::spans_to_ndjson(spans);
        HttpResponse resp = sync_wait([](WallEnv* e, NetAddr to, HttpRequest r) -> Task<HttpResponse> {
          co_return co_await e->round_trip(to, std::move(r), 10'000'000);
        }(env, agent_at, std::move(req)));
        // 400 means the agent rejected the batch (already counted there);
        // re-queueing it would never succeed.
        return resp.transport_ok();
      });
  node.emitter->start_background(10'000);

  scp::SidecarConfig cfg;
  cfg.own_vnf = kind;
  cfg.own_zone = opts_.placement.zone_of(kind);
  cfg.app_addr = node.app_server->addr();
  cfg.passthrough = opts_.passthrough;
  cfg.hop_deadline_us = opts_.hop_deadline_us;
  node.sidecar = std::make_unique<scp::Sidecar>(cfg, scp::RouteTable{}, *env_, *delays_,
                                                processing_us_, node.emitter.get());
  node.sidecar_server = std::make_unique<WallServer>(*node.sidecar, opts_.wall_host);
  node.sidecar_server->start();

  nodes_[kind] = std::move(node);
}

void WallWorld::boot() {
  bool a = sync_wait(amf_->register_with_nrf());
  bool s = sync_wait(smf_->register_with_nrf());
  bool u = sync_wait(
      static_cast<vnf::UpfApp*>(nodes_.at(VnfKind::Upf).app.get())->register_with_nrf());
  drain();
  if (!(a && s && u)) throw Error("BootFailed", "NRF registration did not complete");
}

vnf::GnbSimApp::RunSummary WallWorld::run_ues(int ue_count, bool concurrent) {
  auto summary = sync_wait(gnbsim_->run(*env_, ue_count, concurrent));
  drain();
  return summary;
}

void WallWorld::drain() {
  env_->drain();
  for (auto& [kind, node] : nodes_) {
    if (node.emitter) node.emitter->flush();
  }
}

void WallWorld::stop_vnf(VnfKind kind) {
  auto& node = nodes_.at(kind);
  if (node.app_server) node.app_server->stop();
  if (node.sidecar_server) node.sidecar_server->stop();
}

telemetry::PipelineCounters WallWorld::counters() const {
  telemetry::PipelineCounters c;
  for (const auto& [kind, node] : nodes_) {
    c.emitted += node.emitter->emitted();
    c.dropped += node.emitter->dropped();
  }
  c.rejected = agent_->rejected();
  c.stored = store_->stored();
  c.deduplicated = store_->deduplicated();
  return c;
}

vnf::NrfRegistry& WallWorld::nrf_registry() { return nrf_->registry(); }

NetAddr WallWorld::collector_addr() const { return collector_server_->addr(); }
NetAddr WallWorld::agent_addr() const { return agent_server_->addr(); }

std::unique_ptr<World> make_world(ClockKind clock, WorldOptions opts) {
  if (clock == ClockKind::Virtual) return std::make_unique<SimWorld>(std::move(opts));
  return std::make_unique<WallWorld>(std::move(opts));
}

}  // namespace coresim
