#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "coresim/model.hpp"
#include "coresim/net.hpp"
#include "coresim/netem.hpp"
#include "coresim/scp.hpp"
#include "coresim/telemetry.hpp"
#include "coresim/telemetry_http.hpp"
#include "coresim/vnf.hpp"

namespace coresim {

enum class ClockKind { Virtual, Wall };

inline std::string to_string(ClockKind c) { return c == ClockKind::Virtual ? "virtual" : "wall"; }

struct WorldOptions {
  Placement placement;
  netem::Topology topology;
  netem::DelayMode delay_mode = netem::DelayMode::p50();
  vnf::ProcessingModel processing;
  uint64_t seed = 1;
  bool passthrough = false;
  int64_t hop_deadline_us = 5'000'000;
  std::string store_path;  // empty -> in-memory store
  bool record_hops = false;
  std::string wall_host = "127.0.0.1";
};

// One booted deployment: the eight VNFs behind their sidecars, the telemetry
// pipeline, and the emulated network between zones. Owns one run's lifetime.
class World {
 public:
  virtual ~World() = default;

  // Registers the AMF, SMF and UPF with the NRF, in that order.
  virtual void boot() = 0;

  virtual vnf::GnbSimApp::RunSummary run_ues(int ue_count, bool concurrent) = 0;

  // Waits for in-flight continuations and telemetry to settle.
  virtual void drain() = 0;

  virtual void stop_vnf(VnfKind kind) = 0;

  virtual telemetry::SpanStore& store() = 0;
  virtual telemetry::PipelineCounters counters() const = 0;

  virtual vnf::AmfApp& amf() = 0;
  virtual vnf::NrfRegistry& nrf_registry() = 0;

  const std::vector<vnf::HopObservation>& hop_log() const { return hop_log_; }

 protected:
  std::vector<vnf::HopObservation> hop_log_;
  std::mutex hop_mutex_;
};

class SimWorld : public World {
 public:
  explicit SimWorld(WorldOptions opts);
  ~SimWorld() override;

  void boot() override;
  vnf::GnbSimApp::RunSummary run_ues(int ue_count, bool concurrent) override;
  void drain() override;
  void stop_vnf(VnfKind kind) override;

  telemetry::SpanStore& store() override { return *store_; }
  telemetry::PipelineCounters counters() const override;

  vnf::AmfApp& amf() override { return *amf_; }
  vnf::NrfRegistry& nrf_registry() override;

  netem::VirtualScheduler& scheduler() { return sched_; }
  SimEnv& env() { return *env_; }
  scp::Sidecar& sidecar(VnfKind kind) { return *nodes_.at(kind).sidecar; }
  vnf::SmfApp& smf() { return *smf_; }
  vnf::UpfApp& upf() { return *upf_; }
  vnf::GnbSimApp& gnbsim() { return *gnbsim_; }

  // Issues direct heartbeats from the AMF, SMF and UPF every period for the
  // given number of rounds of virtual time.
  void run_heartbeat_rounds(int rounds, int64_t period_us = 10'000'000);

  // Drives the scheduler until the task completes; rethrows its exception.
  template <typename T>
  T run_blocking(Task<T> t) {
    std::optional<T> result;
    std::exception_ptr error;
    auto wrapper = [](Task<T> task, std::optional<T>& out, std::exception_ptr& err) -> Task<> {
      try {
        out = co_await std::move(task);
      } catch (...) {
        err = std::current_exception();
      }
    };
    start_detached(wrapper(std::move(t), result, error));
    sched_.run_until([&] { return result.has_value() || error != nullptr; });
    if (error) std::rethrow_exception(error);
    return std::move(*result);
  }

 private:
  struct Node {
    std::unique_ptr<vnf::VnfApp> app;
    std::unique_ptr<vnf::VnfHost> host;
    std::unique_ptr<scp::Sidecar> sidecar;
  };

  void add_node(VnfKind kind, std::unique_ptr<vnf::VnfApp> app);
  std::unique_ptr<vnf::Channel> make_channel(VnfKind kind);
  NetAddr app_addr(VnfKind kind) const;
  NetAddr sidecar_addr(VnfKind kind) const;

  WorldOptions opts_;
  netem::VirtualScheduler sched_;
  SimNet net_;
  std::unique_ptr<SimEnv> env_;
  std::unique_ptr<netem::DelaySampler> delays_;
  std::map<std::pair<VnfKind, std::string>, int64_t> processing_us_;

  std::unique_ptr<telemetry::SpanStore> store_;
  std::unique_ptr<telemetry::Collector> collector_;
  std::unique_ptr<telemetry::Agent> agent_;

  class Sink;
  std::unique_ptr<Sink> sink_;

  std::map<VnfKind, Node> nodes_;
  vnf::AmfApp* amf_ = nullptr;
  vnf::SmfApp* smf_ = nullptr;
  vnf::GnbSimApp* gnbsim_ = nullptr;
  vnf::NrfApp* nrf_ = nullptr;
  vnf::UpfApp* upf_ = nullptr;
};

class WallWorld : public World {
 public:
  explicit WallWorld(WorldOptions opts);
  ~WallWorld() override;

  void boot() override;
  vnf::GnbSimApp::RunSummary run_ues(int ue_count, bool concurrent) override;
  void drain() override;
  void stop_vnf(VnfKind kind) override;

  telemetry::SpanStore& store() override { return *store_; }
  telemetry::PipelineCounters counters() const override;

  vnf::AmfApp& amf() override { return *amf_; }
  vnf::NrfRegistry& nrf_registry() override;

  NetAddr collector_addr() const;
  NetAddr agent_addr() const;

 private:
  struct Node {
    std::unique_ptr<vnf::VnfApp> app;
    std::unique_ptr<vnf::VnfHost> host;
    std::unique_ptr<scp::Sidecar> sidecar;
    std::unique_ptr<WallServer> app_server;
    std::unique_ptr<WallServer> sidecar_server;
    std::unique_ptr<scp::BufferedEmitter> emitter;
  };

  void add_node(VnfKind kind, std::unique_ptr<vnf::VnfApp> app);
  std::unique_ptr<vnf::Channel> make_channel(VnfKind kind);

  WorldOptions opts_;
  std::unique_ptr<WallEnv> env_;
  std::unique_ptr<netem::DelaySampler> delays_;
  std::map<std::pair<VnfKind, std::string>, int64_t> processing_us_;

  std::unique_ptr<telemetry::SpanStore> store_;
  std::unique_ptr<telemetry::Collector> collector_;
  std::unique_ptr<telemetry::Agent> agent_;
  std::unique_ptr<telemetry::CollectorEndpoint> collector_ep_;
  std::unique_ptr<telemetry::AgentEndpoint> agent_ep_;
  std::unique_ptr<WallServer> collector_server_;
  std::unique_ptr<WallServer> agent_server_;

  std::map<VnfKind, Node> nodes_;
  vnf::AmfApp* amf_ = nullptr;
  vnf::SmfApp* smf_ = nullptr;
  vnf::GnbSimApp* gnbsim_ = nullptr;
  vnf::NrfApp* nrf_ = nullptr;
};

std::unique_ptr<World> make_world(ClockKind clock, WorldOptions opts);

}  // namespace coresim
