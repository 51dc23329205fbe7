#include "coresim/net.hpp"

#include <chrono>

#include "httplib.h"

#include <cstdio>

namespace coresim {

Task<void> guard_task(Task<void> t) {
  try {
    co_await std::move(t);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "coresim: background task failed: %s\n", e.what());
  } catch (...) {
    std::fprintf(stderr, "coresim: background task failed\n");
  }
}

void SimNet::add(const NetAddr& addr, Endpoint* ep) { endpoints_[addr.str()] = Entry{ep, true}; }

void SimNet::set_up(const NetAddr& addr, bool up) {
  auto it = endpoints_.find(addr.str());
  if (it != endpoints_.end()) it->second.up = up;
}

Endpoint* SimNet::find(const NetAddr& addr) const {
  auto it = endpoints_.find(addr.str());
  return it == endpoints_.end() ? nullptr : it->second.ep;
}

bool SimNet::is_up(const NetAddr& addr) const {
  auto it = endpoints_.find(addr.str());
  return it != endpoints_.end() && it->second.up;
}

Async<Unit> SimEnv::sleep_us(int64_t us) {
  return Async<Unit>([this, us](Async<Unit>::Callback cb) {
    sched_.schedule_in(us, [cb = std::move(cb)] { cb(Unit{}); });
  });
}

namespace {

// A handler exception becomes a 500 instead of unwinding into the scheduler.
Task<HttpResponse> serve_guarded(Endpoint* ep, HttpRequest req) {
  try {
    co_return co_await ep->serve(std::move(req));
  } catch (const std::exception& e) {
    HttpResponse r;
    r.status = 500;
    r.body = std::string("{\"error\":\"InternalError\",\"message\":\"") + e.what() + "\"}";
    co_return r;
  }
}

}  // namespace

Async<HttpResponse> SimEnv::round_trip(const NetAddr& to, HttpRequest req, int64_t timeout_us) {
  return Async<HttpResponse>(
      [this, to, req = std::move(req), timeout_us](Async<HttpResponse>::Callback cb) mutable {
        sched_.schedule_in(0, [this, to, req = std::move(req), timeout_us,
                               cb = std::move(cb)]() mutable {
          Endpoint* ep = net_.find(to);
          if (!ep) {
            cb(HttpResponse::transport_failure("refused"));
            return;
          }
          if (!net_.is_up(to)) {
            // A stopped endpoint never answers; the caller's deadline elapses.
            sched_.schedule_in(timeout_us,
                               [cb = std::move(cb)] { cb(HttpResponse::transport_failure("timeout")); });
            return;
          }
          start_with_callback<HttpResponse>(
              serve_guarded(ep, std::move(req)), [this, cb = std::move(cb)](HttpResponse r) {
                sched_.schedule_in(0, [cb, r = std::move(r)] { cb(r); });
              });
        });
      });
}

void SimEnv::spawn(Task<> t) {
  auto holder = std::make_shared<Task<>>(guard_task(std::move(t)));
  sched_.schedule_in(0, [holder] { start_detached(std::move(*holder)); });
}

void TaskGroup::spawn(Task<> t) {
  {
    std::lock_guard<std::mutex> lk(mutex_);
    ++active_;
  }
  auto holder = std::make_shared<Task<>>(guard_task(std::move(t)));
  std::thread([this, holder] {
    sync_wait(std::move(*holder));
    {
      std::lock_guard<std::mutex> lk(mutex_);
      --active_;
    }
    cv_.notify_all();
  }).detach();
}

void TaskGroup::drain() {
  std::unique_lock<std::mutex> lk(mutex_);
  cv_.wait(lk, [&] { return active_ == 0; });
}

int64_t WallEnv::now_us() {
  using namespace std::chrono;
  static const steady_clock::time_point kEpoch = steady_clock::now();
  return duration_cast<microseconds>(steady_clock::now() - kEpoch).count();
}

Async<Unit> WallEnv::sleep_us(int64_t us) {
  return Async<Unit>([us](Async<Unit>::Callback cb) {
    if (us > 0) std::this_thread::sleep_for(std::chrono::microseconds(us));
    cb(Unit{});
  });
}

Async<HttpResponse> WallEnv::round_trip(const NetAddr& to, HttpRequest req, int64_t timeout_us) {
  return Async<HttpResponse>([to, req = std::move(req),
                              timeout_us](Async<HttpResponse>::Callback cb) mutable {
    httplib::Client cli(to.host, to.port);
    cli.set_connection_timeout(std::chrono::seconds(5));
    cli.set_read_timeout(std::chrono::microseconds(timeout_us));
    httplib::Request hreq;
    hreq.method = req.method;
    hreq.path = req.target;
    for (const auto& [k, v] : req.headers) hreq.set_header(k, v);
    if (!req.body.empty()) {
      hreq.body = req.body;
      if (!req.headers.count("Content-Type")) hreq.set_header("Content-Type", "application/json");
    }
    auto result = cli.send(hreq);
    if (!result) {
      const bool timed_out = result.error() == httplib::Error::Read ||
                             result.error() == httplib::Error::ConnectionTimeout;
      cb(HttpResponse::transport_failure(timed_out ? "timeout" : "refused"));
      return;
    }
    HttpResponse resp;
    resp.status = result->status;
    for (const auto& [k, v] : result->headers) resp.headers[k] = v;
    resp.body = result->body;
    cb(std::move(resp));
  });
}

struct WallServer::Impl {
  Endpoint& endpoint;
  std::string host;
  httplib::Server server;
  std::thread thread;

  explicit Impl(Endpoint& ep, std::string h) : endpoint(ep), host(std::move(h)) {}

  void handle(const httplib::Request& hreq, httplib::Response& hres) {
    HttpRequest req;
    req.method = hreq.method;
    req.target = hreq.target.empty() ? hreq.path : hreq.target;
    for (const auto& [k, v] : hreq.headers) {
      if (k == "REMOTE_ADDR" || k == "REMOTE_PORT" || k == "LOCAL_ADDR" || k == "LOCAL_PORT") {
        continue;
      }
      req.headers[k] = v;
    }
    req.body = hreq.body;
    HttpResponse resp = sync_wait(endpoint.serve(std::move(req)));
    hres.status = resp.status == 0 ? 502 : resp.status;
    auto iequal = [](const std::string& a, const char* b) {
      CaseInsensitiveLess less;
      return !less(a, b) && !less(std::string(b), a);
    };
    std::string content_type = "application/json";
    for (const auto& [k, v] : resp.headers) {
      if (iequal(k, "Content-Type")) {
        content_type = v;
      } else if (!iequal(k, "Content-Length")) {
        hres.set_header(k, v);
      }
    }
    hres.set_content(resp.body, content_type);
  }
};

WallServer::WallServer(Endpoint& ep, const std::string& host)
    : impl_(std::make_unique<Impl>(ep, host)) {
  auto bound = [this](const httplib::Request& rq, httplib::Response& rs) { impl_->handle(rq, rs); };
  const std::string any = ".*";
  impl_->server.Get(any, bound);
  impl_->server.Post(any, bound);
  impl_->server.Put(any, bound);
  impl_->server.Patch(any, bound);
  impl_->server.Delete(any, bound);
}

WallServer::~WallServer() { stop(); }

void WallServer::start() {
  int port = impl_->server.bind_to_any_port(impl_->host);
  if (port <= 0) throw Error("BindFailed", "cannot bind a listener on " + impl_->host);
  addr_ = NetAddr{impl_->host, static_cast<uint16_t>(port)};
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void WallServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
  if (impl_ && impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace coresim
