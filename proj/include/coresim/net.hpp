#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "coresim/async.hpp"
#include "coresim/http.hpp"
#include "coresim/netem.hpp"
#include "coresim/rng.hpp"

namespace coresim {

// Anything that can serve an HTTP request.
class Endpoint {
 public:
  virtual ~Endpoint() = default;
  virtual Task<HttpResponse> serve(HttpRequest req) = 0;
};

// Execution context handed to every component: a clock, timed waits,
// request/response transport, detached task spawning and an id source.
// Virtual-time and wall-clock implementations share this surface so the
// VNFs, sidecars and drivers are written once.
class Env {
 public:
  virtual ~Env() = default;
  virtual int64_t now_us() = 0;
  virtual Async<Unit> sleep_us(int64_t us) = 0;
  virtual Async<HttpResponse> round_trip(const NetAddr& to, HttpRequest req,
                                         int64_t timeout_us) = 0;
  virtual void spawn(Task<> t) = 0;
  virtual uint64_t next_id() = 0;
  // True when awaits may block the calling thread (wall mode); virtual-time
  // code must instead park on the scheduler.
  virtual bool blocking_waits() = 0;
};

// ---------------------------------------------------------------------------
// Virtual-time implementation: a single-threaded event world. Endpoints are
// registered under synthetic addresses; a request to a stopped endpoint
// times out after `timeout_us` of virtual time, an unknown address refuses.

class SimNet {
 public:
  void add(const NetAddr& addr, Endpoint* ep);
  void set_up(const NetAddr& addr, bool up);
  Endpoint* find(const NetAddr& addr) const;
  bool is_up(const NetAddr& addr) const;

 private:
  struct Entry {
    Endpoint* ep;
    bool up = true;
  };
  std::map<std::string, Entry> endpoints_;
};

class SimEnv : public Env {
 public:
  SimEnv(netem::VirtualScheduler& sched, SimNet& net, uint64_t seed)
      : sched_(sched), net_(net), rng_(seed) {}

  int64_t now_us() override { return sched_.now_us(); }
  Async<Unit> sleep_us(int64_t us) override;
  Async<HttpResponse> round_trip(const NetAddr& to, HttpRequest req,
                                 int64_t timeout_us) override;
  void spawn(Task<> t) override;
  uint64_t next_id() override { return rng_.next_nonzero_u64(); }
  bool blocking_waits() override { return false; }

  netem::VirtualScheduler& scheduler() { return sched_; }

 private:
  netem::VirtualScheduler& sched_;
  SimNet& net_;
  Rng rng_;
};

// ---------------------------------------------------------------------------
// Wall-clock implementation: timed waits sleep the thread, transport is real
// HTTP over loopback, spawned tasks run on detached worker threads that the
// owner joins via drain().

class TaskGroup {
 public:
  ~TaskGroup() { drain(); }
  void spawn(Task<> t);
  void drain();

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  int active_ = 0;
};

class WallEnv : public Env {
 public:
  explicit WallEnv(uint64_t seed) : rng_(seed) {}

  int64_t now_us() override;
  Async<Unit> sleep_us(int64_t us) override;
  Async<HttpResponse> round_trip(const NetAddr& to, HttpRequest req,
                                 int64_t timeout_us) override;
  void spawn(Task<> t) override { group_.spawn(std::move(t)); }
  uint64_t next_id() override {
    std::lock_guard<std::mutex> lk(mutex_);
    return rng_.next_nonzero_u64();
  }
  bool blocking_waits() override { return true; }

  void drain() { group_.drain(); }

 private:
  Rng rng_;
  std::mutex mutex_;
  TaskGroup group_;
};

// Bridges an Endpoint onto a real HTTP listener (one server per endpoint).
class WallServer {
 public:
  WallServer(Endpoint& ep, const std::string& host);
  ~WallServer();

  void start();
  void stop();
  NetAddr addr() const { return addr_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  NetAddr addr_;
};

// Single-consumer completion event with a deadline. In wall mode the waiter
// blocks on a condition variable; in virtual time it parks on the scheduler.
template <typename T>
class OneShot {
 public:
  void set(Env& env, T value) {
    std::function<void(std::optional<T>)> waiter;
    {
      std::lock_guard<std::mutex> lk(mutex_);
      if (value_ || delivered_) return;
      value_ = std::move(value);
      cv_.notify_all();
      if (waiter_ && !delivered_) {
        delivered_ = true;
        waiter = std::move(waiter_);
        waiter_ = nullptr;
      }
    }
    if (waiter) {
      // Resume in a fresh scheduler frame so the setter finishes first.
      auto v = *value_;
      env.spawn([](std::function<void(std::optional<T>)> w, T val) -> Task<> {
        w(std::move(val));
        co_return;
      }(std::move(waiter), std::move(v)));
    }
  }

  Async<std::optional<T>> wait(Env& env, int64_t deadline_us) {
    if (env.blocking_waits()) {
      return Async<std::optional<T>>([this, deadline_us](auto cb) {
        std::unique_lock<std::mutex> lk(mutex_);
        cv_.wait_for(lk, std::chrono::microseconds(deadline_us), [&] { return !!value_; });
        std::optional<T> v = value_;
        if (v) delivered_ = true;
        lk.unlock();
        cb(std::move(v));
      });
    }
    return Async<std::optional<T>>([this, &env, deadline_us](auto cb) {
      std::lock_guard<std::mutex> lk(mutex_);
      if (value_) {
        delivered_ = true;
        cb(value_);
        return;
      }
      waiter_ = cb;
      env.sleep_us(deadline_us).start([this, cb](Unit) {
        std::lock_guard<std::mutex> lk2(mutex_);
        if (!delivered_ && waiter_) {
          delivered_ = true;
          waiter_ = nullptr;
          cb(std::nullopt);
        }
      });
    });
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  std::optional<T> value_;
  std::function<void(std::optional<T>)> waiter_;
  bool delivered_ = false;
};

}  // namespace coresim
