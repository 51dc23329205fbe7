#include <vector>

#include "coresim/async.hpp"
#include "coresim/net.hpp"
#include "coresim/netem.hpp"

#include "doctest.h"

using namespace coresim;

namespace {

struct EchoEndpoint : Endpoint {
  SimEnv& env;
  int64_t delay_us;

  EchoEndpoint(SimEnv& e, int64_t d) : env(e), delay_us(d) {}

  Task<HttpResponse> serve(HttpRequest req) override {
    co_await env.sleep_us(delay_us);
    HttpResponse r;
    r.status = 200;
    r.body = "echo:" + req.body;
    co_return r;
  }
};

}  // namespace

TEST_CASE("virtual sleeps interleave deterministically") {
  netem::VirtualScheduler sched;
  SimNet net;
  SimEnv env(sched, net, 1);
  std::vector<std::pair<int, int64_t>> log;

  auto flow = [](SimEnv& e, int id, int64_t a, int64_t b,
                 std::vector<std::pair<int, int64_t>>& out) -> Task<> {
    co_await e.sleep_us(a);
    out.emplace_back(id, e.now_us());
    co_await e.sleep_us(b);
    out.emplace_back(id, e.now_us());
  };

  env.spawn(flow(env, 1, 5, 7, log));
  env.spawn(flow(env, 2, 3, 2, log));
  sched.run_until_idle();

  REQUIRE(log.size() == 4);
  CHECK(log[0] == std::pair<int, int64_t>{2, 3});
  // Both wake at t=5; flow 1's wakeup was inserted first, so it runs first.
  CHECK(log[1] == std::pair<int, int64_t>{1, 5});
  CHECK(log[2] == std::pair<int, int64_t>{2, 5});
  CHECK(log[3] == std::pair<int, int64_t>{1, 12});
}

TEST_CASE("sim round trip reaches an endpoint and resumes the caller") {
  netem::VirtualScheduler sched;
  SimNet net;
  SimEnv env(sched, net, 1);
  EchoEndpoint ep(env, 250);
  net.add({"echo", 80}, &ep);

  std::optional<HttpResponse> got;
  int64_t finished_at = -1;
  auto driver = [](SimEnv& e, std::optional<HttpResponse>& out, int64_t& at) -> Task<> {
    HttpRequest req;
    req.method = "POST";
    req.target = "/x";
    req.body = "hi";
    out = co_await e.round_trip({"echo", 80}, std::move(req), 1'000'000);
    at = e.now_us();
  };
  env.spawn(driver(env, got, finished_at));
  sched.run_until_idle();

  REQUIRE(got.has_value());
  CHECK(got->status == 200);
  CHECK(got->body == "echo:hi");
  CHECK(finished_at == 250);
}

TEST_CASE("round trip to an unknown address refuses; to a downed one times out") {
  netem::VirtualScheduler sched;
  SimNet net;
  SimEnv env(sched, net, 1);
  EchoEndpoint ep(env, 10);
  net.add({"echo", 80}, &ep);
  net.set_up({"echo", 80}, false);

  std::optional<HttpResponse> refused, timed_out;
  int64_t timeout_at = -1;
  auto driver = [](SimEnv& e, std::optional<HttpResponse>& r1, std::optional<HttpResponse>& r2,
                   int64_t& at) -> Task<> {
    r1 = co_await e.round_trip({"nowhere", 1}, HttpRequest{"GET", "/", {}, ""}, 500);
    r2 = co_await e.round_trip({"echo", 80}, HttpRequest{"GET", "/", {}, ""}, 500);
    at = e.now_us();
  };
  env.spawn(driver(env, refused, timed_out, timeout_at));
  sched.run_until_idle();

  REQUIRE(refused.has_value());
  CHECK_FALSE(refused->transport_ok());
  CHECK(*refused->header("x-transport-error") == "refused");
  REQUIRE(timed_out.has_value());
  CHECK(*timed_out->header("x-transport-error") == "timeout");
  CHECK(timeout_at == 500);
}

TEST_CASE("oneshot delivers a value set before and after the wait") {
  netem::VirtualScheduler sched;
  SimNet net;
  SimEnv env(sched, net, 1);

  auto gate = std::make_shared<OneShot<int>>();
  std::optional<int> got;
  auto waiter = [](SimEnv& e, std::shared_ptr<OneShot<int>> g, std::optional<int>& out) -> Task<> {
    auto v = co_await g->wait(e, 10'000);
    out = v ? *v : -1;
  };

  SUBCASE("set after wait") {
    env.spawn(waiter(env, gate, got));
    sched.schedule_in(100, [&] { gate->set(env, 42); });
    sched.run_until_idle();
    CHECK(got == 42);
  }
  SUBCASE("set before wait") {
    gate->set(env, 7);
    env.spawn(waiter(env, gate, got));
    sched.run_until_idle();
    CHECK(got == 7);
  }
  SUBCASE("deadline elapses") {
    env.spawn(waiter(env, gate, got));
    sched.run_until_idle();
    CHECK(got == -1);
    CHECK(sched.now_us() == 10'000);
  }
}

TEST_CASE("wall env completes awaits inline") {
  WallEnv env(1);
  auto t = [](WallEnv& e) -> Task<int> {
    co_await e.sleep_us(100);
    co_return 99;
  };
  CHECK(sync_wait(t(env)) == 99);
  env.drain();
}

TEST_CASE("task exceptions propagate through sync_wait") {
  WallEnv env(1);
  auto t = [](WallEnv&) -> Task<int> {
    throw Error("Boom", "intentional");
    co_return 0;
  };
  CHECK_THROWS_AS(sync_wait(t(env)), Error);
}
