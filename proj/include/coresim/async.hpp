#pragma once

#include <condition_variable>
#include <coroutine>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <type_traits>
#include <utility>

namespace coresim {

template <typename T>
struct Task;

namespace detail {

struct FinalAwaiter {
  bool await_ready() noexcept { return false; }
  template <typename P>
  std::coroutine_handle<> await_suspend(std::coroutine_handle<P> h) noexcept {
    auto c = h.promise().continuation;
    return c ? c : std::noop_coroutine();
  }
  void await_resume() noexcept {}
};

struct PromiseBase {
  std::coroutine_handle<> continuation;
  std::exception_ptr error;
  std::suspend_always initial_suspend() noexcept { return {}; }
  FinalAwaiter final_suspend() noexcept { return {}; }
  void unhandled_exception() { error = std::current_exception(); }
};

template <typename T>
struct Promise : PromiseBase {
  std::optional<T> value;
  Task<T> get_return_object();
  void return_value(T v) { value = std::move(v); }
};

template <>
struct Promise<void> : PromiseBase {
  Task<void> get_return_object();
  void return_void() {}
};

}  // namespace detail

// Lazy coroutine task: starts when awaited, resumes the awaiter on completion
// via symmetric transfer. Move-only; owns and destroys its frame.
template <typename T = void>
struct [[nodiscard]] Task {
  using promise_type = detail::Promise<T>;

  Task() = default;
  explicit Task(std::coroutine_handle<promise_type> h) : handle(h) {}
  Task(Task&& o) noexcept : handle(std::exchange(o.handle, {})) {}
  Task& operator=(Task&& o) noexcept {
    if (handle) handle.destroy();
    handle = std::exchange(o.handle, {});
    return *this;
  }
  Task(const Task&) = delete;
  Task& operator=(const Task&) = delete;
  ~Task() {
    if (handle) handle.destroy();
  }

  bool await_ready() const { return false; }
  std::coroutine_handle<> await_suspend(std::coroutine_handle<> cont) {
    handle.promise().continuation = cont;
    return handle;
  }
  T await_resume() {
    if (handle.promise().error) std::rethrow_exception(handle.promise().error);
    if constexpr (!std::is_void_v<T>) return std::move(*handle.promise().value);
  }

  std::coroutine_handle<promise_type> handle{};
};

namespace detail {
template <typename T>
Task<T> Promise<T>::get_return_object() {
  return Task<T>(std::coroutine_handle<Promise<T>>::from_promise(*this));
}
inline Task<void> Promise<void>::get_return_object() {
  return Task<void>(std::coroutine_handle<Promise<void>>::from_promise(*this));
}
}  // namespace detail

struct Unit {};

// One-shot operation yielding T. The starter may invoke the callback inline
// (wall-clock mode completes everything synchronously) or later from a
// scheduler event (virtual-time mode); the awaiter copes with both.
template <typename T>
class Async {
 public:
  using Callback = std::function<void(T)>;
  using Starter = std::function<void(Callback)>;

  explicit Async(Starter s) : start_(std::move(s)) {}

  // Begin the operation without awaiting (callback-style composition).
  void start(Callback cb) { start_(std::move(cb)); }

  struct Awaiter {
    Starter start;
    std::shared_ptr<std::optional<T>> result = std::make_shared<std::optional<T>>();

    bool await_ready() { return false; }
    bool await_suspend(std::coroutine_handle<> h) {
      // in_suspend distinguishes an inline completion from a genuinely
      // deferred one; shared state keeps the callback valid if the frame
      // is destroyed before a deferred completion fires.
      auto in_suspend = std::make_shared<bool>(true);
      auto completed_inline = std::make_shared<bool>(false);
      auto res = result;
      start([res, in_suspend, completed_inline, h](T v) {
        *res = std::move(v);
        if (*in_suspend) {
          *completed_inline = true;
        } else {
          h.resume();
        }
      });
      *in_suspend = false;
      return !*completed_inline;
    }
    T await_resume() { return std::move(**result); }
  };

  Awaiter operator co_await() && { return Awaiter{std::move(start_)}; }

 private:
  Starter start_;
};

namespace detail {
struct Detached {
  struct promise_type {
    Detached get_return_object() { return {}; }
    std::suspend_never initial_suspend() noexcept { return {}; }
    std::suspend_never final_suspend() noexcept { return {}; }
    void return_void() {}
    void unhandled_exception() { std::terminate(); }
  };
};

inline Detached run_detached(Task<void> t) { co_await std::move(t); }

template <typename T>
Detached run_into(Task<T> t, std::function<void(T)> done) {
  done(co_await std::move(t));
}
}  // namespace detail

// Fire-and-forget. The wrapper frame keeps the task alive until it finishes.
inline void start_detached(Task<void> t) { detail::run_detached(std::move(t)); }

// Containment for spawned background tasks: an escaped exception would
// otherwise terminate the process from the detached frame.
Task<void> guard_task(Task<void> t);

template <typename T>
void start_with_callback(Task<T> t, std::function<void(T)> done) {
  detail::run_into(std::move(t), std::move(done));
}

// Runs a task to completion on the calling thread. Only valid when every
// awaited operation either completes inline or is resumed by another thread
// (wall-clock mode); never call this from virtual-time code.
template <typename T>
T sync_wait(Task<T> t) {
  struct State {
    std::mutex m;
    std::condition_variable cv;
    bool done = false;
    std::optional<T> value;
    std::exception_ptr error;
  };
  auto st = std::make_shared<State>();
  auto runner = [](Task<T> task, std::shared_ptr<State> s) -> detail::Detached {
    try {
      s->value = co_await std::move(task);
    } catch (...) {
      s->error = std::current_exception();
    }
    {
      std::lock_guard<std::mutex> lk(s->m);
      s->done = true;
    }
    s->cv.notify_all();
  };
  runner(std::move(t), st);
  std::unique_lock<std::mutex> lk(st->m);
  st->cv.wait(lk, [&] { return st->done; });
  if (st->error) std::rethrow_exception(st->error);
  return std::move(*st->value);
}

inline void sync_wait(Task<void> t) {
  auto wrap = [](Task<void> task) -> Task<Unit> {
    co_await std::move(task);
    co_return Unit{};
  };
  sync_wait(wrap(std::move(t)));
}

}  // namespace coresim
