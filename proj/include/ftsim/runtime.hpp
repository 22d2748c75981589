// Copyright (c) 2026 ftsim contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Cooperative execution core.  All protocol logic is written as C++20
// coroutines against the Executor interface.  The simulated backend runs
// every activity of a world on one SimLoop with a virtual clock: events are
// dispatched in (time, insertion-sequence) order, which makes whole-cluster
// runs deterministic.  The socket backend runs one RealLoop thread per
// agent against the wall clock.
//
// Fail-stop injection: every blocking primitive is bound to a LifeToken.
// Killing the token resumes all parked activities with OperationKilled (in
// registration order) and makes later blocking calls throw immediately, so
// a crashed entity never acts again.

#include <chrono>
#include <condition_variable>
#include <coroutine>
#include <cstdint>
#include <deque>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <queue>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

namespace ftsim::rt {

using Nanos = std::int64_t;
constexpr Nanos kSecond = 1'000'000'000;

Nanos from_seconds(double s);
double to_seconds(Nanos n);

class Executor {
 public:
  virtual ~Executor() = default;
  virtual void post_at(Nanos t, std::function<void()> fn) = 0;
  virtual Nanos now() const = 0;
  void post(std::function<void()> fn) { post_at(now(), std::move(fn)); }
  void post_after(Nanos d, std::function<void()> fn) {
    post_at(now() + d, std::move(fn));
  }
};

// Executor the currently dispatched event runs under; set by the loops.
Executor*& current_executor();

// Deterministic virtual-time event loop.
class SimLoop final : public Executor {
 public:
  void post_at(Nanos t, std::function<void()> fn) override;
  Nanos now() const override { return now_; }

  // Dispatches until the queue is empty.
  void run();
  // Dispatches events with t <= horizon; returns true if the queue drained.
  bool run_until(Nanos horizon);
  std::uint64_t processed() const { return processed_; }

 private:
  struct Item {
    Nanos t;
    std::uint64_t seq;
    std::function<void()> fn;
  };
  struct Later {
    bool operator()(const Item& a, const Item& b) const {
      return a.t != b.t ? a.t > b.t : a.seq > b.seq;
    }
  };
  std::priority_queue<Item, std::vector<Item>, Later> queue_;
  Nanos now_ = 0;
  std::uint64_t seq_ = 0;
  std::uint64_t processed_ = 0;
};

// Wall-clock event loop owning one dispatch thread.  now() is nanoseconds
// since start().  Used by the socket backend; no determinism promises.
class RealLoop final : public Executor {
 public:
  ~RealLoop() override;
  void start();
  void stop();
  void post_at(Nanos t, std::function<void()> fn) override;
  Nanos now() const override;

 private:
  void thread_main();
  std::mutex mu_;
  std::condition_variable cv_;
  std::multimap<Nanos, std::function<void()>> queue_;
  std::thread thread_;
  bool stopping_ = false;
  std::chrono::steady_clock::time_point epoch_;
  bool started_ = false;
};

struct OperationKilled : std::runtime_error {
  OperationKilled() : std::runtime_error("activity killed (fail-stop)") {}
};

// ---- single-shot future / promise ------------------------------------

template <class T>
struct FutureState {
  std::mutex mu;
  bool done = false;
  std::exception_ptr error;
  std::optional<T> value;
  std::coroutine_handle<> waiter;
  Executor* waiter_exec = nullptr;

  // Returns the parked waiter to schedule, if any.  First resolution wins;
  // later ones are ignored so a cancelled operation may still complete
  // harmlessly.
  bool resolve(std::optional<T>&& v, std::exception_ptr e,
               std::coroutine_handle<>& to_run, Executor*& exec) {
    std::lock_guard lk(mu);
    if (done) return false;
    done = true;
    value = std::move(v);
    error = e;
    to_run = waiter;
    exec = waiter_exec;
    waiter = nullptr;
    return true;
  }
};

struct Unit {};

template <class T>
class Future;

template <class T>
class Promise {
 public:
  Promise() : st_(std::make_shared<FutureState<T>>()) {}
  Future<T> future() const;
  bool set_value(T v) const {
    return schedule(std::optional<T>(std::move(v)), nullptr);
  }
  bool set_exception(std::exception_ptr e) const {
    return schedule(std::nullopt, e);
  }
  bool done() const {
    std::lock_guard lk(st_->mu);
    return st_->done;
  }

 private:
  bool schedule(std::optional<T>&& v, std::exception_ptr e) const {
    std::coroutine_handle<> h;
    Executor* ex = nullptr;
    if (!st_->resolve(std::move(v), e, h, ex)) return false;
    if (h) ex->post([h] { h.resume(); });
    return true;
  }
  std::shared_ptr<FutureState<T>> st_;
};

template <class T>
class Future {
 public:
  explicit Future(std::shared_ptr<FutureState<T>> st) : st_(std::move(st)) {}

  bool await_ready() const {
    std::lock_guard lk(st_->mu);
    return st_->done;
  }
  bool await_suspend(std::coroutine_handle<> h) {
    std::lock_guard lk(st_->mu);
    if (st_->done) return false;
    st_->waiter = h;
    st_->waiter_exec = current_executor();
    return true;
  }
  T await_resume() {
    std::lock_guard lk(st_->mu);
    if (st_->error) std::rethrow_exception(st_->error);
    return std::move(*st_->value);
  }

 private:
  std::shared_ptr<FutureState<T>> st_;
};

template <class T>
Future<T> Promise<T>::future() const {
  return Future<T>(st_);
}

// ---- lazy task --------------------------------------------------------

template <class T>
class [[nodiscard]] Task {
 public:
  struct promise_type {
    std::coroutine_handle<> continuation;
    std::optional<T> value;
    std::exception_ptr error;

    Task get_return_object() {
      return Task(std::coroutine_handle<promise_type>::from_promise(*this));
    }
    std::suspend_always initial_suspend() noexcept { return {}; }
    auto final_suspend() noexcept {
      struct Fin {
        bool await_ready() noexcept { return false; }
        std::coroutine_handle<> await_suspend(
            std::coroutine_handle<promise_type> h) noexcept {
          auto c = h.promise().continuation;
          return c ? c : std::noop_coroutine();
        }
        void await_resume() noexcept {}
      };
      return Fin{};
    }
    template <class U>
    void return_value(U&& v) {
      value.emplace(std::forward<U>(v));
    }
    void unhandled_exception() { error = std::current_exception(); }
  };

  explicit Task(std::coroutine_handle<promise_type> h) : h_(h) {}
  Task(Task&& o) noexcept : h_(std::exchange(o.h_, nullptr)) {}
  Task(const Task&) = delete;
  ~Task() {
    if (h_) h_.destroy();
  }

  bool await_ready() const noexcept { return false; }
  std::coroutine_handle<> await_suspend(std::coroutine_handle<> parent) {
    h_.promise().continuation = parent;
    return h_;
  }
  T await_resume() {
    if (h_.promise().error) std::rethrow_exception(h_.promise().error);
    return std::move(*h_.promise().value);
  }

 private:
  std::coroutine_handle<promise_type> h_;
};

template <>
class [[nodiscard]] Task<void> {
 public:
  struct promise_type {
    std::coroutine_handle<> continuation;
    std::exception_ptr error;

    Task get_return_object() {
      return Task(std::coroutine_handle<promise_type>::from_promise(*this));
    }
    std::suspend_always initial_suspend() noexcept { return {}; }
    auto final_suspend() noexcept {
      struct Fin {
        bool await_ready() noexcept { return false; }
        std::coroutine_handle<> await_suspend(
            std::coroutine_handle<promise_type> h) noexcept {
          auto c = h.promise().continuation;
          return c ? c : std::noop_coroutine();
        }
        void await_resume() noexcept {}
      };
      return Fin{};
    }
    void return_void() {}
    void unhandled_exception() { error = std::current_exception(); }
  };

  explicit Task(std::coroutine_handle<promise_type> h) : h_(h) {}
  Task(Task&& o) noexcept : h_(std::exchange(o.h_, nullptr)) {}
  Task(const Task&) = delete;
  ~Task() {
    if (h_) h_.destroy();
  }

  bool await_ready() const noexcept { return false; }
  std::coroutine_handle<> await_suspend(std::coroutine_handle<> parent) {
    h_.promise().continuation = parent;
    return h_;
  }
  void await_resume() {
    if (h_.promise().error) std::rethrow_exception(h_.promise().error);
  }

 private:
  std::coroutine_handle<promise_type> h_;
};

// Number of detached activities that died with an unexpected exception;
// clean runs keep this at zero and tests assert on it.
std::uint64_t& orphan_failures();

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
}  // namespace detail

// Fire-and-forget.  OperationKilled unwinding is the normal end of a killed
// activity and is swallowed; anything else is counted and reported.
void spawn(Task<void> t);

// ---- fail-stop token --------------------------------------------------

class LifeToken {
 public:
  bool alive() const { return alive_; }
  void check() const {
    if (!alive_) throw OperationKilled{};
  }
  std::uint64_t park(std::function<void(std::exception_ptr)> cancel) {
    const auto id = next_++;
    parked_.emplace(id, std::move(cancel));
    return id;
  }
  void unpark(std::uint64_t id) { parked_.erase(id); }
  void kill() { kill(std::make_exception_ptr(OperationKilled{})); }
  void kill(std::exception_ptr reason) {
    if (!alive_) return;
    alive_ = false;
    auto parked = std::move(parked_);
    parked_.clear();
    for (auto& [id, cancel] : parked) cancel(reason);
  }

 private:
  bool alive_ = true;
  std::uint64_t next_ = 1;
  std::map<std::uint64_t, std::function<void(std::exception_ptr)>> parked_;
};

// Parks on a token while awaiting a future created elsewhere.
template <class T>
Task<T> guarded(LifeToken& tok, Promise<T> p) {
  tok.check();
  const auto id = tok.park([p](std::exception_ptr e) { p.set_exception(e); });
  T v = co_await p.future();
  tok.unpark(id);
  co_return v;
}

Task<void> sleep_for(Executor& ex, LifeToken& tok, Nanos d);

// ---- small coordination primitives ------------------------------------

template <class T>
class AsyncQueue {
 public:
  void push(T v) {
    while (!waiters_.empty()) {
      Promise<T> p = waiters_.front();
      waiters_.pop_front();
      if (p.done()) continue;  // cancelled waiter
      p.set_value(std::move(v));
      return;
    }
    items_.push_back(std::move(v));
  }
  Task<T> pop(LifeToken& tok) {
    tok.check();
    if (!items_.empty()) {
      T v = std::move(items_.front());
      items_.pop_front();
      co_return v;
    }
    Promise<T> p;
    waiters_.push_back(p);
    const auto id =
        tok.park([p](std::exception_ptr e) { p.set_exception(e); });
    T v = co_await p.future();
    tok.unpark(id);
    co_return v;
  }
  bool empty() const { return items_.empty(); }
  std::size_t size() const { return items_.size(); }

 private:
  std::deque<T> items_;
  std::deque<Promise<T>> waiters_;
};

// Manual-reset latch; opening releases current and future waiters.
class Gate {
 public:
  void open() {
    if (open_) return;
    open_ = true;
    auto ws = std::move(waiters_);
    waiters_.clear();
    for (auto& p : ws) p.set_value(Unit{});
  }
  bool is_open() const { return open_; }
  Task<void> wait(LifeToken& tok) {
    tok.check();
    if (!open_) {
      Promise<Unit> p;
      waiters_.push_back(p);
      const auto id =
          tok.park([p](std::exception_ptr e) { p.set_exception(e); });
      co_await p.future();
      tok.unpark(id);
    }
    co_return;
  }

 private:
  bool open_ = false;
  std::vector<Promise<Unit>> waiters_;
};

// Countdown join for fan-out/fan-in inside one loop.
class WaitGroup {
 public:
  void add(int n = 1) { count_ += n; }
  void done() {
    if (--count_ == 0) gate_.open();
  }
  Task<void> wait(LifeToken& tok) {
    if (count_ == 0) gate_.open();
    return gate_.wait(tok);
  }

 private:
  int count_ = 0;
  Gate gate_;
};

}  // namespace ftsim::rt
