// Copyright (c) 2026 ftsim contributors
// SPDX-License-Identifier: Apache-2.0
#include "ftsim/runtime.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace ftsim::rt {

Nanos from_seconds(double s) {
  return static_cast<Nanos>(std::llround(s * 1e9));
}

double to_seconds(Nanos n) { return static_cast<double>(n) / 1e9; }

Executor*& current_executor() {
  thread_local Executor* ex = nullptr;
  return ex;
}

void SimLoop::post_at(Nanos t, std::function<void()> fn) {
  if (t < now_) t = now_;  // the past is closed
  queue_.push(Item{t, seq_++, std::move(fn)});
}

void SimLoop::run() { run_until(std::numeric_limits<Nanos>::max()); }

bool SimLoop::run_until(Nanos horizon) {
  Executor* prev = current_executor();
  current_executor() = this;
  while (!queue_.empty() && queue_.top().t <= horizon) {
    Item item = std::move(const_cast<Item&>(queue_.top()));
    queue_.pop();
    now_ = item.t;
    ++processed_;
    item.fn();
  }
  current_executor() = prev;
  return queue_.empty();
}

RealLoop::~RealLoop() { stop(); }

void RealLoop::start() {
  if (started_) return;
  started_ = true;
  epoch_ = std::chrono::steady_clock::now();
  thread_ = std::thread([this] { thread_main(); });
}

void RealLoop::stop() {
  {
    std::lock_guard lk(mu_);
    if (!started_ || stopping_) return;
    stopping_ = true;
  }
  cv_.notify_all();
  if (thread_.joinable()) thread_.join();
}

Nanos RealLoop::now() const {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now() - epoch_)
      .count();
}

void RealLoop::post_at(Nanos t, std::function<void()> fn) {
  {
    std::lock_guard lk(mu_);
    queue_.emplace(t, std::move(fn));
  }
  cv_.notify_all();
}

void RealLoop::thread_main() {
  current_executor() = this;
  std::unique_lock lk(mu_);
  while (true) {
    if (stopping_) return;
    if (queue_.empty()) {
      cv_.wait(lk);
      continue;
    }
    const Nanos t = queue_.begin()->first;
    if (t > now()) {
      cv_.wait_until(lk, epoch_ + std::chrono::nanoseconds(t));
      continue;
    }
    auto fn = std::move(queue_.begin()->second);
    queue_.erase(queue_.begin());
    lk.unlock();
    fn();
    lk.lock();
  }
}

std::uint64_t& orphan_failures() {
  static std::uint64_t n = 0;
  return n;
}

void spawn(Task<void> t) {
  [](Task<void> inner) -> detail::Detached {
    try {
      co_await std::move(inner);
    } catch (const OperationKilled&) {
      // normal end of a killed activity
    } catch (const std::exception& e) {
      ++orphan_failures();
      std::fprintf(stderr, "[runtime] detached activity failed: %s\n",
                   e.what());
    }
  }(std::move(t));
}

Task<void> sleep_for(Executor& ex, LifeToken& tok, Nanos d) {
  tok.check();
  Promise<Unit> p;
  const auto id = tok.park([p](std::exception_ptr e) { p.set_exception(e); });
  ex.post_after(d, [p] { p.set_value(Unit{}); });
  co_await p.future();
  tok.unpark(id);
}

}  // namespace ftsim::rt
