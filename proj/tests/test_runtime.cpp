// SPDX-License-Identifier: MIT
#include <doctest.h>

#include <ftsim/runtime.hpp>

#include <atomic>
#include <string>
#include <vector>

using namespace ftsim;
using namespace ftsim::rt;

TEST_CASE("sim loop runs callbacks in time order, ties by submission order") {
  SimLoop loop;
  std::vector<int> order;
  loop.post_at(2 * kSecond, [&] { order.push_back(3); });
  loop.post_at(1 * kSecond, [&] { order.push_back(1); });
  loop.post_at(1 * kSecond, [&] { order.push_back(2); });
  loop.post_at(3 * kSecond, [&] { order.push_back(4); });
  loop.run();
  CHECK(order == std::vector<int>{1, 2, 3, 4});
  CHECK(loop.now() == 3 * kSecond);
}

TEST_CASE("post in the past is clamped to now") {
  SimLoop loop;
  Nanos seen = -1;
  loop.post_at(5 * kSecond, [&] {
    loop.post_at(1 * kSecond, [&] { seen = loop.now(); });
  });
  loop.run();
  CHECK(seen == 5 * kSecond);
}

TEST_CASE("run_until stops at the horizon and reports drain status") {
  SimLoop loop;
  int hits = 0;
  std::function<void()> rearm = [&] {
    ++hits;
    loop.post_after(kSecond, rearm);
  };
  loop.post_after(kSecond, rearm);
  bool drained = loop.run_until(10 * kSecond);
  CHECK_FALSE(drained);
  CHECK(hits == 10);
  CHECK(loop.now() <= 10 * kSecond);
}

namespace {

Task<int> add_one(int x) { co_return x + 1; }

Task<int> chain(int x) {
  int a = co_await add_one(x);
  int b = co_await add_one(a);
  co_return b;
}

Task<void> store(Future<int> f, int* out) {
  *out = co_await std::move(f);
}

}  // namespace

TEST_CASE("tasks compose and propagate values") {
  SimLoop loop;
  int result = 0;
  loop.post([&] {
    spawn([](int* out) -> Task<void> { *out = co_await chain(5); }(&result));
  });
  loop.run();
  CHECK(result == 7);
}

TEST_CASE("future resolves a suspended awaiter through the executor") {
  SimLoop loop;
  Promise<int> p;
  int got = 0;
  loop.post([&] { spawn(store(p.future(), &got)); });
  loop.post_at(2 * kSecond, [&] { p.set_value(41); });
  loop.run();
  CHECK(got == 41);
}

TEST_CASE("future already resolved before await continues immediately") {
  SimLoop loop;
  Promise<int> p;
  p.set_value(9);
  int got = 0;
  loop.post([&] { spawn(store(p.future(), &got)); });
  loop.run();
  CHECK(got == 9);
}

TEST_CASE("set_exception surfaces at the await point") {
  SimLoop loop;
  Promise<int> p;
  std::string what;
  loop.post([&] {
    spawn([](Future<int> f, std::string* w) -> Task<void> {
      try {
        co_await std::move(f);
      } catch (const std::runtime_error& e) {
        *w = e.what();
      }
    }(p.future(), &what));
  });
  loop.post([&] {
    p.set_exception(std::make_exception_ptr(std::runtime_error("boom")));
  });
  loop.run();
  CHECK(what == "boom");
}

TEST_CASE("life token kill wakes parked waiters with OperationKilled") {
  SimLoop loop;
  LifeToken tok;
  Promise<Unit> never;
  int killed = 0;
  int normal = 0;
  loop.post([&] {
    spawn([](LifeToken* t, Promise<Unit>* p, int* k, int* n) -> Task<void> {
      try {
        co_await guarded(*t, *p);
        ++*n;
      } catch (const OperationKilled&) {
        ++*k;
      }
    }(&tok, &never, &killed, &normal));
  });
  loop.post_at(kSecond, [&] { tok.kill(); });
  loop.run();
  CHECK(killed == 1);
  CHECK(normal == 0);
  CHECK_FALSE(tok.alive());
}

TEST_CASE("kill after normal completion is harmless") {
  SimLoop loop;
  LifeToken tok;
  Promise<Unit> p;
  int normal = 0;
  loop.post([&] {
    spawn([](LifeToken* t, Promise<Unit>* pr, int* n) -> Task<void> {
      co_await guarded(*t, *pr);
      ++*n;
    }(&tok, &p, &normal));
  });
  loop.post([&] { p.set_value(Unit{}); });
  loop.post_at(kSecond, [&] { tok.kill(); });
  loop.run();
  CHECK(normal == 1);
}

TEST_CASE("sleep_for advances virtual time and is killable") {
  SimLoop loop;
  LifeToken tok;
  Nanos woke = -1;
  bool killed = false;
  loop.post([&] {
    spawn([](SimLoop* lp, LifeToken* t, Nanos* w) -> Task<void> {
      co_await sleep_for(*lp, *t, 3 * kSecond);
      *w = lp->now();
    }(&loop, &tok, &woke));
    spawn([](SimLoop* lp, LifeToken* t, bool* k) -> Task<void> {
      try {
        co_await sleep_for(*lp, *t, 100 * kSecond);
      } catch (const OperationKilled&) {
        *k = true;
      }
    }(&loop, &tok, &killed));
  });
  loop.post_at(5 * kSecond, [&] { tok.kill(); });
  loop.run();
  CHECK(woke == 3 * kSecond);
  CHECK(killed);
}

TEST_CASE("async queue hands items to waiters in order") {
  SimLoop loop;
  AsyncQueue<int> q;
  LifeToken tok;
  std::vector<int> got;
  loop.post([&] {
    for (int i = 0; i < 3; ++i) {
      spawn([](AsyncQueue<int>* qq, LifeToken* t, std::vector<int>* g) -> Task<void> {
        g->push_back(co_await qq->pop(*t));
      }(&q, &tok, &got));
    }
  });
  loop.post_at(kSecond, [&] {
    q.push(10);
    q.push(20);
  });
  loop.post_at(2 * kSecond, [&] { q.push(30); });
  loop.run();
  CHECK(got == std::vector<int>{10, 20, 30});
}

TEST_CASE("async queue buffers when nobody waits") {
  SimLoop loop;
  AsyncQueue<int> q;
  LifeToken tok;
  q.push(1);
  q.push(2);
  std::vector<int> got;
  loop.post([&] {
    spawn([](AsyncQueue<int>* qq, LifeToken* t, std::vector<int>* g) -> Task<void> {
      g->push_back(co_await qq->pop(*t));
      g->push_back(co_await qq->pop(*t));
    }(&q, &tok, &got));
  });
  loop.run();
  CHECK(got == std::vector<int>{1, 2});
}

TEST_CASE("gate releases every waiter at once") {
  SimLoop loop;
  Gate gate;
  LifeToken tok;
  int released = 0;
  loop.post([&] {
    for (int i = 0; i < 4; ++i) {
      spawn([](Gate* g, LifeToken* t, int* r) -> Task<void> {
        co_await g->wait(*t);
        ++*r;
      }(&gate, &tok, &released));
    }
  });
  loop.post_at(kSecond, [&] { gate.open(); });
  loop.run();
  CHECK(released == 4);
}

TEST_CASE("gate already open does not block") {
  SimLoop loop;
  Gate gate;
  LifeToken tok;
  gate.open();
  bool ran = false;
  loop.post([&] {
    spawn([](Gate* g, LifeToken* t, bool* r) -> Task<void> {
      co_await g->wait(*t);
      *r = true;
    }(&gate, &tok, &ran));
  });
  loop.run();
  CHECK(ran);
}

TEST_CASE("wait group joins a set of activities") {
  SimLoop loop;
  WaitGroup wg;
  LifeToken tok;
  bool joined = false;
  wg.add(3);
  loop.post([&] {
    spawn([](WaitGroup* w, LifeToken* t, bool* j) -> Task<void> {
      co_await w->wait(*t);
      *j = true;
    }(&wg, &tok, &joined));
  });
  for (int i = 1; i <= 3; ++i)
    loop.post_at(i * kSecond, [&wg] { wg.done(); });
  loop.run();
  CHECK(joined);
}

TEST_CASE("real loop executes posted work on its own thread") {
  RealLoop loop;
  loop.start();
  std::atomic<int> hits{0};
  loop.post([&] { hits.fetch_add(1); });
  loop.post_after(Nanos(2'000'000), [&] { hits.fetch_add(1); });
  for (int spin = 0; spin < 20000 && hits.load() < 2; ++spin)
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
  loop.stop();
  CHECK(hits.load() == 2);
}
