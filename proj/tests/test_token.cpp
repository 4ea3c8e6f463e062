#include <thread>

#include "doctest.h"
#include "smr/token_ebr.hpp"
#include "support.hpp"
#include "token_audit.hpp"

using namespace smr;
using test_support::log;
using test_support::object;
using test_support::sim_config;

namespace {

struct ring {
  explicit ring(std::size_t n, token_variant v, free_policy p = free_policy::batch, std::size_t kfree = 100,
                timeline::recorder* tl = nullptr) {
    auto c = sim_config(n, p);
    c.timeline = tl;
    rec = std::make_unique<token_reclaimer>(c, v, kfree);
    for (std::size_t i = 0; i < n; ++i) h.push_back(rec->register_thread());
  }
  ~ring() {
    for (auto& x : h)
      if (x.valid() && x.registered()) rec->unregister_thread(x);
    rec->drain();
  }
  void op(std::size_t t, int retires = 0) {
    op_guard g(*rec, h[t]);
    for (int i = 0; i < retires; ++i) rec->retire(h[t], object());
  }
  std::unique_ptr<token_reclaimer> rec;
  std::vector<thread_handle> h;
};

}  // namespace

TEST_CASE("token: nothing delivered means nothing received") {
  ring r(2, token_variant::naive);
  CHECK_FALSE(r.rec->check_receive(1));
  CHECK(r.rec->received_round(1) == 0);
}

TEST_CASE("token: a delivery bumps the local epoch") {
  ring r(2, token_variant::naive);
  for (int i = 0; i < 4; ++i) {
    r.op(0);
    r.op(1);
  }
  CHECK(r.rec->received_round(1) == 4);
  r.op(0);  // thread 0 passes round 5
  CHECK(r.rec->delivered(1) == 5);
  CHECK(r.rec->check_receive(1));
  CHECK(r.rec->local_epoch(1) == 5);
  r.rec->pass(1);
}

TEST_CASE("token: after r circuits of a 4-ring every local epoch is r") {
  ring r(4, token_variant::passfirst);
  for (int round = 1; round <= 25; ++round) {
    for (std::size_t t = 0; t < 4; ++t) r.op(t);
    for (std::size_t t = 0; t < 4; ++t) CHECK(r.rec->local_epoch(t) == static_cast<std::uint64_t>(round));
  }
}

TEST_CASE("token: a ring of one passes to itself") {
  ring r(1, token_variant::naive);
  r.op(0);
  CHECK(r.rec->received_round(0) == 1);
  CHECK(r.rec->delivered(0) == 2);
  r.op(0);
  CHECK(r.rec->received_round(0) == 2);
}

TEST_CASE("token: two threads hand the round over") {
  ring r(2, token_variant::naive);
  r.op(0);
  CHECK(r.rec->passed_round(0) == 1);
  CHECK(r.rec->delivered(1) == 1);
  r.op(1);
  CHECK(r.rec->received_round(1) == 1);
  CHECK(r.rec->delivered(0) == 2);
}

TEST_CASE("token: passing without the token is an error") {
  ring r(2, token_variant::naive);
  try {
    r.rec->pass(1);
    FAIL("expected an error");
  } catch (const smr_error& e) {
    CHECK(std::string(e.what()) == "token not held");
  }
}

TEST_CASE("naive: empty previous bag frees nothing") {
  log().reset();
  ring r(2, token_variant::naive);
  r.op(0);
  r.op(1);
  CHECK(log().count == 0);
  CHECK(r.rec->passed_round(1) == 1);
}

namespace {
token_reclaimer* watched = nullptr;
std::uint64_t delivered_seen_max = 0;
void watch_next(std::uint64_t) {
  delivered_seen_max = std::max(delivered_seen_max, watched->delivered(1));
}
}  // namespace

TEST_CASE("naive: the previous bag is freed before the successor's slot is written") {
  log().reset();
  ring r(2, token_variant::naive);
  r.op(0, 10);  // round 1, 10 retires in epoch 1
  r.op(1);
  r.op(0);  // round 2: current -> previous
  r.op(1);
  const auto before = r.rec->delivered(1);
  watched = r.rec.get();
  delivered_seen_max = 0;
  log().hook = &watch_next;
  r.op(0);  // round 3: frees the 10, then passes
  log().hook = nullptr;
  CHECK(log().count == 10);
  CHECK(delivered_seen_max == before);
  CHECK(r.rec->delivered(1) == before + 1);
}

TEST_CASE("passfirst: empty previous bag behaves like naive") {
  log().reset();
  ring a(2, token_variant::passfirst);
  ring b(2, token_variant::naive);
  for (int i = 0; i < 3; ++i)
    for (std::size_t t = 0; t < 2; ++t) {
      a.op(t);
      b.op(t);
    }
  for (std::size_t t = 0; t < 2; ++t) {
    CHECK(a.rec->received_round(t) == b.rec->received_round(t));
    CHECK(a.rec->passed_round(t) == b.rec->passed_round(t));
  }
  CHECK(log().count == 0);
}

namespace {
ring* sim = nullptr;
bool fired = false;
void second_thread_runs(std::uint64_t) {
  if (fired) return;
  fired = true;
  sim->op(1);
}
}  // namespace

TEST_CASE("passfirst: a token that arrives mid-free waits for the next begin_op") {
  log().reset();
  ring r(2, token_variant::passfirst);
  r.op(0, 5);
  r.op(1, 5);
  r.op(0);
  r.op(1);
  sim = &r;
  fired = false;
  log().hook = &second_thread_runs;
  r.op(0);  // passes round 3, then frees 5; thread 1 runs in between and passes back
  log().hook = nullptr;
  CHECK(fired);
  CHECK(r.rec->delivered(0) == 4);
  CHECK(r.rec->received_round(0) == 3);
  r.op(0);
  CHECK(r.rec->received_round(0) == 4);
}

TEST_CASE("passfirst: free intervals of two threads overlap") {
  log().reset();
  timeline::recorder tl(2);
  ring r(2, token_variant::passfirst, free_policy::batch, 100, &tl);
  r.op(0, 50);
  r.op(1, 50);
  r.op(0);
  r.op(1);
  sim = &r;
  fired = false;
  log().hook = &second_thread_runs;
  r.op(0);
  log().hook = nullptr;
  auto frees = [&](std::size_t t) {
    std::vector<timeline::event> out;
    for (const auto& e : tl.buffer(t).events())
      if (e.kind == timeline::event_kind::batch_free) out.push_back(e);
    return out;
  };
  const auto f0 = frees(0), f1 = frees(1);
  REQUIRE(f0.size() == 1);
  REQUIRE(f1.size() == 1);
  CHECK(f1[0].start_ns >= f0[0].start_ns);
  CHECK(f1[0].end_ns <= f0[0].end_ns);
}

TEST_CASE("periodic: mid-free checks every k frees") {
  for (auto [bag, checks] : {std::pair{50, 0}, {250, 2}, {200, 2}}) {
    CAPTURE(bag);
    log().reset();
    ring r(1, token_variant::periodic);
    r.op(0, bag);
    r.op(0);  // current -> previous
    r.op(0);  // previous freed with periodic checks
    CHECK(log().count == static_cast<std::uint64_t>(bag));
    CHECK(r.rec->mid_free_checks(0) == static_cast<std::uint64_t>(checks));
  }
}

namespace {
bool delivered_once = false;
void deliver_at_150(std::uint64_t c) {
  if (c != 150 || delivered_once) return;
  delivered_once = true;
  sim->op(1);
}
std::vector<std::pair<std::size_t, std::uint64_t>> check_log;
}  // namespace

TEST_CASE("periodic: a token delivered at free 150 of 250 is re-passed at free 200") {
  log().reset();
  ring r(2, token_variant::periodic, free_policy::batch, 100);
  r.op(0, 250);
  r.op(1);
  r.op(0);
  r.op(1);
  sim = &r;
  delivered_once = false;
  check_log.clear();
  r.rec->set_mid_free_observer([&](std::size_t, std::size_t freed) {
    check_log.emplace_back(freed, r.rec->mid_free_passes(0));
  });
  log().hook = &deliver_at_150;
  r.op(0);  // round 3: frees 250
  log().hook = nullptr;
  CHECK(delivered_once);
  REQUIRE(check_log.size() == 2);
  CHECK(check_log[0] == std::pair<std::size_t, std::uint64_t>{100, 0});
  CHECK(check_log[1] == std::pair<std::size_t, std::uint64_t>{200, 1});
  CHECK(r.rec->received_round(0) == 4);
  CHECK(r.rec->passed_round(0) == 4);
  CHECK(log().count >= 250);
}

TEST_CASE("amortized: a 1000-object bag moves to the freeable list at once") {
  log().reset();
  ring r(1, token_variant::amortized);
  r.op(0, 1000);
  r.op(0);
  CHECK(r.rec->freeable_size(0) == 0);
  r.rec->begin_op(r.h[0]);  // previous (1000) -> freeable; one freed by the quota
  CHECK(r.rec->freeable_size(0) == 999);
  CHECK(log().count == 1);
  r.rec->end_op(r.h[0]);
}

TEST_CASE("amortized: begin_op with three parked objects frees exactly one") {
  log().reset();
  auto c = sim_config(2, free_policy::amortized);
  token_reclaimer rec(c, token_variant::amortized);
  auto a = rec.register_thread();
  auto b = rec.register_thread();
  {
    op_guard g(rec, a);
    for (int i = 0; i < 3; ++i) rec.retire(a, object());
  }
  {
    op_guard g(rec, b);
  }
  {
    op_guard g(rec, a);
  }
  {
    op_guard g(rec, b);
  }
  // Thread a's next begin_op moves the 3 objects to its freeable list and
  // then frees one. Every later op without a token frees one more.
  rec.begin_op(a);
  CHECK(log().count == 1);
  rec.end_op(a);
  CHECK(rec.freeable_size(0) == 2);
  rec.begin_op(a);
  CHECK(log().count == 2);
  rec.end_op(a);
  rec.unregister_thread(a);
  rec.unregister_thread(b);
  rec.drain();
  CHECK(log().count == 3);
}

TEST_CASE("token: grace holds for every variant with real threads") {
  for (auto v : {token_variant::naive, token_variant::passfirst, token_variant::periodic, token_variant::amortized}) {
    CAPTURE(to_string(v));
    reclaimer_config c;
    c.max_threads = 4;
    c.debug_oracle = true;
    c.on_violation = oracle_action::count;
    token_reclaimer rec(c, v, 7);
    std::vector<std::thread> pool;
    for (int t = 0; t < 4; ++t)
      pool.emplace_back([&] {
        auto h = rec.register_thread();
        for (int i = 0; i < 5000; ++i) {
          op_guard g(rec, h);
          rec.retire(h, object(8));
          if (i % 50 == 0) std::this_thread::yield();
        }
        rec.unregister_thread(h);
      });
    for (auto& t : pool) t.join();
    rec.drain();
    CHECK(rec.oracle_violations() == 0);
    CHECK(rec.lifetime_freed() == rec.lifetime_retired());
  }
}

TEST_CASE("token: leaving threads forward the token") {
  log().reset();
  ring r(3, token_variant::passfirst);
  r.op(0, 3);
  r.op(1, 3);
  r.rec->unregister_thread(r.h[1]);  // may hold a delivered round
  for (int i = 0; i < 10; ++i) {
    r.op(0);
    r.op(2);
  }
  CHECK(r.rec->received_round(2) >= 9);
  CHECK(r.rec->successor(0) == std::optional<std::size_t>{2});
}

TEST_CASE("token: sampled audit of the single-token invariant") {
  const auto rep = token_audit::run(token_variant::periodic, 8, 200'000);
  CHECK(rep.stable > 0);
  CHECK(rep.bad == 0);
  CHECK(rep.spread <= 1);
  CHECK(rep.rounds > 0);
}
