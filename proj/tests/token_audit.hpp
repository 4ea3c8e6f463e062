#pragma once

// Sampled audit of the token ring: Σ(received - passed) must stay in {0, 1}.

#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

#include "smr/token_ebr.hpp"

namespace token_audit {

struct sample {
  bool stable = false;
  std::int64_t held = 0;  // Σ received - passed
};

// Reads every counter twice; the sample counts only if nothing moved in
// between, which makes it a consistent cut (all counters are monotone).
inline sample take(const smr::token_reclaimer& rec, std::size_t n) {
  std::vector<std::uint64_t> a(2 * n), b(2 * n);
  auto read = [&](std::vector<std::uint64_t>& v) {
    for (std::size_t i = 0; i < n; ++i) {
      v[2 * i] = rec.received_round(i);
      v[2 * i + 1] = rec.passed_round(i);
    }
  };
  read(a);
  read(b);
  sample s;
  s.stable = a == b;
  for (std::size_t i = 0; i < n; ++i)
    s.held += static_cast<std::int64_t>(b[2 * i]) - static_cast<std::int64_t>(b[2 * i + 1]);
  return s;
}

struct report {
  std::uint64_t samples = 0;
  std::uint64_t stable = 0;
  std::uint64_t bad = 0;
  std::uint64_t spread = 0;  // max - min received after quiescing
  std::uint64_t rounds = 0;
  std::uint64_t ops = 0;
};

/// n worker threads do `ops_total` begin/end pairs between them while the
/// calling thread samples the counters.
inline report run(smr::token_variant variant, std::size_t n, std::uint64_t ops_total) {
  smr::reclaimer_config cfg;
  cfg.max_threads = n;
  smr::token_reclaimer rec(cfg, variant);
  std::atomic<std::size_t> ready{0};
  std::atomic<bool> go{false};
  std::atomic<std::size_t> done{0};
  std::vector<smr::thread_handle> handles(n);
  std::vector<std::thread> pool;
  const auto per = ops_total / n;
  for (std::size_t t = 0; t < n; ++t) {
    pool.emplace_back([&, t] {
      auto h = rec.register_thread();
      ready.fetch_add(1);
      while (!go.load()) std::this_thread::yield();
      for (std::uint64_t i = 0; i < per; ++i) {
        smr::op_guard g(rec, h);
        if (i % 4 == 0) rec.retire(h, smr::retired_object{::operator new(16), 16});
        if (i % 256 == 0) std::this_thread::yield();
      }
      done.fetch_add(1);
      handles[t] = std::move(h);
    });
  }
  while (ready.load() < n) std::this_thread::yield();
  go.store(true);
  report r;
  while (done.load() < n) {
    const auto s = take(rec, n);
    ++r.samples;
    if (s.stable) {
      ++r.stable;
      if (s.held < 0 || s.held > 1) ++r.bad;
    }
    std::this_thread::yield();
  }
  for (auto& th : pool) th.join();
  std::uint64_t lo = UINT64_MAX, hi = 0;
  for (std::size_t i = 0; i < n; ++i) {
    lo = std::min(lo, rec.received_round(i));
    hi = std::max(hi, rec.received_round(i));
  }
  const auto final_sample = take(rec, n);
  if (final_sample.held < 0 || final_sample.held > 1) ++r.bad;
  r.spread = hi - lo;
  r.rounds = rec.epochs();
  r.ops = per * n;
  for (auto& h : handles) rec.unregister_thread(h);
  rec.drain();
  return r;
}

}  // namespace token_audit
