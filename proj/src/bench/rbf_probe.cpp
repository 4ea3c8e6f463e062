#include "smr/bench/rbf_probe.hpp"

#include <algorithm>
#include <atomic>
#include <barrier>
#include <new>
#include <sstream>
#include <thread>

#include "smr/bench/system.hpp"
#include "smr/cycle_clock.hpp"
#include "smr/reclaimer.hpp"

namespace smr::bench {

std::string_view to_string(probe_mode m) { return m == probe_mode::batch ? "batch" : "amortized"; }

void rbf_probe_config::validate() const {
  if (threads < 1) throw smr_error("threads must be >= 1");
  if (batch < 1) throw smr_error("batch must be >= 1");
  if (object_size < 1) throw smr_error("object size must be >= 1");
  if (iterations < 1) throw smr_error("iterations must be >= 1");
}

namespace {

// Keeps the optimiser from dropping the filler loop.
std::atomic<std::uint64_t> sink{0};

void filler_work(std::size_t units, std::uint64_t& x) {
  for (std::size_t i = 0; i < units; ++i) {
    x ^= x << 13;
    x ^= x >> 7;
    x ^= x << 17;
  }
}

}  // namespace

rbf_probe_result run_rbf_probe(const rbf_probe_config& cfg) {
  cfg.validate();
  const std::size_t m = cfg.threads, b = cfg.batch;
  // outbox[i] holds objects allocated by thread i, to be freed by thread (i - 1) mod m
  std::vector<std::vector<void*>> outbox(m, std::vector<void*>(b, nullptr));
  std::vector<std::vector<std::uint64_t>> lat(m);
  for (auto& l : lat) l.reserve(b * cfg.iterations);
  std::vector<std::uint64_t> allocs(m, 0);
  std::barrier sync(static_cast<std::ptrdiff_t>(m));

  auto worker = [&](std::size_t i) {
    std::uint64_t x = 0x9E3779B97F4A7C15ULL + i;
    auto& mine = outbox[i];
    for (auto& p : mine) p = ::operator new(cfg.object_size);
    allocs[i] += b;
    auto& ticks = lat[i];
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
      sync.arrive_and_wait();
      // exchange: take the neighbour's box, hand it a fresh one afterwards
      auto& theirs = outbox[(i + 1) % m];
      std::vector<void*> victims;
      victims.swap(theirs);
      sync.arrive_and_wait();
      std::vector<void*> fresh(b, nullptr);
      const bool last = it + 1 == cfg.iterations;
      if (cfg.mode == probe_mode::batch) {
        for (auto* p : victims) {
          const auto t0 = cycle_clock::now();
          ::operator delete(p);
          ticks.push_back(cycle_clock::now() - t0);
        }
        if (!last)
          for (auto& p : fresh) p = ::operator new(cfg.object_size);
      } else {
        for (std::size_t k = 0; k < victims.size(); ++k) {
          const auto t0 = cycle_clock::now();
          ::operator delete(victims[k]);
          ticks.push_back(cycle_clock::now() - t0);
          if (!last) fresh[k] = ::operator new(cfg.object_size);
          filler_work(cfg.filler, x);
        }
      }
      if (!last) allocs[i] += b;
      // Our own box was emptied by the predecessor before the second barrier.
      mine.swap(fresh);
    }
    sink.fetch_add(x, std::memory_order_relaxed);
  };

  std::vector<std::thread> pool;
  for (std::size_t i = 0; i < m; ++i) pool.emplace_back(worker, i);
  for (auto& t : pool) t.join();

  rbf_probe_result r;
  r.config = cfg;
  r.allocator = detect_allocator().label;
  std::vector<std::uint64_t> all;
  for (const auto& l : lat) all.insert(all.end(), l.begin(), l.end());
  for (auto a : allocs) r.allocations += a;
  r.frees = all.size();
  r.remote_frees = m > 1 ? r.frees : 0;
  if (!all.empty()) {
    std::sort(all.begin(), all.end());
    auto pct = [&](double q) { return cycle_clock::to_ns(all[static_cast<std::size_t>(q * static_cast<double>(all.size() - 1))]); };
    r.p50_ns = pct(0.5);
    r.p99_ns = pct(0.99);
    r.max_ns = cycle_clock::to_ns(all.back());
    for (auto t : all)
      if (cycle_clock::to_ns(t) > 100'000) ++r.over_100us;
  }
  return r;
}

std::string rbf_csv(const std::vector<rbf_probe_result>& results) {
  std::ostringstream o;
  o << rbf_header << '\n';
  for (const auto& r : results)
    o << to_string(r.config.mode) << ',' << r.config.threads << ',' << r.config.batch << ',' << r.config.object_size
      << ',' << r.config.iterations << ',' << r.frees << ',' << r.allocations << ',' << r.remote_frees << ','
      << r.p50_ns << ',' << r.p99_ns << ',' << r.max_ns << ',' << r.over_100us << ',' << r.allocator << '\n';
  return o.str();
}

}  // namespace smr::bench
