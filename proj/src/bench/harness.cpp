#include "smr/bench/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <random>
#include <thread>

#include "smr/oracle.hpp"
#include "smr/timeline.hpp"

namespace smr::bench {

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

enum phase : int { waiting, prefilling, paused, measuring, stopping, aborting };

struct alignas(cache_line) worker_state {
  std::atomic<std::int64_t> net{0};  // successful inserts - successful deletes
  std::uint64_t ops = 0;
  std::uint64_t prefill_ops = 0;
};

// splitmix64 mixing of (seed, thread id) so neighbouring seeds do not give
// correlated streams.
std::uint64_t thread_seed(std::uint64_t seed, std::size_t tid) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (tid + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

void bench_config::validate() const {
  if (threads < 1) throw smr_error("threads must be >= 1");
  if (!(duration_s > 0) && ops == 0) throw smr_error("duration must be > 0");
  if (keyrange < 1 || keyrange > workloads::max_key) throw smr_error("keyrange out of range");
  if (insert_pct < 0 || insert_pct > 100) throw smr_error("insert percentage must be within [0, 100]");
  if (trials < 1) throw smr_error("trials must be >= 1");
  if (node_size < workloads::ordered_set::min_node_size())
    throw smr_error("node size below minimum of " + std::to_string(workloads::ordered_set::min_node_size()));
  if (ds != "bst" && ds != "list") throw smr_error("unknown data structure: " + ds);
  const auto r = resolve_reclaimer(reclaimer, policy);
  const auto& ids = reclaimer_ids();
  if (std::find(ids.begin(), ids.end(), r.id) == ids.end()) throw smr_error("unknown reclaimer: " + reclaimer);
}

std::string config_id(const bench_config& c) {
  const auto r = resolve_reclaimer(c.reclaimer, c.policy);
  return r.id + "-" + std::string(to_string(r.policy)) + "-" + c.ds + "-t" + std::to_string(c.threads);
}

std::uint64_t prefill_tolerance(std::int64_t keyrange) {
  const double target = static_cast<double>(keyrange) / 2.0;
  return static_cast<std::uint64_t>(std::ceil(std::max(0.01 * target, std::sqrt(static_cast<double>(keyrange)))));
}

trial_result run_trial(const bench_config& cfg, std::size_t trial_index) {
  cfg.validate();
  const auto resolved = resolve_reclaimer(cfg.reclaimer, cfg.policy);
  const std::size_t n = cfg.threads;

  std::unique_ptr<timeline::recorder> tl;
  if (!cfg.timeline_dir.empty()) tl = std::make_unique<timeline::recorder>(n, cfg.timeline_capacity);

  reclaimer_config rc;
  rc.max_threads = n;
  rc.policy = resolved.policy;
  rc.af_quota = cfg.af_quota;
  rc.af_high_water = cfg.af_high_water;
  rc.debug_oracle = cfg.debug_oracle;
  rc.on_violation = oracle_action::abort;
  rc.timeline = tl.get();
  rc.record_single_frees = cfg.timeline_single_frees;
  algorithm_options ao;
  ao.epoch.scan_every = cfg.scan_every;
  ao.epoch.bag_threshold = cfg.bag_threshold;
  ao.token_kfree = cfg.token_kfree;
  auto rec = make_reclaimer(resolved.id, rc, ao);
  auto set = workloads::make_set(cfg.ds, *rec, cfg.node_size);

  const auto canary0 = debug::canary_hits();
  const std::int64_t target = cfg.keyrange / 2;
  const auto tolerance = static_cast<std::int64_t>(prefill_tolerance(cfg.keyrange));

  std::atomic<int> ph{waiting};
  std::atomic<std::size_t> ready{0}, parked{0}, finished{0};
  std::atomic<bool> prefill_failed{false};
  std::vector<worker_state> ws(n);
  const auto start = clock_type::now();

  auto worker = [&](std::size_t index) {
    pin_current_thread(cfg.pin, index, n);
    auto h = rec->register_thread();
    const auto tid = h.id();
    std::mt19937_64 rng(thread_seed(cfg.seed + trial_index * 1'000'003ULL, index));
    std::int64_t net = 0;
    const auto range = static_cast<std::uint64_t>(cfg.keyrange);
    auto one_op = [&] {
      const auto key = static_cast<std::int64_t>(rng() % range);
      const bool ins = static_cast<int>(rng() % 100) < cfg.insert_pct;
      op_guard g(*rec, h);
      if (ins) {
        if (!set->insert(h, key)) ++net;
      } else {
        if (set->erase(h, key)) --net;
      }
    };
    auto& me = ws[tid];
    ready.fetch_add(1);
    while (ph.load(std::memory_order_acquire) == waiting) std::this_thread::yield();

    if (cfg.prefill && cfg.deterministic()) {
      int stable = 0;
      while (stable < 2) {
        for (std::uint64_t i = 0; i < cfg.prefill_check_ops; ++i) one_op();
        me.prefill_ops += cfg.prefill_check_ops;
        stable = std::llabs(net - target) <= tolerance ? stable + 1 : 0;
        if (stable < 2 && seconds_since(start) > cfg.prefill_timeout_s) {
          prefill_failed.store(true);
          break;
        }
      }
    } else if (cfg.prefill) {
      while (ph.load(std::memory_order_relaxed) == prefilling) {
        one_op();
        ++me.prefill_ops;
        me.net.store(net, std::memory_order_relaxed);
      }
    }
    me.net.store(net, std::memory_order_relaxed);
    parked.fetch_add(1, std::memory_order_acq_rel);

    int p;
    while ((p = ph.load(std::memory_order_acquire)) < measuring) std::this_thread::yield();
    std::uint64_t done = 0;
    if (p == measuring) {
      if (cfg.ops > 0) {
        for (; done < cfg.ops; ++done) one_op();
      } else {
        while (ph.load(std::memory_order_relaxed) == measuring) {
          one_op();
          ++done;
        }
      }
    }
    me.ops = done;
    me.net.store(net, std::memory_order_relaxed);
    rec->unregister_thread(h);
    finished.fetch_add(1, std::memory_order_acq_rel);
  };

  std::vector<std::thread> pool;
  pool.reserve(n);
  for (std::size_t i = 0; i < n; ++i) pool.emplace_back(worker, i);
  while (ready.load() < n) std::this_thread::yield();

  auto abort_trial = [&](const std::string& why) {
    ph.store(aborting, std::memory_order_release);
    for (auto& t : pool) t.join();
    rec->drain();
    throw smr_error(why);
  };

  ph.store(cfg.prefill ? prefilling : paused, std::memory_order_release);
  if (cfg.prefill && !cfg.deterministic()) {
    int stable = 0;
    const auto step = std::chrono::duration<double>(cfg.prefill_check_s);
    while (stable < 2) {
      std::this_thread::sleep_for(step);
      std::int64_t size = 0;
      for (const auto& w : ws) size += w.net.load(std::memory_order_relaxed);
      stable = std::llabs(size - target) <= tolerance ? stable + 1 : 0;
      if (stable < 2 && seconds_since(start) > cfg.prefill_timeout_s) {
        prefill_failed.store(true);
        break;
      }
    }
    if (!prefill_failed.load()) ph.store(paused, std::memory_order_release);
  }
  while (parked.load(std::memory_order_acquire) < n) {
    if (prefill_failed.load()) break;
    std::this_thread::yield();
  }
  if (prefill_failed.load()) abort_trial("prefill timeout");

  trial_result r;
  std::int64_t prefill_size = 0;
  for (const auto& w : ws) prefill_size += w.net.load(std::memory_order_relaxed);
  r.prefill_size = static_cast<std::uint64_t>(std::max<std::int64_t>(prefill_size, 0));

  // Everyone is parked between operations: take the baselines.
  const auto freed0 = rec->lifetime_freed();
  const auto epochs0 = rec->epochs();
  std::vector<std::uint64_t> free_ns0(n), thread_retired0(n);
  for (std::size_t i = 0; i < n; ++i) {
    free_ns0[i] = rec->free_time_ns(i);
    thread_retired0[i] = rec->thread_retired(i);
  }
  if (tl)
    for (std::size_t i = 0; i < n; ++i) tl->buffer(i).clear();

  rss_sampler sampler(10);
  const auto t0 = clock_type::now();
  ph.store(measuring, std::memory_order_release);
  if (cfg.ops == 0) {
    std::this_thread::sleep_for(std::chrono::duration<double>(cfg.duration_s));
    ph.store(stopping, std::memory_order_release);
  }
  while (finished.load(std::memory_order_acquire) < n) std::this_thread::sleep_for(std::chrono::microseconds(200));
  const double elapsed = seconds_since(t0);
  for (auto& t : pool) t.join();
  sampler.stop();

  r.config_id = config_id(cfg);
  r.threads = n;
  r.reclaimer = resolved.id;
  r.policy = rec->config().policy;
  r.ds = cfg.ds;
  r.trial = trial_index;
  r.seed = cfg.seed;
  r.duration_s = elapsed;
  r.node_size = cfg.node_size;
  r.keyrange = cfg.keyrange;
  r.allocator = cfg.allocator_label.empty() ? detect_allocator().label : cfg.allocator_label;
  for (std::size_t i = 0; i < n; ++i) {
    r.thread_ops.push_back(ws[i].ops);
    r.thread_retired.push_back(rec->thread_retired(i) - thread_retired0[i]);
    r.ops += ws[i].ops;
    r.prefill_ops += ws[i].prefill_ops;
  }
  r.ops_per_sec = elapsed > 0 ? static_cast<double>(r.ops) / elapsed : 0;
  r.peak_mib = sampler.peak_mib();
  r.rss_ok = sampler.ok();
  r.rss_samples = sampler.samples();
  r.epochs = rec->epochs() - epochs0;
  r.freed_in_run = rec->lifetime_freed() - freed0;
  std::uint64_t free_ns = 0;
  for (std::size_t i = 0; i < n; ++i) free_ns += rec->free_time_ns(i) - free_ns0[i];
  r.pct_time_freeing = elapsed > 0 ? 100.0 * static_cast<double>(free_ns) / (1e9 * elapsed * static_cast<double>(n)) : 0;

  // Per-epoch garbage, measured window only.
  std::map<std::uint64_t, std::pair<std::uint64_t, std::size_t>> by_epoch;
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& g : rec->garbage_log(i))
      if (g.epoch > epochs0) {
        auto& slot = by_epoch[g.epoch];
        slot.first += g.garbage;
        slot.second += 1;
      }
  for (const auto& [e, v] : by_epoch) r.garbage.push_back({e, v.first, v.second});

  if (tl) {
    for (std::size_t i = 0; i < n; ++i) r.timeline_drops += tl->buffer(i).dropped();
    std::map<std::string, std::string> meta{{"reclaimer", r.reclaimer},
                                            {"policy", std::string(to_string(r.policy))},
                                            {"ds", r.ds},
                                            {"threads", std::to_string(n)},
                                            {"trial", std::to_string(trial_index)},
                                            {"seed", std::to_string(cfg.seed)},
                                            {"node_size", std::to_string(cfg.node_size)},
                                            {"keyrange", std::to_string(cfg.keyrange)}};
    tl->flush(cfg.timeline_dir / (r.config_id + "_trial" + std::to_string(trial_index)), meta);
  }

  rec->drain();
  r.retired = rec->lifetime_retired();
  r.freed = rec->lifetime_freed();
  r.leaked = rec->leaked();
  r.oracle_violations = rec->oracle_violations();
  r.canary_hits = debug::canary_hits() - canary0;
  set.reset();
  return r;
}

std::vector<trial_result> run_trials(const bench_config& config) {
  std::vector<trial_result> out;
  for (std::size_t t = 0; t < config.trials; ++t) out.push_back(run_trial(config, t));
  return out;
}

}  // namespace smr::bench
