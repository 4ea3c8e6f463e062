#pragma once

// Benchmark driver: prefill a set until its size settles, then run the
// coin-flip insert/delete workload for a fixed time (or a fixed number of
// operations) and collect throughput, memory and reclamation statistics.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "smr/bench/system.hpp"
#include "smr/factory.hpp"
#include "smr/reclaimer.hpp"
#include "smr/workloads/ordered_set.hpp"

namespace smr::bench {

struct bench_config {
  std::size_t threads = 1;
  std::int64_t keyrange = 20'000'000;
  int insert_pct = 50;
  double duration_s = 5.0;
  std::size_t trials = 3;
  std::string reclaimer = "debra";
  free_policy policy = free_policy::batch;
  std::string ds = "bst";
  std::size_t node_size = workloads::default_node_size;
  std::uint64_t seed = 1;
  pin_policy pin = pin_policy::none;
  std::string allocator_label;  // empty: detected at run time
  std::size_t af_quota = default_af_quota;
  std::size_t af_high_water = default_af_high_water;
  std::size_t token_kfree = default_token_kfree;
  std::size_t scan_every = 1;
  std::size_t bag_threshold = 0;
  // Fixed operation count per thread instead of a duration. With one thread
  // this makes the whole trial deterministic.
  std::uint64_t ops = 0;
  bool debug_oracle = false;
  std::filesystem::path timeline_dir;  // empty: no timeline output
  std::size_t timeline_capacity = timeline::default_capacity;
  bool timeline_single_frees = false;
  bool prefill = true;
  double prefill_timeout_s = 60.0;
  double prefill_check_s = 0.1;
  std::uint64_t prefill_check_ops = 4096;  // deterministic mode only

  /// Throws smr_error on invalid values.
  void validate() const;
  bool deterministic() const { return threads == 1 && ops > 0; }
};

/// Canonical reclaimer id and effective policy, e.g. "token_af-amortized-bst-t8".
std::string config_id(const bench_config& c);

struct trial_result {
  std::string config_id;
  std::size_t threads = 0;
  std::string reclaimer;
  free_policy policy = free_policy::batch;
  std::string ds;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::uint64_t ops = 0;
  double duration_s = 0;
  double ops_per_sec = 0;
  double peak_mib = 0;
  bool rss_ok = true;
  std::size_t rss_samples = 0;
  std::uint64_t retired = 0;  // lifetime, prefill included
  std::uint64_t freed = 0;    // lifetime, after drain
  std::uint64_t freed_in_run = 0;
  std::uint64_t leaked = 0;
  std::uint64_t epochs = 0;  // during the measured window
  double pct_time_freeing = 0;
  std::uint64_t oracle_violations = 0;
  std::uint64_t canary_hits = 0;
  std::uint64_t timeline_drops = 0;
  std::uint64_t prefill_size = 0;
  std::uint64_t prefill_ops = 0;
  std::size_t node_size = 0;
  std::int64_t keyrange = 0;
  std::string allocator;
  std::vector<std::uint64_t> thread_ops;
  std::vector<std::uint64_t> thread_retired;
  // Per-epoch garbage during the measured window: (epoch, total, threads
  // that reported the epoch).
  struct garbage_point {
    std::uint64_t epoch;
    std::uint64_t garbage;
    std::size_t threads_reporting;
  };
  std::vector<garbage_point> garbage;
};

/// Prefill tolerance: max(1% of the target, sqrt(keyrange)).
std::uint64_t prefill_tolerance(std::int64_t keyrange);

/// Runs one trial. Throws smr_error("prefill timeout") if the set does not
/// settle in time.
trial_result run_trial(const bench_config& config, std::size_t trial_index);

/// Runs config.trials trials.
std::vector<trial_result> run_trials(const bench_config& config);

/// Writes results.csv, summary.csv and garbage.csv into dir. Each file goes
/// through a temporary name and a rename; on failure nothing is published.
void emit_results(const std::vector<trial_result>& results, const std::filesystem::path& dir);

std::string results_csv(const std::vector<trial_result>& results);
std::string summary_csv(const std::vector<trial_result>& results);
std::string garbage_csv(const std::vector<trial_result>& results);

inline constexpr std::string_view results_header =
    "threads,reclaimer,policy,ops_per_sec,peak_mib,retired,freed,epochs,ds,trial,seed,ops,duration_s,"
    "freed_in_run,leaked,pct_time_freeing,oracle_violations,canary_hits,timeline_drops,prefill_size,"
    "rss_samples,rss_ok,node_size,keyrange,allocator,config_id";

}  // namespace smr::bench
