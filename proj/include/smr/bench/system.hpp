#pragma once

// Process-level helpers: resident set sampling, thread pinning and a guess at
// which allocator is active.

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <thread>

namespace smr::bench {

enum class pin_policy { none, compact, scatter };
std::optional<pin_policy> parse_pin(std::string_view s);

/// Current resident set size in bytes, or nullopt if /proc is unavailable.
std::optional<std::uint64_t> resident_bytes();

/// Samples the RSS on its own thread until stop().
class rss_sampler {
 public:
  explicit rss_sampler(unsigned interval_ms = 10);
  ~rss_sampler();
  rss_sampler(const rss_sampler&) = delete;
  rss_sampler& operator=(const rss_sampler&) = delete;

  void stop();
  double peak_mib() const { return static_cast<double>(peak_.load()) / (1024.0 * 1024.0); }
  std::size_t samples() const { return samples_.load(); }
  bool ok() const { return ok_.load(); }

 private:
  std::atomic<bool> stop_{false};
  std::atomic<std::uint64_t> peak_{0};
  std::atomic<std::size_t> samples_{0};
  std::atomic<bool> ok_{true};
  std::thread thread_;
};

struct allocator_info {
  std::string label;         // e.g. "glibc-2.35+tcache", "jemalloc", "mimalloc"
  bool thread_cache = false;  // per-thread free caches in front of shared state
};

allocator_info detect_allocator();

/// Pins the calling thread. index is the worker number; n the worker count.
void pin_current_thread(pin_policy policy, std::size_t index, std::size_t n);

}  // namespace smr::bench
