#include "smr/bench/system.hpp"

#include <dlfcn.h>
#include <gnu/libc-version.h>
#include <pthread.h>
#include <sched.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <vector>

namespace smr::bench {

std::optional<pin_policy> parse_pin(std::string_view s) {
  if (s == "none") return pin_policy::none;
  if (s == "compact") return pin_policy::compact;
  if (s == "scatter") return pin_policy::scatter;
  return std::nullopt;
}

std::optional<std::uint64_t> resident_bytes() {
  std::FILE* f = std::fopen("/proc/self/statm", "r");
  if (f == nullptr) return std::nullopt;
  unsigned long size = 0, resident = 0;
  const int n = std::fscanf(f, "%lu %lu", &size, &resident);
  std::fclose(f);
  if (n != 2) return std::nullopt;
  return static_cast<std::uint64_t>(resident) * static_cast<std::uint64_t>(::sysconf(_SC_PAGESIZE));
}

rss_sampler::rss_sampler(unsigned interval_ms) {
  thread_ = std::thread([this, interval_ms] {
    const auto step = std::chrono::milliseconds(interval_ms);
    auto next = std::chrono::steady_clock::now();
    while (!stop_.load(std::memory_order_acquire)) {
      if (auto r = resident_bytes()) {
        if (*r > peak_.load(std::memory_order_relaxed)) peak_.store(*r, std::memory_order_relaxed);
        samples_.fetch_add(1, std::memory_order_relaxed);
      } else {
        ok_.store(false, std::memory_order_relaxed);
      }
      next += step;
      std::this_thread::sleep_until(next);
    }
  });
}

rss_sampler::~rss_sampler() { stop(); }

void rss_sampler::stop() {
  stop_.store(true, std::memory_order_release);
  if (thread_.joinable()) thread_.join();
}

allocator_info detect_allocator() {
  if (::dlsym(RTLD_DEFAULT, "mi_malloc") != nullptr) return {"mimalloc", false};
  if (::dlsym(RTLD_DEFAULT, "mallctl") != nullptr) return {"jemalloc", true};
  if (::dlsym(RTLD_DEFAULT, "tc_malloc") != nullptr) return {"tcmalloc", true};
  std::string label = std::string("glibc-") + ::gnu_get_libc_version();
  int major = 0, minor = 0;
  std::sscanf(::gnu_get_libc_version(), "%d.%d", &major, &minor);
  bool tcache = major > 2 || (major == 2 && minor >= 26);
  if (const char* t = std::getenv("GLIBC_TUNABLES"); t != nullptr && std::strstr(t, "tcache_count=0") != nullptr)
    tcache = false;
  label += tcache ? "+tcache" : "-notcache";
  return {label, tcache};
}

void pin_current_thread(pin_policy policy, std::size_t index, std::size_t n) {
  if (policy == pin_policy::none) return;
  cpu_set_t allowed;
  CPU_ZERO(&allowed);
  if (::sched_getaffinity(0, sizeof(allowed), &allowed) != 0) return;
  std::vector<int> cpus;
  for (int c = 0; c < CPU_SETSIZE; ++c)
    if (CPU_ISSET(c, &allowed)) cpus.push_back(c);
  if (cpus.empty()) return;
  std::size_t slot = index;
  if (policy == pin_policy::scatter && n > 0) {
    // Spread workers over the whole list before doubling up.
    slot = (index * cpus.size()) / std::max<std::size_t>(n, 1);
    if (n > cpus.size()) slot = index;
  }
  cpu_set_t one;
  CPU_ZERO(&one);
  CPU_SET(cpus[slot % cpus.size()], &one);
  ::pthread_setaffinity_np(::pthread_self(), sizeof(one), &one);
}

}  // namespace smr::bench
