#pragma once

// Cheap timestamps for accumulating time spent in free(). Uses the TSC on
// x86-64 and the steady clock elsewhere; ticks are converted to nanoseconds
// with a one-off calibration.

#include <chrono>
#include <cstdint>

#if defined(__x86_64__) || defined(_M_X64)
#include <x86intrin.h>
#endif

namespace smr {

struct cycle_clock {
  static std::uint64_t now() {
#if defined(__x86_64__) || defined(_M_X64)
    return __rdtsc();
#else
    return static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count());
#endif
  }

  /// Nanoseconds per tick, measured once.
  static double ns_per_tick();

  static std::uint64_t to_ns(std::uint64_t ticks) { return static_cast<std::uint64_t>(ticks * ns_per_tick()); }
};

}  // namespace smr
