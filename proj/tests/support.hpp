#pragma once

// Test helpers: an instrumented dealloc routine and small object factories.

#include <cstdint>
#include <mutex>
#include <new>
#include <unordered_set>
#include <vector>

#include "smr/reclaimer.hpp"

namespace test_support {

struct dealloc_log {
  std::mutex mutex;
  std::uint64_t count = 0;
  std::uint64_t duplicates = 0;
  std::unordered_set<void*> seen;
  std::vector<void*> order;
  bool keep_order = false;
  void (*hook)(std::uint64_t count) = nullptr;

  void reset(bool order_log = false) {
    std::lock_guard lock(mutex);
    count = 0;
    duplicates = 0;
    seen.clear();
    order.clear();
    keep_order = order_log;
    hook = nullptr;
  }
};

inline dealloc_log& log() {
  static dealloc_log l;
  return l;
}

inline void counting_delete(void* p, std::size_t, void*) {
  auto& l = log();
  std::uint64_t c;
  {
    std::lock_guard lock(l.mutex);
    if (!l.seen.insert(p).second) ++l.duplicates;
    if (l.keep_order) l.order.push_back(p);
    c = ++l.count;
  }
  ::operator delete(p);
  if (l.hook) l.hook(c);
}

inline smr::dealloc_tag counting_tag() {
  static const smr::dealloc_tag tag = smr::dealloc::register_routine(&counting_delete);
  return tag;
}

inline smr::retired_object object(std::uint32_t size = 16) {
  void* p = ::operator new(size);
  {
    // The allocator may hand back an address freed earlier.
    auto& l = log();
    std::lock_guard lock(l.mutex);
    l.seen.erase(p);
  }
  return smr::retired_object{p, size, counting_tag()};
}

inline smr::reclaimer_config sim_config(std::size_t threads, smr::free_policy policy = smr::free_policy::batch) {
  smr::reclaimer_config c;
  c.max_threads = threads;
  c.policy = policy;
  c.simulated_threads = true;
  return c;
}

}  // namespace test_support
