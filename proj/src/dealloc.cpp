#include "smr/retired_object.hpp"

#include <array>
#include <atomic>
#include <mutex>
#include <new>

namespace smr::dealloc {
namespace {

struct routine {
  dealloc_fn fn = nullptr;
  void* context = nullptr;
};

void system_delete(void* object, std::size_t, void*) { ::operator delete(object); }

struct table {
  std::array<routine, max_routines> entries{};
  std::atomic<std::size_t> count{1};
  std::mutex mutex;

  table() { entries[0] = {&system_delete, nullptr}; }
};

table& routines() {
  static table t;
  return t;
}

}  // namespace

dealloc_tag register_routine(dealloc_fn fn, void* context) {
  auto& t = routines();
  std::lock_guard lock(t.mutex);
  const auto n = t.count.load(std::memory_order_relaxed);
  if (n >= max_routines) throw smr_error("dealloc routine table full");
  t.entries[n] = {fn, context};
  t.count.store(n + 1, std::memory_order_release);
  return dealloc_tag{static_cast<std::uint8_t>(n)};
}

void invoke(dealloc_tag tag, void* object, std::size_t size) {
  auto& t = routines();
  if (tag.value >= t.count.load(std::memory_order_acquire))
    throw smr_error("unknown dealloc tag " + std::to_string(tag.value));
  const auto& r = t.entries[tag.value];
  r.fn(object, size, r.context);
}

}  // namespace smr::dealloc
