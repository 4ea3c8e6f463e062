#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace smr {

inline constexpr std::size_t cache_line = 64;

/// Raised for contract violations of the reclaimer API (double registration,
/// nested operations, draining with active threads, ...).
class smr_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Selects the routine used to hand an object back to the allocator.
struct dealloc_tag {
  std::uint8_t value = 0;
  friend constexpr bool operator==(dealloc_tag, dealloc_tag) = default;
};

using dealloc_fn = void (*)(void* object, std::size_t size, void* context);

namespace dealloc {

inline constexpr std::size_t max_routines = 32;

/// Tag 0: ::operator delete.
inline constexpr dealloc_tag system{0};

/// Registers a routine and returns its tag. Throws once the table is full.
dealloc_tag register_routine(dealloc_fn fn, void* context = nullptr);

void invoke(dealloc_tag tag, void* object, std::size_t size);

}  // namespace dealloc

inline constexpr std::uint64_t no_snapshot = std::numeric_limits<std::uint64_t>::max();

/// An unlinked node waiting for its grace period.
struct retired_object {
  void* object = nullptr;
  std::uint32_t size_bytes = 0;
  dealloc_tag tag{};
  // Logical time of the retiring reclaimer: epoch, token round or quiescence
  // counter. Filled in by retire().
  std::uint64_t retire_stamp = 0;
  // Debug-mode oracle snapshot handle.
  std::uint64_t snapshot = no_snapshot;
};

}  // namespace smr
