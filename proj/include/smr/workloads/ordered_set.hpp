#pragma once

// Concurrent integer sets used as reclamation workloads. Every call must be
// made inside begin_op/end_op on the caller's handle; nodes unlinked by an
// operation are retired through the reclaimer, never freed directly.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <new>
#include <string_view>
#include <vector>

#include "smr/oracle.hpp"
#include "smr/reclaimer.hpp"

namespace smr::workloads {

inline constexpr std::size_t default_node_size = 240;

// Keys must stay below this; the two values above it are sentinels.
inline constexpr std::int64_t max_key = std::numeric_limits<std::int64_t>::max() - 2;

class ordered_set {
 public:
  ordered_set(reclaimer& rec, std::size_t node_size) : rec_(rec), node_size_(node_size) {
    check_canary_ = rec.debug_enabled();
  }
  virtual ~ordered_set() = default;

  ordered_set(const ordered_set&) = delete;
  ordered_set& operator=(const ordered_set&) = delete;

  /// Returns whether key was present before the call.
  virtual bool insert(thread_handle& h, std::int64_t key) = 0;
  /// Returns whether key was present before the call.
  virtual bool erase(thread_handle& h, std::int64_t key) = 0;
  virtual bool contains(thread_handle& h, std::int64_t key) = 0;

  // Quiescent only.
  virtual std::size_t size() const = 0;
  virtual std::vector<std::int64_t> keys() const = 0;

  virtual std::string_view name() const = 0;
  std::size_t node_size() const { return node_size_; }
  static std::size_t min_node_size();

 protected:
  void* allocate() const { return ::operator new(node_size_); }
  void free_now(void* p) const { ::operator delete(p); }
  void retire(thread_handle& h, void* p) {
    rec_.retire(h, retired_object{p, static_cast<std::uint32_t>(node_size_), dealloc::system});
  }
  void check(const void* node, std::uint64_t canary) const {
    if (check_canary_ && canary != debug::live_canary) [[unlikely]]
      debug::report_canary_hit(node);
  }

  reclaimer& rec_;
  std::size_t node_size_;
  bool check_canary_ = false;
};

/// "bst" or "list". Throws smr_error for other ids or a node size too small
/// for the node layout.
std::unique_ptr<ordered_set> make_set(std::string_view id, reclaimer& rec, std::size_t node_size = default_node_size);

}  // namespace smr::workloads
