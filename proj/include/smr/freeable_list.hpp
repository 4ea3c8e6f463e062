#pragma once

// Amortized free: batches that have already passed their grace period are
// parked here and handed to the allocator a few objects per operation,
// instead of all at once.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <utility>
#include <vector>

#include "smr/retired_object.hpp"

namespace smr {

inline constexpr std::size_t default_af_quota = 1;
inline constexpr std::size_t default_af_batch = 32768;
inline constexpr std::size_t default_af_high_water = 10 * default_af_batch;

/// Thread-local FIFO of safe-to-free objects. Owner-thread exclusive.
class freeable_list {
 public:
  explicit freeable_list(std::size_t quota = default_af_quota, std::size_t high_water = default_af_high_water)
      : quota_(quota == 0 ? 1 : quota), high_water_(high_water) {}

  /// Appends a whole batch in order. Moves the vector, so the cost does not
  /// depend on the batch size.
  void enqueue_batch(std::vector<retired_object>&& batch) {
    if (batch.empty()) return;
    size_ += batch.size();
    enqueued_ += batch.size();
    batches_.push_back(std::move(batch));
    batch = take_spare();
  }

  /// Frees min(quota, size) objects from the front, or min(2 * quota, size)
  /// while the backlog is above the high-water mark.
  template <class Dealloc>
  std::size_t free_some(Dealloc&& dealloc) {
    if (size_ == 0) return 0;
    const std::size_t want = size_ > high_water_ ? 2 * quota_ : quota_;
    return pop_front(want, dealloc);
  }

  template <class Dealloc>
  std::size_t drain(Dealloc&& dealloc) {
    return pop_front(size_, dealloc);
  }

  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  std::size_t quota() const { return quota_; }
  std::size_t high_water() const { return high_water_; }
  std::uint64_t lifetime_enqueued() const { return enqueued_; }
  std::uint64_t lifetime_freed() const { return freed_; }

  /// An empty vector, reusing the capacity of a fully consumed batch when one
  /// is available.
  std::vector<retired_object> take_spare() {
    if (spares_.empty()) return {};
    auto v = std::move(spares_.back());
    spares_.pop_back();
    return v;
  }

  /// Moves every pending object out without freeing it.
  std::vector<retired_object> take_all() {
    std::vector<retired_object> out;
    out.reserve(size_);
    while (!batches_.empty()) {
      auto& front = batches_.front();
      out.insert(out.end(), front.begin() + static_cast<std::ptrdiff_t>(head_), front.end());
      batches_.pop_front();
      head_ = 0;
    }
    enqueued_ -= size_;
    size_ = 0;
    return out;
  }

 private:
  static constexpr std::size_t max_spares = 4;

  template <class Dealloc>
  std::size_t pop_front(std::size_t n, Dealloc& dealloc) {
    std::size_t done = 0;
    while (done < n && !batches_.empty()) {
      auto& front = batches_.front();
      // Count before calling out: the callback may re-enter this list.
      auto obj = front[head_++];
      --size_;
      ++freed_;
      ++done;
      if (head_ == front.size()) retire_front();
      dealloc(obj);
    }
    return done;
  }

  void retire_front() {
    auto v = std::move(batches_.front());
    batches_.pop_front();
    head_ = 0;
    if (spares_.size() < max_spares) {
      v.clear();
      spares_.push_back(std::move(v));
    }
  }

  std::deque<std::vector<retired_object>> batches_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
  std::size_t quota_;
  std::size_t high_water_;
  std::uint64_t enqueued_ = 0;
  std::uint64_t freed_ = 0;
  std::vector<std::vector<retired_object>> spares_;
};

}  // namespace smr
