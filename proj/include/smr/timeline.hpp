#pragma once

// Per-thread interval recorder used to draw timeline graphs after a run.
//
// Each worker owns one event_buffer. Recording is a bounds check plus a store
// into a preallocated array: no locks, no syscalls, no allocation. Buffers are
// flushed to CSV once all workers have quiesced.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace smr::timeline {

#if defined(SMR_TIMELINE_STUB)
inline constexpr bool enabled = false;
#else
inline constexpr bool enabled = true;
#endif

inline constexpr std::size_t default_capacity = 100'000;

enum class event_kind : std::uint8_t {
  batch_free,
  single_free,
  epoch_advance,
  token_pass,
  garbage_count,
};

std::string_view to_string(event_kind kind);
std::optional<event_kind> parse_kind(std::string_view name);

struct event {
  event_kind kind = event_kind::batch_free;
  std::uint64_t start_ns = 0;
  std::uint64_t end_ns = 0;
  std::uint64_t value = 0;

  std::uint64_t duration_ns() const { return end_ns - start_ns; }
  friend bool operator==(const event&, const event&) = default;
};

// GARBAGE_COUNT events carry the epoch in the upper 24 bits of value and the
// count (saturated) in the lower 40.
inline constexpr unsigned garbage_count_bits = 40;
inline constexpr std::uint64_t garbage_count_mask = (std::uint64_t{1} << garbage_count_bits) - 1;

inline std::uint64_t pack_garbage(std::uint64_t epoch, std::uint64_t count) {
  if (count > garbage_count_mask) count = garbage_count_mask;
  return (epoch << garbage_count_bits) | count;
}
inline std::uint64_t garbage_epoch(std::uint64_t value) { return value >> garbage_count_bits; }
inline std::uint64_t garbage_count(std::uint64_t value) { return value & garbage_count_mask; }

inline std::uint64_t now_ns() {
  return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::nanoseconds>(
                                        std::chrono::steady_clock::now().time_since_epoch())
                                        .count());
}

enum class overflow_policy : std::uint8_t { drop_newest, overwrite_oldest };

class event_buffer {
 public:
  explicit event_buffer(std::size_t capacity = default_capacity,
                        overflow_policy policy = overflow_policy::drop_newest);

  event_buffer(const event_buffer&) = delete;
  event_buffer& operator=(const event_buffer&) = delete;

  /// True when the next record() will be stored without dropping anything.
  bool has_room() const { return size_ < capacity_; }
  /// False once a drop_newest buffer is full: the next event is only counted,
  /// so callers can skip reading the clock.
  bool wants_time() const { return size_ < capacity_ || policy_ == overflow_policy::overwrite_oldest; }

  void record(event_kind kind, std::uint64_t start_ns, std::uint64_t end_ns, std::uint64_t value) {
    if constexpr (!enabled) return;
    ++attempted_;
    if (size_ < capacity_) {
      events_[size_++] = event{kind, start_ns, end_ns, value};
      return;
    }
    ++dropped_;
    if (policy_ == overflow_policy::overwrite_oldest && capacity_ > 0) {
      events_[head_] = event{kind, start_ns, end_ns, value};
      head_ = (head_ + 1) % capacity_;
    }
  }

  void record_instant(event_kind kind, std::uint64_t value) {
    if constexpr (!enabled) return;
    const auto t = wants_time() ? now_ns() : 0;
    record(kind, t, t, value);
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return size_; }
  std::uint64_t dropped() const { return dropped_; }
  std::uint64_t attempted() const { return attempted_; }
  overflow_policy policy() const { return policy_; }

  /// Stored events, oldest first.
  std::vector<event> events() const;

  void clear();

 private:
  std::unique_ptr<event[]> events_;
  std::size_t capacity_;
  std::size_t size_ = 0;
  std::size_t head_ = 0;  // oldest slot once a ring buffer has wrapped
  std::uint64_t dropped_ = 0;
  std::uint64_t attempted_ = 0;
  overflow_policy policy_;
};

/// One buffer per thread slot, plus the shared clock origin.
class recorder {
 public:
  recorder(std::size_t threads, std::size_t capacity = default_capacity,
           overflow_policy policy = overflow_policy::drop_newest);

  std::size_t thread_count() const { return buffers_.size(); }
  event_buffer& buffer(std::size_t thread_id) { return *buffers_.at(thread_id); }
  const event_buffer& buffer(std::size_t thread_id) const { return *buffers_.at(thread_id); }
  std::uint64_t origin_ns() const { return origin_ns_; }

  /// Writes dir/thread_<id>.csv for every buffer and then dir/manifest.txt.
  /// The manifest is written last through a rename, so a failed flush never
  /// leaves one behind. Throws std::runtime_error on I/O failure.
  std::vector<std::filesystem::path> flush(const std::filesystem::path& dir,
                                           const std::map<std::string, std::string>& run_config = {}) const;

 private:
  std::vector<std::unique_ptr<event_buffer>> buffers_;
  std::uint64_t origin_ns_;
};

/// Events whose duration is at least min_duration_ns, order preserved.
std::vector<event> filter_threshold(std::span<const event> events, std::uint64_t min_duration_ns);

inline constexpr std::string_view csv_header = "kind,start_ns,end_ns,value";

std::vector<event> read_thread_csv(const std::filesystem::path& path);

using manifest = std::map<std::string, std::string>;
manifest read_manifest(const std::filesystem::path& path);

}  // namespace smr::timeline
