#pragma once

// Debug-mode grace-period oracle.
//
// Every thread publishes an operation word: (op_counter << 1) | active. At
// retire time the oracle copies all words. When the object is about to be
// freed, each thread that was inside an operation at retire time must have
// left that operation since: either its counter moved on, or it is now
// quiescent. Otherwise it may still hold a reference obtained before the
// unlink.

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "smr/retired_object.hpp"

namespace smr {

inline constexpr std::uint64_t op_word(std::uint64_t counter, bool active) {
  return (counter << 1) | (active ? 1U : 0U);
}
inline constexpr std::uint64_t op_counter_of(std::uint64_t word) { return word >> 1; }
inline constexpr bool op_active(std::uint64_t word) { return (word & 1U) != 0; }

enum class verdict { pass, fail };

/// Pure check. On fail, *violator receives the first offending thread id.
verdict check_grace(std::span<const std::uint64_t> snapshot, std::span<const std::uint64_t> now,
                    std::size_t* violator = nullptr);

enum class oracle_action {
  abort,  // print diagnostics and exit with status 2
  count,  // record the violation and keep going (tests)
};

inline constexpr int oracle_exit_code = 2;

struct oracle_violation {
  std::size_t thread_id = 0;  // thread still inside its retire-time operation
  std::size_t freeing_thread = 0;
  std::uint64_t retire_stamp = 0;
  std::vector<std::uint64_t> snapshot;
  std::vector<std::uint64_t> now;
  std::string reason;
};

/// True when SMR_DEBUG_ORACLE=1 is set in the environment.
bool debug_oracle_from_env();

class grace_period_oracle {
 public:
  grace_period_oracle(std::size_t max_threads, oracle_action action);

  grace_period_oracle(const grace_period_oracle&) = delete;
  grace_period_oracle& operator=(const grace_period_oracle&) = delete;
  ~grace_period_oracle();

  /// Copies the op words into the retiring thread's snapshot log and returns
  /// the handle to store in retired_object::snapshot.
  std::uint64_t take_snapshot(std::size_t retiring_thread, std::span<const std::atomic<std::uint64_t>* const> words);

  std::span<const std::uint64_t> snapshot(std::uint64_t handle) const;

  /// Checks obj against the current op words, then poisons and quarantines it
  /// (the memory is only released by release_quarantine()).
  verdict check_and_quarantine(std::size_t freeing_thread, const retired_object& obj,
                               std::span<const std::atomic<std::uint64_t>* const> words);

  /// Reports a violation found by a reclaimer-specific check.
  void report(oracle_violation v);

  std::uint64_t violations() const { return violation_count_.load(std::memory_order_acquire); }
  std::vector<oracle_violation> violation_log() const;
  std::uint64_t quarantined() const;

  /// Verifies the poison pattern of every quarantined object (a mismatch means
  /// a write after free) and returns the memory to the allocator.
  /// Returns the number of corrupted objects.
  std::size_t release_quarantine();

  static constexpr unsigned char poison_byte = 0xDB;

 private:
  struct snapshot_log {
    std::vector<std::uint64_t> words;
  };
  struct quarantined_object {
    void* object;
    std::uint32_t size;
    dealloc_tag tag;
  };

  std::size_t width_;
  oracle_action action_;
  std::vector<snapshot_log> logs_;
  mutable std::mutex mutex_;
  std::unordered_set<void*> freed_;
  std::vector<quarantined_object> quarantine_;
  std::vector<oracle_violation> log_;
  std::atomic<std::uint64_t> violation_count_{0};
};

namespace debug {

inline constexpr std::uint64_t live_canary = 0x5AFE'C0DE'5AFE'C0DEULL;

/// Counts a read of poisoned memory by a data structure traversal. Aborts the
/// process (exit status 2) unless set_canary_abort(false) was called.
void report_canary_hit(const void* node);
std::uint64_t canary_hits();
void reset_canary_hits();
void set_canary_abort(bool abort_on_hit);

}  // namespace debug

}  // namespace smr
