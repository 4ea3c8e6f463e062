#pragma once

// Reclaimer abstraction shared by every algorithm in the library.
//
// Usage from a worker thread:
//
//   auto h = rec.register_thread();
//   rec.begin_op(h);
//   ... traverse, unlink node ...
//   rec.retire(h, {node, sizeof(*node)});
//   rec.end_op(h);
//
// The base class owns thread registration, operation bookkeeping, the free
// path (immediate batch free or amortized free), statistics and the debug
// oracle. Algorithms plug in through the protected hooks.

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "smr/freeable_list.hpp"
#include "smr/oracle.hpp"
#include "smr/retired_object.hpp"
#include "smr/timeline.hpp"

namespace smr {

enum class free_policy : std::uint8_t {
  batch,      // free a released batch immediately
  amortized,  // park it in the freeable list, free a few objects per begin_op
};

std::string_view to_string(free_policy p);
std::optional<free_policy> parse_free_policy(std::string_view s);

struct reclaimer_config {
  std::size_t max_threads = 64;
  free_policy policy = free_policy::batch;
  std::size_t af_quota = default_af_quota;
  std::size_t af_high_water = default_af_high_water;
  // Poison + quarantine freed objects and check every free against the
  // grace-period oracle. Also enabled by SMR_DEBUG_ORACLE=1.
  bool debug_oracle = false;
  oracle_action on_violation = oracle_action::abort;
  // Lets one OS thread drive several handles (deterministic schedule tests).
  bool simulated_threads = false;
  timeline::recorder* timeline = nullptr;
  // Record a SINGLE_FREE interval around every individual deallocation.
  bool record_single_frees = false;
  // Per-thread capacity of the per-epoch garbage log.
  std::size_t garbage_log_capacity = 1 << 16;
};

class reclaimer;

/// Per-thread registration. Move-only; must stay on the registering thread.
class thread_handle {
 public:
  thread_handle() = default;
  thread_handle(thread_handle&& other) noexcept { *this = std::move(other); }
  thread_handle& operator=(thread_handle&& other) noexcept {
    owner_ = std::exchange(other.owner_, nullptr);
    id_ = other.id_;
    return *this;
  }
  thread_handle(const thread_handle&) = delete;
  thread_handle& operator=(const thread_handle&) = delete;

  std::size_t id() const { return id_; }
  bool valid() const { return owner_ != nullptr; }
  bool registered() const;
  std::uint64_t op_counter() const;
  bool in_operation() const;

 private:
  friend class reclaimer;
  thread_handle(reclaimer* owner, std::size_t id) : owner_(owner), id_(id) {}

  reclaimer* owner_ = nullptr;
  std::size_t id_ = 0;
};

/// One (epoch, unreclaimed objects) sample taken when a thread enters an epoch.
struct garbage_sample {
  std::uint64_t epoch;
  std::uint64_t garbage;
};

class reclaimer {
 public:
  explicit reclaimer(reclaimer_config config);
  virtual ~reclaimer();

  reclaimer(const reclaimer&) = delete;
  reclaimer& operator=(const reclaimer&) = delete;

  virtual std::string_view name() const = 0;

  /// Errors: "already registered" if the calling OS thread already holds a
  /// live handle, "ring full" once max_threads ids are in use.
  thread_handle register_thread();

  /// Leaves the session. The thread must be quiescent. Its pending objects are
  /// handed to drain(); a held token is passed on.
  void unregister_thread(thread_handle& h);

  void begin_op(thread_handle& h);
  void end_op(thread_handle& h);
  void retire(thread_handle& h, retired_object obj);

  /// Frees everything still pending in every bag, freeable list and orphan
  /// list. Every registered thread must be quiescent ("threads active"
  /// otherwise). Returns the number of objects freed by this call. When no
  /// thread is registered any more, thread ids are recycled afterwards.
  std::size_t drain();

  // Statistics. Safe to read at any time; exact at quiescent points.
  std::uint64_t lifetime_retired() const;
  std::uint64_t lifetime_freed() const;
  std::uint64_t leaked() const { return leaked_.load(std::memory_order_acquire); }
  std::uint64_t pending() const;
  std::uint64_t free_time_ns(std::size_t thread_id) const;
  std::uint64_t thread_freed(std::size_t thread_id) const;
  std::uint64_t thread_retired(std::size_t thread_id) const;
  virtual std::uint64_t epochs() const = 0;

  std::vector<garbage_sample> garbage_log(std::size_t thread_id) const;
  /// Per-epoch garbage: sum over threads of their samples for each epoch,
  /// ordered by epoch.
  std::vector<garbage_sample> garbage_series() const;

  const reclaimer_config& config() const { return config_; }
  std::size_t registered_count() const;
  std::size_t id_limit() const { return next_id_.load(std::memory_order_acquire); }
  bool debug_enabled() const { return oracle_ != nullptr; }
  grace_period_oracle* oracle() { return oracle_.get(); }
  std::uint64_t oracle_violations() const { return oracle_ ? oracle_->violations() : 0; }
  std::size_t freeable_size(std::size_t thread_id) const;

  std::uint64_t op_word_of(std::size_t thread_id) const {
    return slots_[thread_id].op_word.load(std::memory_order_acquire);
  }
  bool is_registered(std::size_t thread_id) const;

 protected:
  // Hooks. All except on_register / on_unregister / drain_thread run on the
  // owning thread.
  virtual void on_register(std::size_t tid) = 0;
  virtual void on_begin(std::size_t tid) = 0;
  virtual void on_end(std::size_t) {}
  /// Must set obj.retire_stamp and take ownership of obj.
  virtual void on_retire(std::size_t tid, retired_object& obj) = 0;
  /// Called under the registration barrier while tid is quiescent; move
  /// everything the thread still holds into out.
  virtual void drain_thread(std::size_t tid, std::vector<retired_object>& out) = 0;
  virtual void on_unregister(std::size_t) {}
  /// Called by drain() once no thread is registered.
  virtual void on_session_reset() {}
  /// Objects still held in the algorithm's own bags for tid.
  virtual std::size_t bag_size(std::size_t tid) const = 0;
  /// Reclaimer-specific debug check run before every deallocation.
  virtual bool grace_elapsed(std::size_t, const retired_object&) const { return true; }

  /// Hands a batch whose grace period has elapsed to the free path. Leaves
  /// batch empty (possibly with recycled capacity).
  void release(std::size_t tid, std::vector<retired_object>& batch);

  /// Frees a batch now, regardless of policy. Every `check_every` frees (0 =
  /// never) calls `between` so the caller can run protocol steps mid-batch.
  void free_batch_now(std::size_t tid, std::vector<retired_object>& batch, std::size_t check_every = 0,
                      const std::function<void()>& between = {});

  void deallocate(std::size_t tid, const retired_object& obj);

  /// Appends a garbage sample and a GARBAGE_COUNT event for tid.
  void note_garbage(std::size_t tid, std::uint64_t epoch);
  std::uint64_t unreclaimed(std::size_t tid) const { return bag_size(tid) + slots_[tid].freeable.size(); }

  timeline::event_buffer* events(std::size_t tid) const { return slots_[tid].events; }
  bool registered_and_present(std::size_t tid) const;
  bool departed(std::size_t tid) const;
  std::vector<retired_object> take_spare(std::size_t tid) { return slots_[tid].freeable.take_spare(); }
  void count_leak() { leaked_.fetch_add(1, std::memory_order_acq_rel); }

  reclaimer_config config_;

 private:
  struct alignas(cache_line) thread_slot {
    std::atomic<std::uint64_t> op_word{0};
    std::atomic<bool> registered{false};
    std::atomic<bool> departed{false};
    std::thread::id owner{};
    freeable_list freeable;
    // Single writer; atomics so that samplers can read them mid-run.
    std::atomic<std::uint64_t> retired{0};
    std::atomic<std::uint64_t> freed{0};
    std::atomic<std::uint64_t> free_ns{0};
    std::uint64_t last_stamp = 0;
    std::vector<garbage_sample> garbage;
    timeline::event_buffer* events = nullptr;
  };

  static void bump(std::atomic<std::uint64_t>& c, std::uint64_t by = 1) {
    c.store(c.load(std::memory_order_relaxed) + by, std::memory_order_release);
  }
  void free_one(std::size_t tid, const retired_object& obj);

  std::unique_ptr<thread_slot[]> slots_;
  std::vector<const std::atomic<std::uint64_t>*> words_;
  std::unique_ptr<grace_period_oracle> oracle_;
  std::atomic<std::size_t> next_id_{0};
  std::mutex barrier_;
  std::vector<retired_object> orphans_;
  std::atomic<std::uint64_t> orphan_freed_{0};
  std::atomic<std::uint64_t> leaked_{0};

  friend class thread_handle;
};

/// RAII begin_op / end_op pair.
class op_guard {
 public:
  op_guard(reclaimer& r, thread_handle& h) : r_(r), h_(h) { r_.begin_op(h_); }
  ~op_guard() { r_.end_op(h_); }
  op_guard(const op_guard&) = delete;
  op_guard& operator=(const op_guard&) = delete;

 private:
  reclaimer& r_;
  thread_handle& h_;
};

}  // namespace smr
