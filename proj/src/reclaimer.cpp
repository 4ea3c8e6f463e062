#include "smr/reclaimer.hpp"

#include <map>
#include <thread>

#include "smr/cycle_clock.hpp"

namespace smr {

double cycle_clock::ns_per_tick() {
  static const double ratio = [] {
#if defined(__x86_64__) || defined(_M_X64)
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    const auto c0 = now();
    while (clock::now() - t0 < std::chrono::milliseconds(20)) {
    }
    const auto t1 = clock::now();
    const auto c1 = now();
    const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();
    return c1 > c0 ? static_cast<double>(ns) / static_cast<double>(c1 - c0) : 1.0;
#else
    using period = std::chrono::steady_clock::period;
    return 1e9 * static_cast<double>(period::num) / static_cast<double>(period::den);
#endif
  }();
  return ratio;
}

std::string_view to_string(free_policy p) { return p == free_policy::batch ? "batch" : "amortized"; }

std::optional<free_policy> parse_free_policy(std::string_view s) {
  if (s == "batch") return free_policy::batch;
  if (s == "amortized" || s == "af") return free_policy::amortized;
  return std::nullopt;
}

bool thread_handle::registered() const { return owner_ != nullptr && owner_->is_registered(id_); }
std::uint64_t thread_handle::op_counter() const { return owner_ ? op_counter_of(owner_->op_word_of(id_)) : 0; }
bool thread_handle::in_operation() const { return owner_ != nullptr && op_active(owner_->op_word_of(id_)); }

reclaimer::reclaimer(reclaimer_config config)
    : config_(config), slots_(std::make_unique<thread_slot[]>(config.max_threads)) {
  if (config_.max_threads == 0) throw smr_error("max_threads must be positive");
  config_.debug_oracle = config_.debug_oracle || debug_oracle_from_env();
  words_.reserve(config_.max_threads);
  for (std::size_t i = 0; i < config_.max_threads; ++i) {
    words_.push_back(&slots_[i].op_word);
    slots_[i].freeable = freeable_list(config_.af_quota, config_.af_high_water);
  }
  if (config_.debug_oracle) oracle_ = std::make_unique<grace_period_oracle>(config_.max_threads, config_.on_violation);
}

reclaimer::~reclaimer() = default;

thread_handle reclaimer::register_thread() {
  std::lock_guard lock(barrier_);
  const auto self = std::this_thread::get_id();
  const auto limit = next_id_.load(std::memory_order_acquire);
  if (!config_.simulated_threads) {
    for (std::size_t i = 0; i < limit; ++i)
      if (slots_[i].registered.load(std::memory_order_acquire) && slots_[i].owner == self)
        throw smr_error("already registered");
  }
  if (limit >= config_.max_threads) throw smr_error("ring full");

  auto& s = slots_[limit];
  s.owner = self;
  s.op_word.store(0, std::memory_order_relaxed);
  s.departed.store(false, std::memory_order_relaxed);
  s.last_stamp = 0;
  s.garbage.clear();
  s.garbage.reserve(config_.garbage_log_capacity);
  s.events = nullptr;
  if (config_.timeline != nullptr && limit < config_.timeline->thread_count())
    s.events = &config_.timeline->buffer(limit);
  on_register(limit);
  s.registered.store(true, std::memory_order_seq_cst);
  next_id_.store(limit + 1, std::memory_order_seq_cst);
  return thread_handle(this, limit);
}

void reclaimer::unregister_thread(thread_handle& h) {
  if (h.owner_ != this) throw smr_error("not registered");
  std::lock_guard lock(barrier_);
  const auto tid = h.id_;
  auto& s = slots_[tid];
  if (!s.registered.load(std::memory_order_acquire)) throw smr_error("not registered");
  if (op_active(s.op_word.load(std::memory_order_acquire))) throw smr_error("operation already open");

  s.registered.store(false, std::memory_order_seq_cst);
  s.departed.store(true, std::memory_order_seq_cst);
  on_unregister(tid);
  drain_thread(tid, orphans_);
  auto parked = s.freeable.take_all();
  orphans_.insert(orphans_.end(), parked.begin(), parked.end());
  h.owner_ = nullptr;
}

void reclaimer::begin_op(thread_handle& h) {
  if (h.owner_ != this) throw smr_error("not registered");
  const auto tid = h.id_;
  auto& s = slots_[tid];
  if (!s.registered.load(std::memory_order_relaxed)) throw smr_error("not registered");
  const auto w = s.op_word.load(std::memory_order_relaxed);
  if (op_active(w)) throw smr_error("operation already open");

  // Reclaimer work first: the thread holds no references yet, so frees and
  // token handling here happen outside the operation as far as the oracle is
  // concerned.
  on_begin(tid);

  if (config_.policy == free_policy::amortized && !s.freeable.empty()) {
    const auto t0 = cycle_clock::now();
    s.freeable.free_some([&](const retired_object& o) { free_one(tid, o); });
    bump(s.free_ns, cycle_clock::now() - t0);
  }

  s.op_word.store(op_word(op_counter_of(w) + 1, true), std::memory_order_seq_cst);
}

void reclaimer::end_op(thread_handle& h) {
  if (h.owner_ != this) throw smr_error("not registered");
  const auto tid = h.id_;
  auto& s = slots_[tid];
  const auto w = s.op_word.load(std::memory_order_relaxed);
  if (!op_active(w)) throw smr_error("no open operation");
  s.op_word.store(op_word(op_counter_of(w), false), std::memory_order_release);
  on_end(tid);
}

void reclaimer::retire(thread_handle& h, retired_object obj) {
  if (h.owner_ != this) throw smr_error("not registered");
  const auto tid = h.id_;
  auto& s = slots_[tid];
  if (!op_active(s.op_word.load(std::memory_order_relaxed))) throw smr_error("not in operation");
  if (obj.object == nullptr) throw smr_error("null object");

  if (oracle_) obj.snapshot = oracle_->take_snapshot(tid, words_);
  on_retire(tid, obj);
  if (oracle_ && obj.retire_stamp < s.last_stamp) {
    oracle_->report({tid, tid, obj.retire_stamp, {}, {}, "retire stamp went backwards"});
  }
  s.last_stamp = obj.retire_stamp;
  bump(s.retired);
}

void reclaimer::release(std::size_t tid, std::vector<retired_object>& batch) {
  if (batch.empty()) return;
  if (config_.policy == free_policy::amortized) {
    slots_[tid].freeable.enqueue_batch(std::move(batch));
  } else {
    free_batch_now(tid, batch);
  }
}

void reclaimer::free_batch_now(std::size_t tid, std::vector<retired_object>& batch, std::size_t check_every,
                               const std::function<void()>& between) {
  if (batch.empty()) return;
  auto& s = slots_[tid];
  const auto n = batch.size();
  const auto c0 = cycle_clock::now();
  std::uint64_t t0 = 0;
  bool timed = false;
  if constexpr (timeline::enabled)
    if (s.events && s.events->wants_time()) {
      timed = true;
      t0 = timeline::now_ns();
    }
  for (std::size_t i = 0; i < n; ++i) {
    free_one(tid, batch[i]);
    if (check_every != 0 && (i + 1) % check_every == 0 && between) between();
  }
  batch.clear();
  if constexpr (timeline::enabled)
    if (s.events) s.events->record(timeline::event_kind::batch_free, t0, timed ? timeline::now_ns() : 0, n);
  bump(s.free_ns, cycle_clock::now() - c0);
}

void reclaimer::deallocate(std::size_t tid, const retired_object& obj) { free_one(tid, obj); }

void reclaimer::free_one(std::size_t tid, const retired_object& obj) {
  auto& s = slots_[tid];
  if (oracle_) {
    if (!grace_elapsed(tid, obj))
      oracle_->report({tid, tid, obj.retire_stamp, {}, {}, std::string(name()) + " grace rule violated"});
    oracle_->check_and_quarantine(tid, obj, words_);
  } else if constexpr (timeline::enabled) {
    if (config_.record_single_frees && s.events && s.events->has_room()) {
      const auto t0 = timeline::now_ns();
      dealloc::invoke(obj.tag, obj.object, obj.size_bytes);
      s.events->record(timeline::event_kind::single_free, t0, timeline::now_ns(), 1);
    } else {
      dealloc::invoke(obj.tag, obj.object, obj.size_bytes);
    }
  } else {
    dealloc::invoke(obj.tag, obj.object, obj.size_bytes);
  }
  bump(s.freed);
}

std::size_t reclaimer::drain() {
  std::lock_guard lock(barrier_);
  const auto limit = next_id_.load(std::memory_order_acquire);
  for (std::size_t i = 0; i < limit; ++i) {
    if (slots_[i].registered.load(std::memory_order_acquire) &&
        op_active(slots_[i].op_word.load(std::memory_order_acquire)))
      throw smr_error("threads active");
  }

  std::size_t count = 0;
  std::vector<retired_object> pending_objs;
  for (std::size_t i = 0; i < limit; ++i) {
    pending_objs.clear();
    drain_thread(i, pending_objs);
    auto& s = slots_[i];
    const auto c0 = cycle_clock::now();
    for (const auto& o : pending_objs) {
      if (oracle_) {
        oracle_->check_and_quarantine(i, o, words_);
      } else {
        dealloc::invoke(o.tag, o.object, o.size_bytes);
      }
      bump(s.freed);
    }
    count += pending_objs.size();
    count += s.freeable.drain([&](const retired_object& o) { free_one(i, o); });
    bump(s.free_ns, cycle_clock::now() - c0);
  }
  for (const auto& o : orphans_) {
    if (oracle_) {
      oracle_->check_and_quarantine(0, o, words_);
    } else {
      dealloc::invoke(o.tag, o.object, o.size_bytes);
    }
  }
  count += orphans_.size();
  orphan_freed_.fetch_add(orphans_.size(), std::memory_order_acq_rel);
  orphans_.clear();

  bool any_registered = false;
  for (std::size_t i = 0; i < limit; ++i) any_registered |= slots_[i].registered.load(std::memory_order_acquire);
  if (!any_registered && limit > 0) {
    for (std::size_t i = 0; i < limit; ++i) {
      slots_[i].departed.store(false, std::memory_order_relaxed);
      slots_[i].op_word.store(0, std::memory_order_relaxed);
    }
    on_session_reset();
    next_id_.store(0, std::memory_order_release);
  }
  return count;
}

std::uint64_t reclaimer::lifetime_retired() const {
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < config_.max_threads; ++i) total += slots_[i].retired.load(std::memory_order_acquire);
  return total;
}

std::uint64_t reclaimer::lifetime_freed() const {
  std::uint64_t total = orphan_freed_.load(std::memory_order_acquire);
  for (std::size_t i = 0; i < config_.max_threads; ++i) total += slots_[i].freed.load(std::memory_order_acquire);
  return total;
}

std::uint64_t reclaimer::pending() const {
  std::uint64_t total = orphans_.size();
  const auto limit = next_id_.load(std::memory_order_acquire);
  for (std::size_t i = 0; i < limit; ++i) total += unreclaimed(i);
  return total;
}

std::uint64_t reclaimer::free_time_ns(std::size_t tid) const {
  return cycle_clock::to_ns(slots_[tid].free_ns.load(std::memory_order_acquire));
}
std::uint64_t reclaimer::thread_freed(std::size_t tid) const { return slots_[tid].freed.load(std::memory_order_acquire); }
std::uint64_t reclaimer::thread_retired(std::size_t tid) const {
  return slots_[tid].retired.load(std::memory_order_acquire);
}

std::size_t reclaimer::freeable_size(std::size_t tid) const { return slots_[tid].freeable.size(); }

bool reclaimer::is_registered(std::size_t tid) const {
  return tid < config_.max_threads && slots_[tid].registered.load(std::memory_order_acquire);
}

bool reclaimer::registered_and_present(std::size_t tid) const {
  return slots_[tid].registered.load(std::memory_order_seq_cst);
}

bool reclaimer::departed(std::size_t tid) const { return slots_[tid].departed.load(std::memory_order_seq_cst); }

std::size_t reclaimer::registered_count() const {
  std::size_t n = 0;
  const auto limit = next_id_.load(std::memory_order_acquire);
  for (std::size_t i = 0; i < limit; ++i) n += slots_[i].registered.load(std::memory_order_acquire) ? 1 : 0;
  return n;
}

void reclaimer::note_garbage(std::size_t tid, std::uint64_t epoch) {
  auto& s = slots_[tid];
  const auto g = unreclaimed(tid);
  if (s.garbage.size() < s.garbage.capacity()) s.garbage.push_back({epoch, g});
  if constexpr (timeline::enabled)
    if (s.events) s.events->record_instant(timeline::event_kind::garbage_count, timeline::pack_garbage(epoch, g));
}

std::vector<garbage_sample> reclaimer::garbage_log(std::size_t tid) const { return slots_[tid].garbage; }

std::vector<garbage_sample> reclaimer::garbage_series() const {
  std::map<std::uint64_t, std::uint64_t> sums;
  for (std::size_t i = 0; i < config_.max_threads; ++i)
    for (const auto& g : slots_[i].garbage) sums[g.epoch] += g.garbage;
  std::vector<garbage_sample> out;
  out.reserve(sums.size());
  for (const auto& [e, g] : sums) out.push_back({e, g});
  return out;
}

}  // namespace smr
