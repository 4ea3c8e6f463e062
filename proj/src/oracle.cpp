#include "smr/oracle.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace smr {

verdict check_grace(std::span<const std::uint64_t> snapshot, std::span<const std::uint64_t> now,
                    std::size_t* violator) {
  const auto n = std::min(snapshot.size(), now.size());
  for (std::size_t j = 0; j < n; ++j) {
    if (op_active(snapshot[j]) && now[j] == snapshot[j]) {
      if (violator) *violator = j;
      return verdict::fail;
    }
  }
  return verdict::pass;
}

bool debug_oracle_from_env() {
  const char* v = std::getenv("SMR_DEBUG_ORACLE");
  return v != nullptr && std::strcmp(v, "1") == 0;
}

namespace {

// Snapshot handles: thread id in the top 16 bits, offset below.
constexpr unsigned handle_shift = 48;

std::string words_to_string(const std::vector<std::uint64_t>& w) {
  std::string s = "[";
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) s += ' ';
    s += std::to_string(op_counter_of(w[i]));
    if (op_active(w[i])) s += '*';
  }
  return s + "]";
}

[[noreturn]] void die(const oracle_violation& v) {
  std::fprintf(stderr,
               "smr oracle violation: %s\n  thread %zu still inside its retire-time operation"
               " (freed by thread %zu)\n  retire stamp %llu\n  snapshot %s\n  now      %s\n",
               v.reason.c_str(), v.thread_id, v.freeing_thread, static_cast<unsigned long long>(v.retire_stamp),
               words_to_string(v.snapshot).c_str(), words_to_string(v.now).c_str());
  std::fflush(stderr);
  std::_Exit(oracle_exit_code);
}

}  // namespace

grace_period_oracle::grace_period_oracle(std::size_t max_threads, oracle_action action)
    : width_(max_threads), action_(action), logs_(max_threads) {}

grace_period_oracle::~grace_period_oracle() { release_quarantine(); }

std::uint64_t grace_period_oracle::take_snapshot(std::size_t retiring_thread,
                                                 std::span<const std::atomic<std::uint64_t>* const> words) {
  auto& log = logs_.at(retiring_thread).words;
  const std::uint64_t offset = log.size();
  for (std::size_t j = 0; j < width_; ++j)
    log.push_back(j < words.size() ? words[j]->load(std::memory_order_seq_cst) : 0);
  return (static_cast<std::uint64_t>(retiring_thread) << handle_shift) | offset;
}

std::span<const std::uint64_t> grace_period_oracle::snapshot(std::uint64_t handle) const {
  const auto thread = static_cast<std::size_t>(handle >> handle_shift);
  const auto offset = static_cast<std::size_t>(handle & ((std::uint64_t{1} << handle_shift) - 1));
  const auto& log = logs_.at(thread).words;
  return std::span<const std::uint64_t>(log).subspan(offset, width_);
}

verdict grace_period_oracle::check_and_quarantine(std::size_t freeing_thread, const retired_object& obj,
                                                  std::span<const std::atomic<std::uint64_t>* const> words) {
  std::vector<std::uint64_t> now(width_, 0);
  for (std::size_t j = 0; j < width_ && j < words.size(); ++j) now[j] = words[j]->load(std::memory_order_seq_cst);

  verdict result = verdict::pass;
  if (obj.snapshot != no_snapshot) {
    const auto snap = snapshot(obj.snapshot);
    std::size_t violator = 0;
    if (check_grace(snap, now, &violator) == verdict::fail) {
      result = verdict::fail;
      report({violator, freeing_thread, obj.retire_stamp, {snap.begin(), snap.end()}, now, "grace period not elapsed"});
    }
  }

  std::lock_guard lock(mutex_);
  if (!freed_.insert(obj.object).second) {
    result = verdict::fail;
    oracle_violation v{freeing_thread, freeing_thread, obj.retire_stamp, {}, now, "double free"};
    violation_count_.fetch_add(1, std::memory_order_acq_rel);
    if (action_ == oracle_action::abort) die(v);
    log_.push_back(std::move(v));
    return result;
  }
  std::memset(obj.object, poison_byte, obj.size_bytes);
  quarantine_.push_back({obj.object, obj.size_bytes, obj.tag});
  return result;
}

void grace_period_oracle::report(oracle_violation v) {
  violation_count_.fetch_add(1, std::memory_order_acq_rel);
  if (action_ == oracle_action::abort) die(v);
  std::lock_guard lock(mutex_);
  log_.push_back(std::move(v));
}

std::vector<oracle_violation> grace_period_oracle::violation_log() const {
  std::lock_guard lock(mutex_);
  return log_;
}

std::uint64_t grace_period_oracle::quarantined() const {
  std::lock_guard lock(mutex_);
  return quarantine_.size();
}

std::size_t grace_period_oracle::release_quarantine() {
  std::lock_guard lock(mutex_);
  std::size_t corrupted = 0;
  for (const auto& q : quarantine_) {
    const auto* bytes = static_cast<const unsigned char*>(q.object);
    for (std::uint32_t i = 0; i < q.size; ++i) {
      if (bytes[i] != poison_byte) {
        ++corrupted;
        break;
      }
    }
    dealloc::invoke(q.tag, q.object, q.size);
  }
  quarantine_.clear();
  freed_.clear();
  return corrupted;
}

namespace debug {
namespace {
std::atomic<std::uint64_t> hits{0};
std::atomic<bool> abort_on_hit{true};
}  // namespace

void report_canary_hit(const void* node) {
  hits.fetch_add(1, std::memory_order_acq_rel);
  if (abort_on_hit.load(std::memory_order_acquire)) {
    std::fprintf(stderr, "smr canary hit: traversal reached freed node %p\n", node);
    std::fflush(stderr);
    std::_Exit(oracle_exit_code);
  }
}
std::uint64_t canary_hits() { return hits.load(std::memory_order_acquire); }
void reset_canary_hits() { hits.store(0, std::memory_order_release); }
void set_canary_abort(bool a) { abort_on_hit.store(a, std::memory_order_release); }
}  // namespace debug

}  // namespace smr
