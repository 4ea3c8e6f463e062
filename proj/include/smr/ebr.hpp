#pragma once

// Epoch family: a leaking baseline, DEBRA-style EBR and QSBR.
//
// Both epoch reclaimers stamp retired objects with the global counter read at
// retire time and keep three bags per thread indexed by stamp mod 3. A bag is
// handed to the free path once the global counter is at least stamp + 2.

#include <array>
#include <atomic>
#include <cstdint>
#include <memory>
#include <vector>

#include "smr/reclaimer.hpp"

namespace smr {

/// Never frees anything. Retired objects are counted as leaked.
class leaky_reclaimer final : public reclaimer {
 public:
  explicit leaky_reclaimer(reclaimer_config config) : reclaimer(config) {}

  std::string_view name() const override { return "none"; }
  std::uint64_t epochs() const override { return 0; }

 protected:
  void on_register(std::size_t) override {}
  void on_begin(std::size_t) override {}
  void on_retire(std::size_t, retired_object& obj) override {
    obj.retire_stamp = 0;
    count_leak();
  }
  void drain_thread(std::size_t, std::vector<retired_object>&) override {}
  std::size_t bag_size(std::size_t) const override { return 0; }
};

/// Three limbo bags indexed by stamp mod 3.
struct limbo_bags {
  std::array<std::vector<retired_object>, 3> bag;
  std::array<std::uint64_t, 3> stamp{};
  std::size_t total = 0;
};

struct epoch_options {
  // One scan step every k begin_ops (DEBRA) or end_ops (QSBR).
  std::size_t scan_every = 1;
  // Scan only while the thread holds at least this many retired objects.
  std::size_t bag_threshold = 0;
};

/// Shared machinery: global counter, per-thread bags, round-robin scan.
class epoch_reclaimer_base : public reclaimer {
 public:
  epoch_reclaimer_base(reclaimer_config config, epoch_options options);

  std::uint64_t epochs() const override { return epoch_.load(std::memory_order_acquire); }
  std::uint64_t global_epoch() const { return epoch_.load(std::memory_order_acquire); }
  std::size_t scan_cursor(std::size_t tid) const { return threads_[tid].cursor; }
  std::size_t bag_size_at(std::size_t tid, std::size_t index) const { return threads_[tid].bags.bag[index].size(); }
  const epoch_options& options() const { return options_; }

  /// One step of the round-robin scan. Returns true if this call advanced the
  /// global epoch.
  bool scan_step(std::size_t tid);

 protected:
  struct alignas(cache_line) per_thread {
    // DEBRA: (epoch << 1) | quiescent. QSBR: last counter value seen at a
    // quiescent point.
    std::atomic<std::uint64_t> announce{0};
    std::size_t cursor = 0;
    std::uint64_t cursor_epoch = 0;
    std::uint64_t steps = 0;
    std::uint64_t local_epoch = 0;
    limbo_bags bags;
  };

  /// Is thread i blocking an advance past epoch e?
  virtual bool lagging(std::uint64_t announce_word, std::uint64_t e) const = 0;

  /// Releases every bag whose stamp + 2 <= e.
  void release_old(std::size_t tid, std::uint64_t e);
  void maybe_scan(std::size_t tid);

  void on_retire(std::size_t tid, retired_object& obj) override;
  void drain_thread(std::size_t tid, std::vector<retired_object>& out) override;
  std::size_t bag_size(std::size_t tid) const override { return threads_[tid].bags.total; }
  bool grace_elapsed(std::size_t, const retired_object& obj) const override {
    return epoch_.load(std::memory_order_seq_cst) >= obj.retire_stamp + 2;
  }

  alignas(cache_line) std::atomic<std::uint64_t> epoch_{0};
  std::unique_ptr<per_thread[]> threads_;
  epoch_options options_;
};

/// DEBRA-style EBR: announce at begin_op, quiescent bit at end_op, one scan
/// step every k begin_ops.
class debra_reclaimer final : public epoch_reclaimer_base {
 public:
  explicit debra_reclaimer(reclaimer_config config, epoch_options options = {})
      : epoch_reclaimer_base(config, options) {}

  std::string_view name() const override { return "debra"; }

  std::uint64_t announced_epoch(std::size_t tid) const {
    return threads_[tid].announce.load(std::memory_order_acquire) >> 1;
  }
  bool quiescent(std::size_t tid) const { return (threads_[tid].announce.load(std::memory_order_acquire) & 1U) != 0; }

 protected:
  bool lagging(std::uint64_t word, std::uint64_t e) const override { return (word & 1U) == 0 && (word >> 1) != e; }
  void on_register(std::size_t tid) override;
  void on_begin(std::size_t tid) override;
  void on_end(std::size_t tid) override;
};

/// QSBR: each end_op is a quiescent point that records the global counter;
/// the counter advances once every registered thread has recorded it.
class qsbr_reclaimer final : public epoch_reclaimer_base {
 public:
  explicit qsbr_reclaimer(reclaimer_config config, epoch_options options = {})
      : epoch_reclaimer_base(config, options) {}

  std::string_view name() const override { return "qsbr"; }
  std::uint64_t mark(std::size_t tid) const { return threads_[tid].announce.load(std::memory_order_acquire); }

 protected:
  bool lagging(std::uint64_t word, std::uint64_t e) const override { return word != e; }
  void on_register(std::size_t tid) override;
  void on_begin(std::size_t) override {}
  void on_end(std::size_t tid) override;

 private:
  void quiesce(std::size_t tid);
};

}  // namespace smr
