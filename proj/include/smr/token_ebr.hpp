#pragma once

// Token-ring EBR. A single token circulates over the registered threads in id
// order. A thread's local epoch is the number of times it has received the
// token; on each receipt the previous bag is freed and the current bag
// becomes the previous one. An object retired in local epoch e is freed at
// the receipt of e + 2, after the token has gone once around the whole ring.
//
// Variants differ only in what happens on receipt:
//   naive      free previous, swap, pass
//   passfirst  swap, pass, free old previous
//   periodic   as passfirst, but every k_free frees check for the token again
//              and pass it straight on
//   amortized  periodic with the amortized free policy

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "smr/reclaimer.hpp"

namespace smr {

enum class token_variant : std::uint8_t { naive, passfirst, periodic, amortized };

std::string_view to_string(token_variant v);

inline constexpr std::size_t default_token_kfree = 100;

class token_reclaimer final : public reclaimer {
 public:
  token_reclaimer(reclaimer_config config, token_variant variant, std::size_t k_free = default_token_kfree);

  std::string_view name() const override;
  std::uint64_t epochs() const override;

  token_variant variant() const { return variant_; }
  std::size_t k_free() const { return k_free_; }

  // Ring audit. All counters are monotone.
  std::uint64_t delivered(std::size_t tid) const { return ring_[tid].delivered.load(std::memory_order_acquire); }
  std::uint64_t received_round(std::size_t tid) const { return ring_[tid].received.load(std::memory_order_acquire); }
  std::uint64_t passed_round(std::size_t tid) const { return ring_[tid].passed.load(std::memory_order_acquire); }
  std::uint64_t local_epoch(std::size_t tid) const { return received_round(tid); }
  std::uint64_t mid_free_checks(std::size_t tid) const {
    return ring_[tid].mid_checks.load(std::memory_order_acquire);
  }
  std::uint64_t mid_free_passes(std::size_t tid) const {
    return ring_[tid].mid_passes.load(std::memory_order_acquire);
  }
  std::size_t current_bag_size(std::size_t tid) const { return ring_[tid].current.size(); }
  std::size_t previous_bag_size(std::size_t tid) const { return ring_[tid].previous.size(); }

  /// Next registered thread after tid in id order (tid itself for a ring of
  /// one); nullopt when nobody is registered.
  std::optional<std::size_t> successor(std::size_t tid) const;

  // Protocol steps, exposed for scripted tests. Owner thread only.
  bool check_receive(std::size_t tid);
  /// Throws smr_error("token not held") unless received == passed + 1.
  void pass(std::size_t tid);

  /// Test hook: called after every mid-free check, with the number of objects
  /// freed so far in the current batch.
  void set_mid_free_observer(std::function<void(std::size_t tid, std::size_t freed_so_far)> fn) {
    observer_ = std::move(fn);
  }

 protected:
  void on_register(std::size_t tid) override;
  void on_begin(std::size_t tid) override;
  void on_retire(std::size_t tid, retired_object& obj) override;
  void drain_thread(std::size_t tid, std::vector<retired_object>& out) override;
  void on_unregister(std::size_t tid) override;
  void on_session_reset() override;
  std::size_t bag_size(std::size_t tid) const override {
    return ring_[tid].current.size() + ring_[tid].previous.size();
  }
  bool grace_elapsed(std::size_t tid, const retired_object& obj) const override {
    return received_round(tid) >= obj.retire_stamp + 2;
  }

 private:
  struct alignas(cache_line) ring_slot {
    // Rounds delivered by the predecessor. Bumped by whoever passes to us.
    std::atomic<std::uint64_t> delivered{0};
    std::atomic<std::uint64_t> received{0};
    std::atomic<std::uint64_t> passed{0};
    std::atomic<std::uint64_t> mid_checks{0};
    std::atomic<std::uint64_t> mid_passes{0};
    std::vector<retired_object> current;
    std::vector<retired_object> previous;
    std::vector<retired_object> detached;
  };

  void deliver(std::size_t to);
  void free_detached(std::size_t tid);

  token_variant variant_;
  std::size_t k_free_;
  std::unique_ptr<ring_slot[]> ring_;
  std::function<void(std::size_t, std::size_t)> observer_;
};

}  // namespace smr
