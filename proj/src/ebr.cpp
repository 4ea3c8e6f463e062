#include "smr/ebr.hpp"

namespace smr {

epoch_reclaimer_base::epoch_reclaimer_base(reclaimer_config config, epoch_options options)
    : reclaimer(config), threads_(std::make_unique<per_thread[]>(config.max_threads)), options_(options) {
  if (options_.scan_every == 0) options_.scan_every = 1;
}

bool epoch_reclaimer_base::scan_step(std::size_t tid) {
  auto& t = threads_[tid];
  auto e = epoch_.load(std::memory_order_seq_cst);
  if (t.cursor_epoch != e) {
    // Someone advanced since our last step; start a fresh circuit.
    t.cursor = 0;
    t.cursor_epoch = e;
  }
  const auto limit = id_limit();
  if (t.cursor < limit) {
    if (registered_and_present(t.cursor) &&
        lagging(threads_[t.cursor].announce.load(std::memory_order_seq_cst), e))
      return false;
    ++t.cursor;
  }
  if (t.cursor < limit) return false;

  t.cursor = 0;
  if (!epoch_.compare_exchange_strong(e, e + 1, std::memory_order_seq_cst)) return false;
  t.cursor_epoch = e + 1;
  if constexpr (timeline::enabled)
    if (auto* ev = events(tid)) ev->record_instant(timeline::event_kind::epoch_advance, e + 1);
  return true;
}

void epoch_reclaimer_base::maybe_scan(std::size_t tid) {
  auto& t = threads_[tid];
  if (++t.steps % options_.scan_every != 0) return;
  if (t.bags.total < options_.bag_threshold) return;
  scan_step(tid);
}

void epoch_reclaimer_base::release_old(std::size_t tid, std::uint64_t e) {
  auto& b = threads_[tid].bags;
  for (std::size_t i = 0; i < 3; ++i) {
    if (b.bag[i].empty() || b.stamp[i] + 2 > e) continue;
    b.total -= b.bag[i].size();
    release(tid, b.bag[i]);
  }
}

void epoch_reclaimer_base::on_retire(std::size_t tid, retired_object& obj) {
  auto& b = threads_[tid].bags;
  const auto s = epoch_.load(std::memory_order_seq_cst);
  const auto i = s % 3;
  if (!b.bag[i].empty() && b.stamp[i] != s) {
    // Stale bag from three or more epochs back: safe already.
    b.total -= b.bag[i].size();
    release(tid, b.bag[i]);
  }
  obj.retire_stamp = s;
  b.stamp[i] = s;
  b.bag[i].push_back(obj);
  ++b.total;
}

void epoch_reclaimer_base::drain_thread(std::size_t tid, std::vector<retired_object>& out) {
  auto& b = threads_[tid].bags;
  for (auto& bag : b.bag) {
    out.insert(out.end(), bag.begin(), bag.end());
    bag.clear();
  }
  b.total = 0;
}

// DEBRA

void debra_reclaimer::on_register(std::size_t tid) {
  auto& t = threads_[tid];
  const auto e = epoch_.load(std::memory_order_seq_cst);
  t.local_epoch = e;
  t.cursor = 0;
  t.cursor_epoch = e;
  t.steps = 0;
  t.announce.store((e << 1) | 1U, std::memory_order_seq_cst);
}

void debra_reclaimer::on_begin(std::size_t tid) {
  auto& t = threads_[tid];
  const auto e = epoch_.load(std::memory_order_seq_cst);
  t.announce.store(e << 1, std::memory_order_seq_cst);
  if (e != t.local_epoch) {
    t.local_epoch = e;
    note_garbage(tid, e);
    release_old(tid, e);
  }
  maybe_scan(tid);
}

void debra_reclaimer::on_end(std::size_t tid) {
  auto& t = threads_[tid];
  t.announce.store(t.announce.load(std::memory_order_relaxed) | 1U, std::memory_order_release);
}

// QSBR

void qsbr_reclaimer::on_register(std::size_t tid) {
  auto& t = threads_[tid];
  const auto e = epoch_.load(std::memory_order_seq_cst);
  t.local_epoch = e;
  t.cursor = 0;
  t.cursor_epoch = e;
  t.steps = 0;
  t.announce.store(e, std::memory_order_seq_cst);
}

void qsbr_reclaimer::quiesce(std::size_t tid) {
  auto& t = threads_[tid];
  const auto e = epoch_.load(std::memory_order_seq_cst);
  t.announce.store(e, std::memory_order_seq_cst);
  if (e != t.local_epoch) {
    t.local_epoch = e;
    note_garbage(tid, e);
    release_old(tid, e);
  }
}

void qsbr_reclaimer::on_end(std::size_t tid) {
  quiesce(tid);
  auto& t = threads_[tid];
  if (++t.steps % options_.scan_every != 0) return;
  if (t.bags.total < options_.bag_threshold) return;
  // Still quiescent after our own advance, so record the new value at once.
  if (scan_step(tid)) quiesce(tid);
}

}  // namespace smr
