#include "smr/token_ebr.hpp"

#include <algorithm>

namespace smr {

std::string_view to_string(token_variant v) {
  switch (v) {
    case token_variant::naive: return "token_naive";
    case token_variant::passfirst: return "token_passfirst";
    case token_variant::periodic: return "token_periodic";
    case token_variant::amortized: return "token_af";
  }
  return "token";
}

token_reclaimer::token_reclaimer(reclaimer_config config, token_variant variant, std::size_t k_free)
    : reclaimer(config), variant_(variant), k_free_(k_free == 0 ? 1 : k_free),
      ring_(std::make_unique<ring_slot[]>(config.max_threads)) {
  if (variant_ == token_variant::amortized) config_.policy = free_policy::amortized;
}

std::string_view token_reclaimer::name() const { return to_string(variant_); }

std::uint64_t token_reclaimer::epochs() const {
  std::uint64_t m = 0;
  for (std::size_t i = 0; i < config_.max_threads; ++i) m = std::max(m, received_round(i));
  return m;
}

std::optional<std::size_t> token_reclaimer::successor(std::size_t tid) const {
  const auto limit = id_limit();
  for (std::size_t j = 1; j <= limit; ++j) {
    const auto c = (tid + j) % limit;
    if (is_registered(c)) return c;
  }
  return std::nullopt;
}

void token_reclaimer::on_register(std::size_t tid) {
  auto& s = ring_[tid];
  s.received.store(0, std::memory_order_relaxed);
  s.passed.store(0, std::memory_order_relaxed);
  s.mid_checks.store(0, std::memory_order_relaxed);
  s.mid_passes.store(0, std::memory_order_relaxed);
  s.current.clear();
  s.previous.clear();
  s.detached.clear();
  // The token is born at thread 0.
  s.delivered.store(tid == 0 ? 1 : 0, std::memory_order_seq_cst);
}

bool token_reclaimer::check_receive(std::size_t tid) {
  auto& s = ring_[tid];
  const auto r = s.received.load(std::memory_order_relaxed);
  if (s.delivered.load(std::memory_order_acquire) <= r) return false;
  s.received.store(r + 1, std::memory_order_seq_cst);
  if constexpr (timeline::enabled)
    if (auto* ev = events(tid)) ev->record_instant(timeline::event_kind::epoch_advance, r + 1);
  return true;
}

void token_reclaimer::pass(std::size_t tid) {
  auto& s = ring_[tid];
  const auto r = s.received.load(std::memory_order_relaxed);
  const auto p = s.passed.load(std::memory_order_relaxed);
  if (r != p + 1) throw smr_error("token not held");
  // passed before delivered: the token is never counted twice by an audit
  s.passed.store(p + 1, std::memory_order_seq_cst);
  if constexpr (timeline::enabled)
    if (auto* ev = events(tid)) ev->record_instant(timeline::event_kind::token_pass, p + 1);
  if (auto next = successor(tid)) deliver(*next);
}

void token_reclaimer::deliver(std::size_t to) {
  // Forward through threads that left after being chosen as successor. The
  // claim on `received` makes sure only one party forwards each round.
  for (;;) {
    auto& s = ring_[to];
    s.delivered.fetch_add(1, std::memory_order_seq_cst);
    std::size_t g = to;
    bool forwarded = false;
    while (!is_registered(g)) {
      auto& gs = ring_[g];
      auto r = gs.received.load(std::memory_order_seq_cst);
      if (gs.delivered.load(std::memory_order_seq_cst) <= r) return;
      if (!gs.received.compare_exchange_strong(r, r + 1, std::memory_order_seq_cst)) continue;
      gs.passed.fetch_add(1, std::memory_order_seq_cst);
      auto next = successor(g);
      if (!next) return;
      to = *next;
      forwarded = true;
      break;
    }
    if (!forwarded) return;
  }
}

void token_reclaimer::on_unregister(std::size_t tid) {
  // Anything delivered to us from now on is forwarded by the sender. Rounds
  // that already arrived are claimed and forwarded here.
  auto& s = ring_[tid];
  for (;;) {
    auto r = s.received.load(std::memory_order_seq_cst);
    if (s.delivered.load(std::memory_order_seq_cst) <= r) return;
    if (!s.received.compare_exchange_strong(r, r + 1, std::memory_order_seq_cst)) continue;
    s.passed.fetch_add(1, std::memory_order_seq_cst);
    if (auto next = successor(tid)) deliver(*next);
  }
}

void token_reclaimer::on_begin(std::size_t tid) {
  if (!check_receive(tid)) return;
  auto& s = ring_[tid];
  note_garbage(tid, received_round(tid));
  if (variant_ == token_variant::naive) {
    release(tid, s.previous);
    s.previous.swap(s.current);
    pass(tid);
    return;
  }
  s.detached.swap(s.previous);
  s.previous.swap(s.current);
  pass(tid);
  free_detached(tid);
}

void token_reclaimer::free_detached(std::size_t tid) {
  auto& s = ring_[tid];
  if (s.detached.empty()) return;
  if (config_.policy == free_policy::amortized || variant_ == token_variant::passfirst) {
    release(tid, s.detached);
    return;
  }
  std::size_t freed = 0;
  free_batch_now(tid, s.detached, k_free_, [&] {
    freed += k_free_;
    s.mid_checks.fetch_add(1, std::memory_order_relaxed);
    // Re-pass only; the bags are swapped at the next begin_op.
    if (check_receive(tid)) {
      note_garbage(tid, received_round(tid));
      pass(tid);
      s.mid_passes.fetch_add(1, std::memory_order_relaxed);
    }
    if (observer_) observer_(tid, freed);
  });
}

void token_reclaimer::on_retire(std::size_t tid, retired_object& obj) {
  auto& s = ring_[tid];
  obj.retire_stamp = s.received.load(std::memory_order_relaxed);
  s.current.push_back(obj);
}

void token_reclaimer::drain_thread(std::size_t tid, std::vector<retired_object>& out) {
  auto& s = ring_[tid];
  for (auto* bag : {&s.current, &s.previous, &s.detached}) {
    out.insert(out.end(), bag->begin(), bag->end());
    bag->clear();
  }
}

void token_reclaimer::on_session_reset() {
  for (std::size_t i = 0; i < config_.max_threads; ++i) {
    auto& s = ring_[i];
    s.delivered.store(0, std::memory_order_relaxed);
    s.received.store(0, std::memory_order_relaxed);
    s.passed.store(0, std::memory_order_relaxed);
  }
}

}  // namespace smr
