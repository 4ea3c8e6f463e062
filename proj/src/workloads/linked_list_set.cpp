#include "smr/workloads/linked_list_set.hpp"

namespace smr::workloads {

namespace {
constexpr std::uintptr_t mark_bit = 1;

inline bool marked(std::uintptr_t w) { return (w & mark_bit) != 0; }
inline linked_list_set::node* ptr(std::uintptr_t w) { return reinterpret_cast<linked_list_set::node*>(w & ~mark_bit); }
inline std::uintptr_t word(const linked_list_set::node* n) { return reinterpret_cast<std::uintptr_t>(n); }
}  // namespace

linked_list_set::linked_list_set(reclaimer& rec, std::size_t node_size) : ordered_set(rec, node_size) {
  tail_ = make_node(max_key + 1, nullptr);
  head_ = make_node(std::numeric_limits<std::int64_t>::min(), tail_);
}

linked_list_set::~linked_list_set() {
  node* n = head_;
  while (n != nullptr) {
    node* next = ptr(n->next.load(std::memory_order_relaxed));
    n->~node();
    free_now(n);
    n = next;
  }
}

linked_list_set::node* linked_list_set::make_node(std::int64_t key, node* next) {
  auto* n = new (allocate()) node;
  n->canary = debug::live_canary;
  n->key = key;
  n->next.store(word(next), std::memory_order_relaxed);
  return n;
}

linked_list_set::window linked_list_set::find(thread_handle& h, std::int64_t key) {
retry:
  std::atomic<std::uintptr_t>* prev = &head_->next;
  node* curr = ptr(prev->load(std::memory_order_acquire));
  for (;;) {
    check(curr, curr->canary);
    const std::uintptr_t next = curr->next.load(std::memory_order_acquire);
    if (marked(next)) {
      std::uintptr_t expected = word(curr);
      if (!prev->compare_exchange_strong(expected, next & ~mark_bit, std::memory_order_acq_rel))
        goto retry;
      retire(h, curr);
      curr = ptr(next);
      continue;
    }
    if (curr->key >= key) return {prev, curr};
    prev = &curr->next;
    curr = ptr(next);
  }
}

bool linked_list_set::contains(thread_handle&, std::int64_t key) {
  node* curr = ptr(head_->next.load(std::memory_order_acquire));
  for (;;) {
    check(curr, curr->canary);
    if (curr->key >= key) break;
    curr = ptr(curr->next.load(std::memory_order_acquire));
  }
  return curr->key == key && !marked(curr->next.load(std::memory_order_acquire));
}

bool linked_list_set::insert(thread_handle& h, std::int64_t key) {
  node* fresh = nullptr;
  for (;;) {
    const auto [prev, curr] = find(h, key);
    if (curr->key == key) {
      if (fresh != nullptr) {
        fresh->~node();
        free_now(fresh);  // never published
      }
      return true;
    }
    if (fresh == nullptr) fresh = make_node(key, curr);
    fresh->next.store(word(curr), std::memory_order_relaxed);
    std::uintptr_t expected = word(curr);
    if (prev->compare_exchange_strong(expected, word(fresh), std::memory_order_acq_rel)) return false;
  }
}

bool linked_list_set::erase(thread_handle& h, std::int64_t key) {
  for (;;) {
    const auto [prev, curr] = find(h, key);
    if (curr->key != key) return false;
    std::uintptr_t next = curr->next.load(std::memory_order_acquire);
    if (marked(next)) continue;
    if (!curr->next.compare_exchange_strong(next, next | mark_bit, std::memory_order_acq_rel)) continue;
    std::uintptr_t expected = word(curr);
    if (prev->compare_exchange_strong(expected, next, std::memory_order_acq_rel)) {
      retire(h, curr);
    } else {
      find(h, key);  // whoever unlinks it retires it
    }
    return true;
  }
}

std::vector<std::int64_t> linked_list_set::keys() const {
  std::vector<std::int64_t> out;
  for (node* n = ptr(head_->next.load(std::memory_order_acquire)); n != tail_;
       n = ptr(n->next.load(std::memory_order_acquire))) {
    if (!marked(n->next.load(std::memory_order_acquire))) out.push_back(n->key);
  }
  return out;
}

std::size_t linked_list_set::size() const { return keys().size(); }

}  // namespace smr::workloads
