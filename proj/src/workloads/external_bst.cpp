#include "smr/workloads/external_bst.hpp"

#include <functional>
#include <mutex>

namespace smr::workloads {

namespace {
constexpr std::int64_t inf1 = max_key + 1;
constexpr std::int64_t inf2 = max_key + 2;
}  // namespace

external_bst::external_bst(reclaimer& rec, std::size_t node_size) : ordered_set(rec, node_size) {
  root_ = make_node(inf2, make_node(inf1, nullptr, nullptr), make_node(inf2, nullptr, nullptr));
}

external_bst::~external_bst() {
  std::vector<node*> stack{root_};
  while (!stack.empty()) {
    node* n = stack.back();
    stack.pop_back();
    if (node* l = n->left.load(std::memory_order_relaxed)) stack.push_back(l);
    if (node* r = n->right.load(std::memory_order_relaxed)) stack.push_back(r);
    n->~node();
    free_now(n);
  }
}

external_bst::node* external_bst::make_node(std::int64_t key, node* left, node* right) {
  auto* n = new (allocate()) node;
  n->canary = debug::live_canary;
  n->key = key;
  n->left.store(left, std::memory_order_relaxed);
  n->right.store(right, std::memory_order_relaxed);
  n->removed.store(false, std::memory_order_relaxed);
  return n;
}

external_bst::path external_bst::search(std::int64_t key) const {
  path p{nullptr, root_, child(root_, key)};
  check(p.l, p.l->canary);
  while (p.l->left.load(std::memory_order_acquire) != nullptr) {
    p.gp = p.p;
    p.p = p.l;
    p.l = child(p.l, key);
    check(p.l, p.l->canary);
  }
  return p;
}

bool external_bst::contains(thread_handle&, std::int64_t key) { return search(key).l->key == key; }

bool external_bst::insert(thread_handle&, std::int64_t key) {
  for (;;) {
    const auto [gp, p, l] = search(key);
    if (l->key == key) return true;
    std::lock_guard guard(p->lock);
    auto& slot = link(p, key);
    if (p->removed.load(std::memory_order_relaxed) || slot.load(std::memory_order_relaxed) != l) continue;
    node* leaf = make_node(key, nullptr, nullptr);
    node* internal = key < l->key ? make_node(l->key, leaf, l) : make_node(key, l, leaf);
    slot.store(internal, std::memory_order_release);
    return false;
  }
}

bool external_bst::erase(thread_handle& h, std::int64_t key) {
  for (;;) {
    const auto [gp, p, l] = search(key);
    if (l->key != key) return false;
    // gp is never null here: real keys sit at depth >= 2.
    std::unique_lock lock_gp(gp->lock);
    std::unique_lock lock_p(p->lock);
    auto& gp_slot = link(gp, key);
    auto& p_slot = link(p, key);
    if (gp->removed.load(std::memory_order_relaxed) || p->removed.load(std::memory_order_relaxed) ||
        gp_slot.load(std::memory_order_relaxed) != p || p_slot.load(std::memory_order_relaxed) != l)
      continue;
    node* sibling = (&p_slot == &p->left ? p->right : p->left).load(std::memory_order_relaxed);
    gp_slot.store(sibling, std::memory_order_release);
    p->removed.store(true, std::memory_order_relaxed);
    l->removed.store(true, std::memory_order_relaxed);
    lock_p.unlock();
    lock_gp.unlock();
    retire(h, p);
    retire(h, l);
    return true;
  }
}

std::vector<std::int64_t> external_bst::keys() const {
  std::vector<std::int64_t> out;
  std::vector<const node*> stack{root_};
  while (!stack.empty()) {
    const node* n = stack.back();
    stack.pop_back();
    const node* l = n->left.load(std::memory_order_acquire);
    if (l == nullptr) {
      if (n->key <= max_key) out.push_back(n->key);
      continue;
    }
    stack.push_back(n->right.load(std::memory_order_acquire));
    stack.push_back(l);
  }
  return out;
}

std::size_t external_bst::size() const { return keys().size(); }

bool external_bst::well_formed() const {
  // Every leaf key must lie in the half-open interval its routing path implies.
  std::function<bool(const node*, std::int64_t, std::int64_t)> ok = [&](const node* n, std::int64_t lo,
                                                                        std::int64_t hi) {
    if (n == nullptr) return false;
    if (n->key < lo || n->key > hi) return false;
    const node* l = n->left.load(std::memory_order_acquire);
    const node* r = n->right.load(std::memory_order_acquire);
    if (l == nullptr) return r == nullptr;
    if (r == nullptr) return false;
    return ok(l, lo, n->key - 1) && ok(r, n->key, hi);
  };
  return ok(root_, std::numeric_limits<std::int64_t>::min(), inf2);
}

}  // namespace smr::workloads
