#pragma once

// External BST with per-node ticket locks and lock-free searches, in the
// style of David, Guerraoui and Trigonakis. Keys live in leaves; internal
// nodes only route. Insert allocates an internal node and a leaf; delete
// unlinks the leaf with its parent and retires both.

#include <atomic>
#include <cstdint>
#include <thread>

#include "smr/workloads/ordered_set.hpp"

namespace smr::workloads {

class ticket_lock {
 public:
  void lock() {
    const auto t = next_.fetch_add(1, std::memory_order_relaxed);
    unsigned spins = 0;
    while (serving_.load(std::memory_order_acquire) != t) {
      if (++spins > 64) std::this_thread::yield();
    }
  }
  void unlock() { serving_.store(serving_.load(std::memory_order_relaxed) + 1, std::memory_order_release); }

 private:
  std::atomic<std::uint32_t> next_{0};
  std::atomic<std::uint32_t> serving_{0};
};

class external_bst final : public ordered_set {
 public:
  external_bst(reclaimer& rec, std::size_t node_size);
  ~external_bst() override;

  bool insert(thread_handle& h, std::int64_t key) override;
  bool erase(thread_handle& h, std::int64_t key) override;
  bool contains(thread_handle& h, std::int64_t key) override;

  std::size_t size() const override;
  std::vector<std::int64_t> keys() const override;
  std::string_view name() const override { return "bst"; }

  struct node {
    std::uint64_t canary;
    std::int64_t key;
    std::atomic<node*> left;  // null for leaves
    std::atomic<node*> right;
    ticket_lock lock;
    std::atomic<bool> removed;
  };

  /// Checks routing order and leaf shape. Quiescent only.
  bool well_formed() const;

 private:
  struct path {
    node* gp = nullptr;
    node* p = nullptr;
    node* l = nullptr;
  };

  node* make_node(std::int64_t key, node* left, node* right);
  path search(std::int64_t key) const;
  node* child(const node* n, std::int64_t key) const {
    return key < n->key ? n->left.load(std::memory_order_acquire) : n->right.load(std::memory_order_acquire);
  }
  static std::atomic<node*>& link(node* n, std::int64_t key) { return key < n->key ? n->left : n->right; }

  node* root_;
};

}  // namespace smr::workloads
