#pragma once

// Sorted lock-free linked list (Harris deletion marks, Michael's unlink
// discipline). Delete marks the node's next pointer, then unlinks it; the
// thread whose unlink CAS succeeds retires the node.

#include <atomic>
#include <cstdint>

#include "smr/workloads/ordered_set.hpp"

namespace smr::workloads {

class linked_list_set final : public ordered_set {
 public:
  linked_list_set(reclaimer& rec, std::size_t node_size);
  ~linked_list_set() override;

  bool insert(thread_handle& h, std::int64_t key) override;
  bool erase(thread_handle& h, std::int64_t key) override;
  bool contains(thread_handle& h, std::int64_t key) override;

  std::size_t size() const override;
  std::vector<std::int64_t> keys() const override;
  std::string_view name() const override { return "list"; }

  struct node {
    std::uint64_t canary;
    std::int64_t key;
    std::atomic<std::uintptr_t> next;  // low bit: logically deleted
  };

 private:
  struct window {
    std::atomic<std::uintptr_t>* prev;
    node* curr;
  };

  node* make_node(std::int64_t key, node* next);
  // Position of the first node with key >= key, unlinking marked nodes on the way.
  window find(thread_handle& h, std::int64_t key);

  node* head_;
  node* tail_;
};

}  // namespace smr::workloads
