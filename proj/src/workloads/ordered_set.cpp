#include <algorithm>

#include "smr/workloads/external_bst.hpp"
#include "smr/workloads/linked_list_set.hpp"

namespace smr::workloads {

std::size_t ordered_set::min_node_size() {
  return std::max(sizeof(external_bst::node), sizeof(linked_list_set::node));
}

std::unique_ptr<ordered_set> make_set(std::string_view id, reclaimer& rec, std::size_t node_size) {
  if (node_size < ordered_set::min_node_size())
    throw smr_error("node size below minimum of " + std::to_string(ordered_set::min_node_size()));
  if (id == "bst") return std::make_unique<external_bst>(rec, node_size);
  if (id == "list") return std::make_unique<linked_list_set>(rec, node_size);
  throw smr_error("unknown data structure: " + std::string(id));
}

}  // namespace smr::workloads
