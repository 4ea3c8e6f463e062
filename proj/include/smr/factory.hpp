#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "smr/ebr.hpp"
#include "smr/reclaimer.hpp"
#include "smr/token_ebr.hpp"

namespace smr {

struct algorithm_options {
  epoch_options epoch;
  std::size_t token_kfree = default_token_kfree;
};

/// Reclaimer ids: none, debra, qsbr, token_naive, token_passfirst,
/// token_periodic, token_af. debra_af and qsbr_af are shorthands that force
/// the amortized policy. Throws smr_error on an unknown id.
std::unique_ptr<reclaimer> make_reclaimer(std::string_view id, reclaimer_config config,
                                          const algorithm_options& options = {});

/// The ids accepted by make_reclaimer, aliases excluded.
const std::vector<std::string>& reclaimer_ids();

/// Canonical id and effective policy after alias resolution
/// ("debra_af" -> debra + amortized, token_af always amortized).
struct resolved_reclaimer {
  std::string id;
  free_policy policy;
};
resolved_reclaimer resolve_reclaimer(std::string_view id, free_policy requested);

}  // namespace smr
