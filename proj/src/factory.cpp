#include "smr/factory.hpp"

namespace smr {

const std::vector<std::string>& reclaimer_ids() {
  static const std::vector<std::string> ids{"none",        "debra",           "qsbr",
                                            "token_naive", "token_passfirst", "token_periodic",
                                            "token_af"};
  return ids;
}

resolved_reclaimer resolve_reclaimer(std::string_view id, free_policy requested) {
  if (id == "debra_af") return {"debra", free_policy::amortized};
  if (id == "qsbr_af") return {"qsbr", free_policy::amortized};
  if (id == "leaky") return {"none", requested};
  if (id == "token_af") return {"token_af", free_policy::amortized};
  return {std::string(id), requested};
}

std::unique_ptr<reclaimer> make_reclaimer(std::string_view id, reclaimer_config config,
                                          const algorithm_options& options) {
  const auto r = resolve_reclaimer(id, config.policy);
  config.policy = r.policy;
  if (r.id == "none") return std::make_unique<leaky_reclaimer>(config);
  if (r.id == "debra") return std::make_unique<debra_reclaimer>(config, options.epoch);
  if (r.id == "qsbr") return std::make_unique<qsbr_reclaimer>(config, options.epoch);
  if (r.id == "token_naive") return std::make_unique<token_reclaimer>(config, token_variant::naive, options.token_kfree);
  if (r.id == "token_passfirst")
    return std::make_unique<token_reclaimer>(config, token_variant::passfirst, options.token_kfree);
  if (r.id == "token_periodic")
    return std::make_unique<token_reclaimer>(config, token_variant::periodic, options.token_kfree);
  if (r.id == "token_af") return std::make_unique<token_reclaimer>(config, token_variant::amortized, options.token_kfree);
  throw smr_error("unknown reclaimer: " + std::string(id));
}

}  // namespace smr
