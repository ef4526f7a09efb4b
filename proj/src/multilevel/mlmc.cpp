#include "mcis/multilevel/mlmc.hpp"

namespace mcis {

CostLedger build_ledger(const ApproxChainResult& phase_one, const std::vector<IsWeightedSample>& samples) {
  CostLedger ledger;
  const auto& costs = phase_one.trace.iteration_costs;
  std::vector<double> extra(costs.size(), 0.0);
  // first iteration of jump j is the sum of earlier holding times
  std::vector<std::size_t> first(phase_one.jump.size(), 0);
  std::size_t it = 0;
  for (std::size_t j = 0; j < phase_one.jump.size(); ++j) {
    first[j] = it;
    it += static_cast<std::size_t>(phase_one.jump.holding[j]);
  }
  for (const auto& s : samples)
    if (s.j < first.size() && first[s.j] < extra.size()) extra[first[s.j]] += s.cost;
  for (std::size_t k = 0; k < costs.size(); ++k) ledger.add(costs[k] + extra[k]);
  return ledger;
}

}  // namespace mcis
