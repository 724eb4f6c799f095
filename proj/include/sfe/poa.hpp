#pragma once
#include <vector>

#include "sfe/dispatch.hpp"
#include "sfe/netmodel.hpp"

namespace sfe {

// How much one generator could ever feasibly supply, whichever of the three
// ceilings binds: its own cap, what demand leaves after everyone else's
// minimum output, or what its bus can absorb locally plus over its lines.
struct MaxSupplyTerm {
  BusId bus = 0;
  double cap = 0.0;        // smax
  double residual = 0.0;   // demand minus the other generators' minimums
  double imports = 0.0;    // local load plus effective inbound line limits
  double value = 0.0;      // min of the three
};

std::vector<MaxSupplyTerm> max_supply_terms(const Market& m);

// a feasible dispatch that pushes generator `gen` as high as the network
// allows; pairs with max_supply_terms to show the ceiling is attained
std::vector<double> max_supply_witness(const Market& m, std::size_t gen);

// 1 + max_n value_n / K with K = (n_g - 2) * demand.
double poa_upper_bound(const Market& m);
// 1 + 1 / (n_g - 2): what poa_upper_bound degrades to with no useful caps or
// line limits.
double network_independent_bound(const Market& m);

struct PoaReport {
  DispatchResult optimal;          // true-cost dispatch
  DispatchResult equilibrium;      // reshaped-cost dispatch
  double cost_optimal = 0.0;       // true cost of optimal.supply
  double cost_equilibrium = 0.0;   // true cost of equilibrium.supply
  double poa = 1.0;
  double bound = 1.0;
  double bound_independent = 1.0;
  BusId bound_argmax_bus = 0;      // generator the bound maximum comes from
  std::vector<MaxSupplyTerm> terms;
};

// Runs both dispatches and evaluates the bounds.  The ratio uses true costs
// on both sides.
PoaReport price_of_anarchy(const Market& m, const SolveOptions& opts = {});

}  // namespace sfe
