#include "sfe/poa.hpp"

#include <algorithm>
#include <cmath>

#include "sfe/errors.hpp"
#include "sfe/topology.hpp"

namespace sfe {

std::vector<MaxSupplyTerm> max_supply_terms(const Market& m) {
  const Network& net = m.network();
  const double demand = m.total_demand();
  const double sentinel = m.flow_sentinel();
  CycleDecomposition dec = cycle_decomposition(net);

  double min_sum = 0.0;
  for (const auto& g : m.generators()) min_sum += g.smin;

  std::vector<MaxSupplyTerm> out;
  out.reserve(m.num_generators());
  for (const auto& g : m.generators()) {
    MaxSupplyTerm t;
    t.bus = g.bus;
    t.cap = g.smax;
    t.residual = demand - (min_sum - g.smin);
    NeighborPartition p = neighbor_partition(net, g.bus, dec);
    double inflow = 0.0;
    for (const auto& el : effective_flow_limits(net, p, sentinel))
      inflow += el.f_hat;
    t.imports = m.load(g.bus) + inflow;
    t.value = std::min({t.cap, t.residual, t.imports});
    out.push_back(t);
  }
  return out;
}

std::vector<double> max_supply_witness(const Market& m, std::size_t gen) {
  if (gen >= m.num_generators())
    throw std::invalid_argument("witness: generator index out of range");
  ShiftFactors sf = build_shift_factors(m.network());
  DispatchPolytope poly = dispatch_polytope(m, sf);
  // reward only the chosen generator; the LP optimum then pushes its output
  // as high as the network and the other units' ranges allow
  std::vector<GenObjective> push;
  push.reserve(m.num_generators());
  for (std::size_t n = 0; n < m.num_generators(); ++n) {
    const Generator& g = m.generators()[n];
    push.push_back({{{0.0, g.smax, n == gen ? -1.0 : 0.0, 0.0}}, 0.0});
  }
  return solve_separable_convex(poly, push, SolveOptions{}).supply;
}

double network_independent_bound(const Market& m) {
  if (m.num_generators() <= 2)
    throw validation_error("bound needs more than two generators");
  return 1.0 + 1.0 / (static_cast<double>(m.num_generators()) - 2.0);
}

double poa_upper_bound(const Market& m) {
  if (m.num_generators() <= 2)
    throw validation_error("bound needs more than two generators");
  double demand = m.total_demand();
  if (!(demand > 0.0)) throw validation_error("bound needs positive demand");
  double k = (static_cast<double>(m.num_generators()) - 2.0) * demand;
  double worst = 0.0;
  for (const auto& t : max_supply_terms(m)) worst = std::max(worst, t.value);
  return 1.0 + worst / k;
}

PoaReport price_of_anarchy(const Market& m, const SolveOptions& opts) {
  PoaReport r;
  ShiftFactors sf = build_shift_factors(m.network());
  DispatchPolytope poly = dispatch_polytope(m, sf);
  r.optimal = solve_separable_convex(poly, true_objectives(m), opts);
  r.equilibrium = solve_separable_convex(poly, modified_objectives(m), opts);
  r.cost_optimal = r.optimal.objective;  // true objective already
  r.cost_equilibrium = true_cost(m, r.equilibrium.supply);
  r.poa = r.cost_equilibrium / r.cost_optimal;

  r.terms = max_supply_terms(m);
  double demand = m.total_demand();
  double k = (static_cast<double>(m.num_generators()) - 2.0) * demand;
  double worst = 0.0;
  r.bound_argmax_bus = r.terms.empty() ? 0 : r.terms.front().bus;
  for (const auto& t : r.terms) {
    if (t.value > worst) {
      worst = t.value;
      r.bound_argmax_bus = t.bus;
    }
  }
  r.bound = 1.0 + worst / k;
  r.bound_independent = network_independent_bound(m);
  return r;
}

}  // namespace sfe
