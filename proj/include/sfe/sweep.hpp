#pragma once
#include <cstddef>
#include <vector>

#include "sfe/dispatch.hpp"
#include "sfe/netmodel.hpp"

namespace sfe {

// Copy of the market with every finite line limit multiplied by `scale`
// (unlimited lines stay unlimited, pinned f = 0 lines stay pinned).
Market scale_flow_limits(const Market& m, double scale);

// Indices of polytope rows whose relative slack (limit - |flow|) / limit is
// below `threshold`.  Rows with limit == 0 always count: their flow sits on
// the limit by construction.
std::vector<std::size_t> congested_rows(const DispatchPolytope& poly,
                                        const std::vector<double>& row_flows,
                                        double threshold);

struct CongestionSweepConfig {
  std::vector<double> targets;   // congestion percentages, each in [0, 100)
  double threshold = 1e-6;       // relative slack counting as congested
  double scale_tol = 1e-3;       // relative width ending the scale search
  SolveOptions solve;
};

struct CongestionRow {
  double target = 0.0;      // requested congestion percentage
  double achieved = 0.0;    // percentage actually reached
  double scale = 0.0;       // uniform flow-limit multiplier used
  double poa = 0.0;
  double bound = 0.0;
  double bound_independent = 0.0;
  bool reachable = false;   // achieved within one line of the target
};

// For each target percentage, searches for a uniform flow-limit scale whose
// equilibrium dispatch congests that fraction of the limited lines, then
// evaluates the price of anarchy and both bounds at that scale.  Scales below
// the feasibility edge (demand no longer strictly servable) are never used;
// targets that would need them come back with reachable = false and the
// closest feasible row.  Rows are emitted in target order.
std::vector<CongestionRow> congestion_sweep(const Market& m,
                                            const CongestionSweepConfig& cfg);

}  // namespace sfe
