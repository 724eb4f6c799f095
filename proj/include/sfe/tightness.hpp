#pragma once
#include <cstddef>
#include <vector>

#include "sfe/netmodel.hpp"
#include "sfe/topology.hpp"

namespace sfe {

// Parameters of the worst-case family: equal loads D/N, caps [0, D], one
// kinked-cost generator at the relabeled center (slopes `slope` then 1, kink
// at t) and linear cost alpha() everywhere else, with flow limits sized so
// the cheap dispatch saturates every line.
struct TightnessParams {
  std::size_t n = 0;       // node count
  double demand = 0.0;     // D
  double t = 0.0;          // center generator's kink
  double delta_cap = 0.0;  // total headroom routed to the center
  double slope = 0.0;      // first-piece slope, in (0, 1)

  double d_hat1() const { return demand / static_cast<double>(n) + delta_cap; }
  // Slope that makes the linear generators' reshaped marginal at their
  // equilibrium share equal the center's right marginal at the kink.
  double alpha() const;
};

void validate_params(const TightnessParams& p);  // throws validation_error

struct TightnessInstance {
  Market market;
  TightnessParams params;
  std::vector<BusId> original_bus;  // original id per relabeled bus index
  std::vector<double> supply_optimal;      // (d_hat1, (D-d_hat1)/(N-1), ...)
  std::vector<double> supply_equilibrium;  // (t, (D-t)/(N-1), ...)
  double poa_analytic = 1.0;
  double bound = 1.0;  // 1 + d_hat1 / ((N-2) D)
};

// Builds the instance on the given weakly cyclic network (relabeled so the
// spanning-tree center becomes bus 1): radial limits from the subtree sizes,
// then per-cycle flow adjustment or admittance balancing so the saturating
// flows satisfy every loop law with the chord flows pinned (possibly to 0).
TightnessInstance build_instance(const Network& net, const TightnessParams& p);

// Tree-edge flow limits, proportional to the subtree the edge serves:
// f = |subtree| * delta_cap / (N-1).  Indexed per line; chords get 0.
std::vector<double> radial_flow_limits(const Network& net,
                                       const RootedTree& rt, double delta_cap);

// Loop-law restoration on one cycle: flows and admittances are listed around
// the cycle; adds the uniform shift that zeroes sum(flow/b) and returns it.
double cycle_adjustment(std::vector<double>& flows,
                        const std::vector<double>& b);

// Loop-law restoration without touching the flows: admittance 1 on edges
// with positive flow (and on zero-flow edges), one common scale on negative
// ones.  Requires both signs present; throws validation_error otherwise.
std::vector<double> admittance_balancing(const std::vector<double>& flows);

double analytical_poa(const TightnessParams& p);
double analytic_bound(const TightnessParams& p);

struct SweepRow {
  int step = 0;
  double t = 0.0, d_hat1 = 0.0, slope = 0.0, alpha = 0.0;
  double poa_analytic = 0.0, poa_numeric = 0.0, bound = 0.0, gap = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  double gap = 0.0;  // final (smallest) certified gap
};

// Drives the parameter family toward the bound: eta halving with
// d_hat1 = D (1 - eta^2), t = d_hat1 - eta D, slope = eta^2, which keeps the
// cheap-to-kink spacing dominating both the cap slack and the first-piece
// slope, so bound - poa shrinks linearly in eta.  Steps whose parameters
// violate the invariants (early, large eta) are skipped.  Every step is also
// solved numerically.  Stops once bound - poa_analytic < epsilon; throws
// solver_error reporting the smallest achieved gap when floating point runs
// out before that.
SweepResult tightness_gap(const Network& net, double epsilon);

}  // namespace sfe
