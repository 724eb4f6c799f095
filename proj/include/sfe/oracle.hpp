#pragma once
#include <cstddef>
#include <vector>

#include "sfe/dispatch.hpp"
#include "sfe/netmodel.hpp"
#include "sfe/powerflow.hpp"

namespace sfe {

// Proportional bidding mechanics.  Bids w are nonnegative with positive sum;
// the auction clears at p = Σw / ((n_g - 1) demand) and allocates
// s_n = demand - w_n (n_g - 1) demand / Σw, which sums to demand identically.
double clearing_price(const std::vector<double>& w, double demand,
                      std::size_t n_gens);
std::vector<double> supply_from_bids(const std::vector<double>& w,
                                     double demand, std::size_t n_gens);

// Revenue minus true cost for generator n under the proportional rule.
double profit(const Market& m, const std::vector<double>& w, std::size_t n);

// One-sided derivatives of profit in w_n.  Raising the bid lowers the own
// supply, so the right derivative in w uses the left cost derivative and
// vice versa; both sides coincide away from kinks.
struct PayoffDerivative {
  double left = 0.0, right = 0.0;
};
PayoffDerivative payoff_derivative(const Market& m,
                                   const std::vector<double>& w,
                                   std::size_t n);

// A bid profile consistent with a reshaped-cost dispatch certificate:
// w_n = p~ (demand - s_n), where p~ restores the bidding stationarity from
// the dispatch price and line multipliers.  With no binding lines p~ is just
// the dispatch price.
std::vector<double> recover_bids(const Market& m, const ShiftFactors& sf,
                                 const DispatchResult& eq);

// For each generator, maximizes its profit over its one-dimensional feasible
// bid interval (every system constraint is linear in w_n once multiplied by
// Σw) with golden-section search on the strictly concave payoff.
struct BestResponseEntry {
  std::size_t gen = 0;
  double w_lo = 0.0, w_hi = 0.0;  // feasible interval of w_n
  double current = 0.0;           // profit at the given profile
  double best_w = 0.0;
  double improvement = 0.0;       // best found minus current, >= 0
};
struct BestResponseReport {
  bool pass = false;
  double max_improvement = 0.0;
  std::vector<BestResponseEntry> entries;
};
// Throws validation_error when the given profile itself is infeasible.
BestResponseReport best_response_check(const Market& m, const ShiftFactors& sf,
                                       const std::vector<double>& w,
                                       double tol);

// Multipliers of the bid-space equilibrium system: per-generator pairs for
// the supply bounds and per-row pairs for the flow limits (rows follow
// dispatch_polytope order).
struct SfeMultipliers {
  std::vector<double> mu_lo, mu_hi;          // per generator
  std::vector<double> lambda_lo, lambda_hi;  // per polytope row
};

// Maps bid-space multipliers onto the reshaped-cost dispatch problem and
// evaluates that problem's optimality residuals at s = supply_from_bids(w).
struct MultiplierMapReport {
  double price = 0.0;                        // mapped dispatch price
  std::vector<double> mu_lo, mu_hi;          // mapped bound multipliers
  std::vector<double> lambda_lo, lambda_hi;  // mapped row multipliers
  double stationarity = 0.0;
  double feasibility = 0.0;
  double complementarity = 0.0;
  double max_residual() const;
};
MultiplierMapReport multiplier_map_check(const Market& m,
                                         const ShiftFactors& sf,
                                         const std::vector<double>& w,
                                         const SfeMultipliers& sm);

// Exhaustive grid search over balanced supplies for markets with at most
// three generators (the balance removes one dimension).  Feasibility uses
// the same 1e-9 tolerance as the solver.  Throws validation_error when no
// grid point is feasible.
struct BruteForceResult {
  double objective = 0.0;
  std::vector<double> supply;
};
BruteForceResult brute_force_dispatch(const Market& m,
                                      const std::vector<GenObjective>& obj,
                                      double grid_step);

}  // namespace sfe
