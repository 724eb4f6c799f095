#pragma once
#include <cstddef>
#include <vector>

#include "sfe/linalg.hpp"
#include "sfe/netmodel.hpp"
#include "sfe/powerflow.hpp"

namespace sfe {

// Dispatch feasible set in generator space (canonical generator order):
//   sum_n s_n = demand,   lo <= s <= hi,
//   |rows * s + shift| <= limit  per row.
// Rows exist only for lines with a finite limit; a row with limit == 0 pins
// its flow to zero and is handled as an equality.
struct DispatchPolytope {
  double demand = 0.0;
  std::vector<double> lo, hi;           // per generator
  linalg::Matrix rows;                  // #rows x #gens generator shift factors
  std::vector<double> shift;            // per row, load-induced flow offset
  std::vector<double> limit;            // per row, finite and >= 0
  std::vector<std::size_t> line_index;  // per row, index into network lines

  std::size_t num_rows() const { return limit.size(); }
  std::size_t num_gens() const { return lo.size(); }
  // rows * s + shift
  std::vector<double> row_flows(const std::vector<double>& s) const;
};

DispatchPolytope dispatch_polytope(const Market& m, const ShiftFactors& sf);

// Convex per-generator objective described by its marginal: contiguous pieces
// covering [0, smax], base marginal g + h*s on a piece, full marginal
// (g + h*s) * (1 + s * inv_k).  inv_k = 0 gives the plain cost; inv_k = 1/K
// with K = (n_g - 2) * D gives the reshaped cost whose competitive dispatch
// matches the bidding equilibrium.
struct MarginalPiece {
  double lo = 0.0, hi = 0.0;
  double g = 0.0, h = 0.0;
};

struct GenObjective {
  std::vector<MarginalPiece> pieces;
  double inv_k = 0.0;

  double value(double s) const;  // integral of the marginal from 0
  double marginal_left(double s) const;
  double marginal_right(double s) const;
};

std::vector<GenObjective> true_objectives(const Market& m);
std::vector<GenObjective> modified_objectives(const Market& m);

struct SolveOptions {
  double tol = 1e-11;       // residual target, scaled by problem magnitudes
  int max_iterations = 200;
};

// Residuals of the optimality system at a candidate point.  Multipliers at
// the box bounds are implied: any marginal/price mismatch at a generator is
// attributed to the nearest bound and scored as multiplier * slack, so a
// point hugging a bound with a tiny slack passes while a genuinely interior
// mispricing fails.
struct KktInfo {
  double stationarity = 0.0;    // pricing consistency per generator
  double balance = 0.0;         // |sum s - demand|
  double feasibility = 0.0;     // box and flow violations (pinned rows exact)
  double complementarity = 0.0; // row multiplier * slack, multiplier >= 0
  double max_residual() const;
  bool ok(double tol) const { return max_residual() <= tol; }
};

KktInfo kkt_residual(const DispatchPolytope& poly,
                     const std::vector<GenObjective>& obj,
                     const std::vector<double>& supply, double price,
                     const std::vector<double>& lambda_lo,
                     const std::vector<double>& lambda_hi);

struct DispatchResult {
  std::vector<double> supply;      // per generator
  double objective = 0.0;          // sum of objective values at supply
  double price = 0.0;              // balance multiplier
  std::vector<double> lambda_lo;   // per polytope row, >= 0 (flow >= -limit)
  std::vector<double> lambda_hi;   // per polytope row, >= 0 (flow <= limit)
  std::vector<double> row_flows;   // per polytope row
  KktInfo kkt;
  int iterations = 0;
};

// Minimizes the separable convex objective over the polytope with a primal-
// dual interior-point iteration on a per-piece variable split.  Requires a
// feasible polytope with a nonempty interior relative to the equalities
// (which a validated market guarantees).  Throws solver_error when the
// iteration fails to reach the requested residuals.
DispatchResult solve_separable_convex(const DispatchPolytope& poly,
                                      const std::vector<GenObjective>& obj,
                                      const SolveOptions& opts = {});

// Cheapest balanced dispatch under the true costs.
DispatchResult economic_dispatch(const Market& m, const SolveOptions& opts = {});
// Dispatch under the reshaped costs; its supply equals the bidding
// equilibrium outcome and its objective is evaluated with the reshaped costs.
DispatchResult equilibrium_dispatch(const Market& m,
                                    const SolveOptions& opts = {});

// True-cost total of a supply vector (helper for reporting equilibrium cost).
double true_cost(const Market& m, const std::vector<double>& supply);

}  // namespace sfe
