#include "sfe/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <utility>

#include "sfe/errors.hpp"
#include "sfe/poa.hpp"
#include "sfe/powerflow.hpp"

namespace sfe {

Market scale_flow_limits(const Market& m, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw validation_error("flow limit scale must be positive and finite");
  std::vector<Line> lines = m.network().lines();
  for (Line& l : lines)
    if (l.limited()) l.f *= scale;
  const std::vector<BusId>& buses = m.network().buses();
  std::map<BusId, double> loads;
  for (std::size_t i = 0; i < buses.size(); ++i)
    if (m.loads()[i] != 0.0) loads[buses[i]] = m.loads()[i];
  return Market(Network(buses, std::move(lines)), loads, m.generators());
}

std::vector<std::size_t> congested_rows(const DispatchPolytope& poly,
                                        const std::vector<double>& row_flows,
                                        double threshold) {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < poly.num_rows(); ++r) {
    double lim = poly.limit[r];
    if (lim == 0.0) {
      out.push_back(r);  // pinned line, permanently on its limit
      continue;
    }
    if ((lim - std::fabs(row_flows[r])) / lim < threshold) out.push_back(r);
  }
  return out;
}

namespace {

struct Probe {
  bool usable = false;  // strictly feasible and solved
  long count = 0;       // congested rows at the equilibrium dispatch
};

Probe probe_scale(const Market& base, double scale,
                  const CongestionSweepConfig& cfg) {
  Probe p;
  Market scaled = scale_flow_limits(base, scale);
  if (!validate_market(scaled).ok()) return p;
  try {
    ShiftFactors sf = build_shift_factors(scaled.network());
    DispatchPolytope poly = dispatch_polytope(scaled, sf);
    DispatchResult eq =
        solve_separable_convex(poly, modified_objectives(scaled), cfg.solve);
    p.count =
        (long)congested_rows(poly, eq.row_flows, cfg.threshold).size();
    p.usable = true;
  } catch (const solver_error&) {
    // leave the probe unusable; the search backs away from this scale
  }
  return p;
}

}  // namespace

std::vector<CongestionRow> congestion_sweep(const Market& m,
                                            const CongestionSweepConfig& cfg) {
  long limited = 0;
  for (const Line& l : m.network().lines())
    if (l.limited()) ++limited;
  if (limited == 0)
    throw validation_error("congestion sweep needs at least one limited line");
  for (double t : cfg.targets)
    if (!(t >= 0.0 && t < 100.0))
      throw validation_error("congestion targets must lie in [0, 100)");
  if (!(cfg.threshold > 0.0) || !(cfg.scale_tol > 0.0))
    throw validation_error(
        "congestion threshold and scale tolerance must be positive");

  // Loose end of the bracket: double until nothing is congested (or give up
  // and live with the residual count; pinned lines never decongest).
  double hi = 1.0;
  Probe phi = probe_scale(m, hi, cfg);
  for (int i = 0; i < 60 && !(phi.usable && phi.count == 0); ++i) {
    hi *= 2.0;
    phi = probe_scale(m, hi, cfg);
  }
  if (!phi.usable)
    throw validation_error(
        "market is infeasible at every probed flow-limit scale");

  // Tight end: halve down to the strict-feasibility edge.  Markets that stay
  // feasible at any scale (every bus group can supply itself) never hit an
  // edge, so also stop once halving has not grown the congested count for a
  // while; far below the solve tolerance the counts are meaningless anyway.
  double lo = hi;
  Probe plo = phi;
  double bad = 0.0;
  double cur = hi;
  int stale = 0;
  while (cur > 0x1p-80 && plo.count < limited && stale < 6) {
    Probe next = probe_scale(m, cur / 2.0, cfg);
    if (!next.usable) {
      bad = cur / 2.0;
      break;
    }
    cur /= 2.0;
    if (next.count > plo.count) {
      lo = cur;
      plo = next;
      stale = 0;
    } else {
      ++stale;
    }
  }
  if (bad > 0.0) {
    for (int i = 0; i < 60 && lo - bad > cfg.scale_tol * lo; ++i) {
      double mid = 0.5 * (lo + bad);
      Probe pm = probe_scale(m, mid, cfg);
      if (pm.usable) {
        lo = mid;
        plo = pm;
      } else {
        bad = mid;
      }
    }
  }

  std::vector<CongestionRow> rows;
  rows.reserve(cfg.targets.size());
  for (double tgt : cfg.targets) {
    long want = std::lround(tgt / 100.0 * (double)limited);
    double scale;
    if (plo.count <= want) {
      scale = lo;  // even the tightest feasible scale undershoots the target
    } else if (phi.count >= want) {
      scale = hi;  // even the loosest probed scale overshoots
    } else {
      double a = lo, b = hi;
      long ca = plo.count, cb = phi.count;  // ca > want >= cb
      while (b - a > cfg.scale_tol * b) {
        double mid = 0.5 * (a + b);
        Probe pm = probe_scale(m, mid, cfg);
        if (!pm.usable) {  // solver hiccup: treat as the tight side
          a = mid;
          continue;
        }
        if (pm.count > want) {
          a = mid;
          ca = pm.count;
        } else {
          b = mid;
          cb = pm.count;
        }
      }
      scale = std::labs(ca - want) < std::labs(cb - want) ? a : b;
    }

    Market scaled = scale_flow_limits(m, scale);
    PoaReport rep = price_of_anarchy(scaled, cfg.solve);
    ShiftFactors sf = build_shift_factors(scaled.network());
    DispatchPolytope poly = dispatch_polytope(scaled, sf);
    long cnt = (long)congested_rows(poly, rep.equilibrium.row_flows,
                                    cfg.threshold)
                   .size();

    CongestionRow row;
    row.target = tgt;
    row.achieved = 100.0 * (double)cnt / (double)limited;
    row.scale = scale;
    row.poa = rep.poa;
    row.bound = rep.bound;
    row.bound_independent = rep.bound_independent;
    row.reachable = std::labs(cnt - want) <= 1;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace sfe
