#include "sfe/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "sfe/errors.hpp"

namespace sfe {

namespace {

constexpr double kFeasTol = 1e-9;

double checked_bid_sum(const std::vector<double>& w, double demand,
                       std::size_t n_gens) {
  if (n_gens <= 2)
    throw validation_error("bidding needs more than two generators");
  if (!(demand > 0.0)) throw validation_error("bidding needs positive demand");
  double total = 0.0;
  for (double v : w) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw validation_error("bids must be finite and nonnegative");
    total += v;
  }
  if (!(total > 0.0)) throw validation_error("bids must have a positive sum");
  return total;
}

// per-row constant: flow of the all-demand-at-one-bus background,
// g_r = sum_m A_rm * demand + shift_r; the flow constraints in bid space pair
// it with +/- the limit
struct BidContext {
  double demand = 0.0;
  double k = 0.0;  // (n_g - 2) * demand
  std::size_t ng = 0;
  DispatchPolytope poly;
  std::vector<double> g;
};

BidContext make_context(const Market& m, const ShiftFactors& sf) {
  BidContext c;
  c.demand = m.total_demand();
  c.ng = m.num_generators();
  c.k = (static_cast<double>(c.ng) - 2.0) * c.demand;
  c.poly = dispatch_polytope(m, sf);
  c.g.resize(c.poly.num_rows());
  for (std::size_t r = 0; r < c.poly.num_rows(); ++r) {
    double acc = 0.0;
    for (std::size_t n = 0; n < c.ng; ++n) acc += c.poly.rows(r, n);
    c.g[r] = acc * c.demand + c.poly.shift[r];
  }
  return c;
}

}  // namespace

double clearing_price(const std::vector<double>& w, double demand,
                      std::size_t n_gens) {
  double total = checked_bid_sum(w, demand, n_gens);
  return total / ((static_cast<double>(n_gens) - 1.0) * demand);
}

std::vector<double> supply_from_bids(const std::vector<double>& w,
                                     double demand, std::size_t n_gens) {
  double total = checked_bid_sum(w, demand, n_gens);
  std::vector<double> s(w.size());
  double scale = (static_cast<double>(n_gens) - 1.0) * demand / total;
  for (std::size_t n = 0; n < w.size(); ++n) s[n] = demand - w[n] * scale;
  return s;
}

double profit(const Market& m, const std::vector<double>& w, std::size_t n) {
  double demand = m.total_demand();
  double p = clearing_price(w, demand, m.num_generators());
  std::vector<double> s = supply_from_bids(w, demand, m.num_generators());
  return p * s[n] - m.generators()[n].cost.value(s[n]);
}

PayoffDerivative payoff_derivative(const Market& m,
                                   const std::vector<double>& w,
                                   std::size_t n) {
  double demand = m.total_demand();
  std::size_t ng = m.num_generators();
  double total = checked_bid_sum(w, demand, ng);
  std::vector<double> s = supply_from_bids(w, demand, ng);
  double rest = total - w[n];
  double q = (static_cast<double>(ng) - 1.0) * demand * rest / (total * total);
  double base = -(static_cast<double>(ng) - 2.0) /
                (static_cast<double>(ng) - 1.0);
  const CostFunction& c = m.generators()[n].cost;
  // raising w_n lowers s_n, so the direction sides swap
  PayoffDerivative d;
  d.left = base + q * c.deriv_right(s[n]);
  d.right = base + q * c.deriv_left(s[n]);
  return d;
}

std::vector<double> recover_bids(const Market& m, const ShiftFactors& sf,
                                 const DispatchResult& eq) {
  BidContext c = make_context(m, sf);
  double corr = 0.0;
  for (std::size_t r = 0; r < c.poly.num_rows(); ++r) {
    corr += eq.lambda_lo[r] * (c.g[r] + c.poly.limit[r]) -
            eq.lambda_hi[r] * (c.g[r] - c.poly.limit[r]);
  }
  double ptilde =
      eq.price + corr / ((static_cast<double>(c.ng) - 1.0) * c.demand);
  std::vector<double> w(c.ng);
  for (std::size_t n = 0; n < c.ng; ++n)
    w[n] = std::max(0.0, ptilde * (c.demand - eq.supply[n]));
  return w;
}

BestResponseReport best_response_check(const Market& m, const ShiftFactors& sf,
                                       const std::vector<double>& w,
                                       double tol) {
  BidContext c = make_context(m, sf);
  if (w.size() != c.ng)
    throw std::invalid_argument("bid profile size mismatch");
  std::vector<double> s = supply_from_bids(w, c.demand, c.ng);

  std::string viol;
  auto complain = [&viol](const std::string& msg) {
    if (!viol.empty()) viol += "; ";
    viol += msg;
  };
  double vtol = kFeasTol * (1.0 + c.demand);
  for (std::size_t n = 0; n < c.ng; ++n) {
    if (s[n] < c.poly.lo[n] - vtol)
      complain("supply " + std::to_string(n) + " below its minimum");
    if (s[n] > c.poly.hi[n] + vtol)
      complain("supply " + std::to_string(n) + " above its cap");
  }
  std::vector<double> flows = c.poly.row_flows(s);
  for (std::size_t r = 0; r < c.poly.num_rows(); ++r)
    if (std::abs(flows[r]) > c.poly.limit[r] + vtol)
      complain("flow limit exceeded on line " +
               std::to_string(c.poly.line_index[r]));
  if (!viol.empty())
    throw validation_error("bid profile infeasible: " + viol);

  double nd = (static_cast<double>(c.ng) - 1.0) * c.demand;
  BestResponseReport rep;
  rep.pass = true;
  std::vector<double> wmod = w;
  for (std::size_t n = 0; n < c.ng; ++n) {
    double rest = 0.0;
    for (std::size_t i = 0; i < c.ng; ++i)
      if (i != n) rest += w[i];

    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    auto cut = [&](double alpha, double beta) {
      // feasibility half-line alpha * w_n + beta >= 0
      if (alpha > 0.0)
        lo = std::max(lo, -beta / alpha);
      else if (alpha < 0.0)
        hi = std::min(hi, -beta / alpha);
    };
    for (std::size_t i = 0; i < c.ng; ++i) {
      double dl = c.demand - c.poly.lo[i];
      double dh = c.demand - c.poly.hi[i];
      if (i == n) {
        cut(dl - nd, dl * rest);
        cut(nd - dh, -dh * rest);
      } else {
        cut(dl, dl * rest - w[i] * nd);
        cut(-dh, w[i] * nd - dh * rest);
      }
    }
    for (std::size_t r = 0; r < c.poly.num_rows(); ++r) {
      double qrest = 0.0;
      for (std::size_t i = 0; i < c.ng; ++i)
        if (i != n) qrest += c.poly.rows(r, i) * w[i];
      double an = c.poly.rows(r, n);
      double vm = c.g[r] - c.poly.limit[r];
      double vp = c.g[r] + c.poly.limit[r];
      cut(nd * an - vm, nd * qrest - vm * rest);
      cut(vp - nd * an, vp * rest - nd * qrest);
    }
    // the given point is feasible, so numerical noise aside it lies inside
    lo = std::min(lo, w[n]);
    hi = std::max(hi, w[n]);

    auto payoff = [&](double x) {
      wmod[n] = x;
      double v = profit(m, wmod, n);
      return v;
    };
    double a = lo, b = hi;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = payoff(x1), f2 = payoff(x2);
    for (int i = 0; i < 200 && (b - a) > 1e-13 * (1.0 + std::abs(b)); ++i) {
      if (f1 < f2) {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + gr * (b - a);
        f2 = payoff(x2);
      } else {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - gr * (b - a);
        f1 = payoff(x1);
      }
    }
    BestResponseEntry e;
    e.gen = n;
    e.w_lo = lo;
    e.w_hi = hi;
    e.best_w = 0.5 * (a + b);
    double best = payoff(e.best_w);
    for (double cand : {lo, hi}) {
      double v = payoff(cand);
      if (v > best) {
        best = v;
        e.best_w = cand;
      }
    }
    wmod[n] = w[n];
    e.current = profit(m, w, n);
    e.improvement = std::max(0.0, best - e.current);
    rep.max_improvement = std::max(rep.max_improvement, e.improvement);
    rep.entries.push_back(e);
  }
  rep.pass = rep.max_improvement <= tol;
  return rep;
}

double MultiplierMapReport::max_residual() const {
  return std::max(stationarity, std::max(feasibility, complementarity));
}

MultiplierMapReport multiplier_map_check(const Market& m,
                                         const ShiftFactors& sf,
                                         const std::vector<double>& w,
                                         const SfeMultipliers& sm) {
  BidContext c = make_context(m, sf);
  double total = checked_bid_sum(w, c.demand, c.ng);
  double p = clearing_price(w, c.demand, c.ng);
  std::vector<double> s = supply_from_bids(w, c.demand, c.ng);
  std::size_t nr = c.poly.num_rows();
  if (sm.mu_lo.size() != c.ng || sm.mu_hi.size() != c.ng ||
      sm.lambda_lo.size() != nr || sm.lambda_hi.size() != nr)
    throw std::invalid_argument("multiplier block size mismatch");

  MultiplierMapReport rep;
  rep.mu_lo.resize(c.ng);
  rep.mu_hi.resize(c.ng);
  for (std::size_t n = 0; n < c.ng; ++n) {
    rep.mu_lo[n] = (1.0 + c.poly.lo[n] / c.k) * total * sm.mu_lo[n];
    rep.mu_hi[n] = (1.0 + c.poly.hi[n] / c.k) * total * sm.mu_hi[n];
  }
  double lscale = (static_cast<double>(c.ng) - 1.0) /
                  (static_cast<double>(c.ng) - 2.0) * total;
  rep.lambda_lo.resize(nr);
  rep.lambda_hi.resize(nr);
  double corr = 0.0;
  for (std::size_t r = 0; r < nr; ++r) {
    rep.lambda_lo[r] = lscale * sm.lambda_lo[r];
    rep.lambda_hi[r] = lscale * sm.lambda_hi[r];
    corr += sm.lambda_lo[r] * (c.g[r] + c.poly.limit[r]) -
            sm.lambda_hi[r] * (c.g[r] - c.poly.limit[r]);
  }
  rep.price = p - (total / c.k) * corr;

  // optimality residuals of the reshaped-cost dispatch at s
  double sum = 0.0;
  for (std::size_t n = 0; n < c.ng; ++n) {
    sum += s[n];
    double t = rep.price + rep.mu_lo[n] - rep.mu_hi[n];
    for (std::size_t r = 0; r < nr; ++r)
      t -= (rep.lambda_hi[r] - rep.lambda_lo[r]) * c.poly.rows(r, n);
    const CostFunction& cf = m.generators()[n].cost;
    double ml = cf.deriv_left(s[n]) * (1.0 + s[n] / c.k);
    double mr = cf.deriv_right(s[n]) * (1.0 + s[n] / c.k);
    rep.stationarity =
        std::max({rep.stationarity, ml - t, t - mr});
    rep.feasibility = std::max(
        {rep.feasibility, c.poly.lo[n] - s[n], s[n] - c.poly.hi[n]});
    rep.complementarity = std::max(
        {rep.complementarity, -rep.mu_lo[n], -rep.mu_hi[n],
         std::abs(rep.mu_lo[n] * (s[n] - c.poly.lo[n])),
         std::abs(rep.mu_hi[n] * (c.poly.hi[n] - s[n]))});
  }
  rep.feasibility = std::max(rep.feasibility, std::abs(sum - c.demand));
  std::vector<double> flows = c.poly.row_flows(s);
  for (std::size_t r = 0; r < nr; ++r) {
    rep.feasibility =
        std::max(rep.feasibility, std::abs(flows[r]) - c.poly.limit[r]);
    rep.complementarity = std::max(
        {rep.complementarity, -rep.lambda_lo[r], -rep.lambda_hi[r],
         std::abs(rep.lambda_hi[r] * (c.poly.limit[r] - flows[r])),
         std::abs(rep.lambda_lo[r] * (c.poly.limit[r] + flows[r]))});
  }
  rep.stationarity = std::max(rep.stationarity, 0.0);
  rep.feasibility = std::max(rep.feasibility, 0.0);
  return rep;
}

BruteForceResult brute_force_dispatch(const Market& m,
                                      const std::vector<GenObjective>& obj,
                                      double grid_step) {
  std::size_t ng = m.num_generators();
  if (ng > 3)
    throw unsupported_error("grid search supports at most three generators");
  if (!(grid_step > 0.0))
    throw std::invalid_argument("grid step must be positive");
  ShiftFactors sf = build_shift_factors(m.network());
  DispatchPolytope poly = dispatch_polytope(m, sf);
  double demand = poly.demand;
  std::size_t nr = poly.num_rows();

  auto axis = [&](std::size_t n) {
    std::vector<double> v;
    for (std::size_t i = 0;; ++i) {
      double x = poly.lo[n] + static_cast<double>(i) * grid_step;
      if (x >= poly.hi[n]) break;
      v.push_back(x);
    }
    v.push_back(poly.hi[n]);
    return v;
  };

  BruteForceResult best;
  best.objective = std::numeric_limits<double>::infinity();
  double s[3] = {0.0, 0.0, 0.0};
  auto consider = [&]() {
    std::size_t last = ng - 1;
    if (s[last] < poly.lo[last] - kFeasTol ||
        s[last] > poly.hi[last] + kFeasTol)
      return;
    for (std::size_t r = 0; r < nr; ++r) {
      double flow = poly.shift[r];
      for (std::size_t n = 0; n < ng; ++n) flow += poly.rows(r, n) * s[n];
      if (std::abs(flow) > poly.limit[r] + kFeasTol) return;
    }
    double val = 0.0;
    for (std::size_t n = 0; n < ng; ++n) val += obj[n].value(s[n]);
    if (val < best.objective) {
      best.objective = val;
      best.supply.assign(s, s + ng);
    }
  };

  if (ng == 1) {
    s[0] = demand;
    consider();
  } else if (ng == 2) {
    for (double s0 : axis(0)) {
      s[0] = s0;
      s[1] = demand - s0;
      consider();
    }
  } else {
    std::vector<double> a1 = axis(1);
    for (double s0 : axis(0))
      for (double s1 : a1) {
        s[0] = s0;
        s[1] = s1;
        s[2] = demand - s0 - s1;
        consider();
      }
  }
  if (best.supply.empty())
    throw validation_error(
        "grid search found no feasible point; the instance may be infeasible "
        "or the grid too coarse");
  return best;
}

}  // namespace sfe
