#include "sfe/dispatch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include "sfe/errors.hpp"
#include "sfe/kernels.hpp"

namespace sfe {

using linalg::Lu;
using linalg::Matrix;

std::vector<double> DispatchPolytope::row_flows(
    const std::vector<double>& s) const {
  std::vector<double> out(num_rows());
  for (std::size_t r = 0; r < num_rows(); ++r)
    out[r] = kern::dot(rows.row(r), s.data(), s.size()) + shift[r];
  return out;
}

DispatchPolytope dispatch_polytope(const Market& m, const ShiftFactors& sf) {
  DispatchPolytope p;
  p.demand = m.total_demand();
  for (const auto& g : m.generators()) {
    p.lo.push_back(g.smin);
    p.hi.push_back(g.smax);
  }
  Matrix ag = generator_shift_matrix(m, sf);
  std::vector<double> base = load_flow_term(m, sf);
  const auto& lines = m.network().lines();
  std::size_t nlim = 0;
  for (const auto& l : lines)
    if (l.limited()) ++nlim;
  p.rows = Matrix(nlim, m.num_generators());
  std::size_t r = 0;
  for (std::size_t l = 0; l < lines.size(); ++l) {
    if (!lines[l].limited()) continue;
    for (std::size_t n = 0; n < m.num_generators(); ++n) p.rows(r, n) = ag(l, n);
    p.shift.push_back(base[l]);
    p.limit.push_back(lines[l].f);
    p.line_index.push_back(l);
    ++r;
  }
  return p;
}

namespace {

double piece_marginal(const MarginalPiece& p, double inv_k, double s) {
  return (p.g + p.h * s) * (1.0 + inv_k * s);
}

std::vector<MarginalPiece> marginal_pieces(const Generator& gen) {
  std::vector<MarginalPiece> ps;
  const CostFunction& c = gen.cost;
  switch (c.kind()) {
    case CostKind::linear:
      ps.push_back({0.0, gen.smax, c.a(), 0.0});
      break;
    case CostKind::quadratic:
      ps.push_back({0.0, gen.smax, c.b(), 2.0 * c.a()});
      break;
    case CostKind::piecewise_linear: {
      const auto& kinks = c.kinks();
      const auto& slopes = c.slopes();
      double prev = 0.0;
      for (std::size_t i = 0; i < slopes.size() && prev < gen.smax; ++i) {
        double hi = (i + 1 == slopes.size())
                        ? gen.smax
                        : std::min(kinks[i], gen.smax);
        if (hi > prev) ps.push_back({prev, hi, slopes[i], 0.0});
        prev = hi;
      }
      break;
    }
  }
  return ps;
}

}  // namespace

double GenObjective::value(double s) const {
  double total = 0.0;
  for (const auto& p : pieces) {
    if (s <= p.lo) break;
    double b = std::min(s, p.hi);
    auto anti = [&](double x) {
      return p.g * x + 0.5 * p.h * x * x +
             inv_k * (0.5 * p.g * x * x + p.h * x * x * x / 3.0);
    };
    total += anti(b) - anti(p.lo);
  }
  return total;
}

double GenObjective::marginal_left(double s) const {
  const MarginalPiece* at = &pieces.front();
  for (const auto& p : pieces) {
    if (p.lo < s)
      at = &p;
    else
      break;
  }
  return piece_marginal(*at, inv_k, std::clamp(s, at->lo, at->hi));
}

double GenObjective::marginal_right(double s) const {
  const MarginalPiece* at = &pieces.back();
  for (const auto& p : pieces) {
    if (s < p.hi) {
      at = &p;
      break;
    }
  }
  return piece_marginal(*at, inv_k, std::clamp(s, at->lo, at->hi));
}

std::vector<GenObjective> true_objectives(const Market& m) {
  std::vector<GenObjective> out;
  out.reserve(m.num_generators());
  for (const auto& g : m.generators()) out.push_back({marginal_pieces(g), 0.0});
  return out;
}

std::vector<GenObjective> modified_objectives(const Market& m) {
  if (m.num_generators() <= 2)
    throw validation_error("reshaped costs need more than two generators");
  double d = m.total_demand();
  if (!(d > 0.0)) throw validation_error("reshaped costs need positive demand");
  double k = (static_cast<double>(m.num_generators()) - 2.0) * d;
  std::vector<GenObjective> out;
  out.reserve(m.num_generators());
  for (const auto& g : m.generators())
    out.push_back({marginal_pieces(g), 1.0 / k});
  return out;
}

double true_cost(const Market& m, const std::vector<double>& supply) {
  double total = 0.0;
  for (std::size_t n = 0; n < m.num_generators(); ++n)
    total += m.generators()[n].cost.value(supply[n]);
  return total;
}

double KktInfo::max_residual() const {
  return std::max(std::max(stationarity, balance),
                  std::max(feasibility, complementarity));
}

KktInfo kkt_residual(const DispatchPolytope& poly,
                     const std::vector<GenObjective>& obj,
                     const std::vector<double>& supply, double price,
                     const std::vector<double>& lambda_lo,
                     const std::vector<double>& lambda_hi) {
  const std::size_t ng = poly.num_gens();
  const std::size_t nr = poly.num_rows();
  KktInfo k;

  std::vector<double> t(ng, price);
  for (std::size_t r = 0; r < nr; ++r) {
    double d = lambda_hi[r] - lambda_lo[r];
    if (d == 0.0) continue;
    for (std::size_t n = 0; n < ng; ++n) t[n] -= d * poly.rows(r, n);
  }

  double sum = 0.0;
  for (std::size_t n = 0; n < ng; ++n) {
    double s = supply[n];
    sum += s;
    k.feasibility = std::max(
        {k.feasibility, poly.lo[n] - s, s - poly.hi[n]});
    double ml = obj[n].marginal_left(s);
    double mr = obj[n].marginal_right(s);
    // mismatch is attributed to the nearest box bound and weighted by the
    // bound slack: exact at the bound, full strength in the interior
    double below = std::max(0.0, ml - t[n]);  // price under marginal
    double above = std::max(0.0, t[n] - mr);  // price over marginal
    k.stationarity =
        std::max({k.stationarity, below * std::max(0.0, s - poly.lo[n]),
                  above * std::max(0.0, poly.hi[n] - s)});
  }
  k.balance = std::abs(sum - poly.demand);

  std::vector<double> flows = poly.row_flows(supply);
  for (std::size_t r = 0; r < nr; ++r) {
    if (poly.limit[r] == 0.0) {
      k.feasibility = std::max(k.feasibility, std::abs(flows[r]));
      continue;  // pinned flow: multiplier pair is free
    }
    k.feasibility = std::max(k.feasibility, std::abs(flows[r]) - poly.limit[r]);
    k.complementarity = std::max(
        {k.complementarity, -lambda_lo[r], -lambda_hi[r],
         std::abs(lambda_hi[r] * (poly.limit[r] - flows[r])),
         std::abs(lambda_lo[r] * (poly.limit[r] + flows[r]))});
  }
  k.feasibility = std::max(k.feasibility, 0.0);
  return k;
}

namespace {

struct Segment {
  std::size_t gen = 0;
  double s0 = 0.0;     // absolute start of the piece slice
  double width = 0.0;  // > 0
  double g = 0.0, h = 0.0, inv_k = 0.0;
};

double seg_marginal(const Segment& sg, double y) {
  double s = sg.s0 + y;
  return (sg.g + sg.h * s) * (1.0 + sg.inv_k * s);
}

double seg_curvature(const Segment& sg, double y) {
  double s = sg.s0 + y;
  return sg.h * (1.0 + sg.inv_k * s) + (sg.g + sg.h * s) * sg.inv_k;
}

struct Iterate {
  std::vector<double> y, t, zlo, zhi, eta, nu;
};

}  // namespace

DispatchResult solve_separable_convex(const DispatchPolytope& poly,
                                      const std::vector<GenObjective>& obj,
                                      const SolveOptions& opts) {
  const std::size_t ng = poly.num_gens();
  if (obj.size() != ng || poly.hi.size() != ng)
    throw std::invalid_argument("dispatch: objective/polytope size mismatch");

  // split every generator range into its marginal pieces; each slice becomes
  // a bounded variable and convexity makes them fill in marginal order
  std::vector<Segment> segs;
  for (std::size_t n = 0; n < ng; ++n) {
    double covered = 0.0;
    for (const auto& p : obj[n].pieces) {
      double a = std::max(p.lo, poly.lo[n]);
      double b = std::min(p.hi, poly.hi[n]);
      if (b - a > 0.0) {
        segs.push_back({n, a, b - a, p.g, p.h, obj[n].inv_k});
        covered += b - a;
      }
    }
    double want = poly.hi[n] - poly.lo[n];
    if (std::abs(covered - want) > 1e-9 * (1.0 + want))
      throw std::invalid_argument(
          "dispatch: objective pieces do not cover the generator range");
  }
  const std::size_t m = segs.size();
  if (m == 0) throw solver_error("dispatch: no adjustable generation");

  // equality rows: balance plus every pinned (limit == 0) flow row
  std::vector<std::size_t> ineq_rows, pin_rows;
  for (std::size_t r = 0; r < poly.num_rows(); ++r)
    (poly.limit[r] == 0.0 ? pin_rows : ineq_rows).push_back(r);

  std::vector<double> lodot(poly.num_rows(), 0.0);
  for (std::size_t r = 0; r < poly.num_rows(); ++r)
    lodot[r] = kern::dot(poly.rows.row(r), poly.lo.data(), ng);
  double lo_sum = 0.0;
  for (double v : poly.lo) lo_sum += v;

  // candidate equality system, rank-filtered below
  std::vector<std::vector<double>> eq_cand;
  std::vector<double> eq_rhs_cand;
  std::vector<int> eq_tag;  // -1 = balance, else polytope row index
  {
    eq_cand.emplace_back(m, 1.0);
    eq_rhs_cand.push_back(poly.demand - lo_sum);
    eq_tag.push_back(-1);
    for (std::size_t r : pin_rows) {
      std::vector<double> row(m);
      for (std::size_t j = 0; j < m; ++j) row[j] = poly.rows(r, segs[j].gen);
      eq_cand.push_back(std::move(row));
      eq_rhs_cand.push_back(-poly.shift[r] - lodot[r]);
      eq_tag.push_back(static_cast<int>(r));
    }
  }

  double pscale = std::max(1.0, std::abs(poly.demand));
  for (std::size_t r = 0; r < poly.num_rows(); ++r)
    pscale = std::max(pscale, poly.limit[r] + std::abs(poly.shift[r]));

  // drop dependent pinned rows (consistent duplicates are harmless, an
  // inconsistent one means the instance is infeasible)
  std::vector<std::size_t> eq_keep;
  std::vector<std::vector<double>> basis;
  std::vector<double> basis_rhs;
  for (std::size_t i = 0; i < eq_cand.size(); ++i) {
    std::vector<double> v = eq_cand[i];
    double rho = eq_rhs_cand[i];
    double orig = std::sqrt(kern::dot(v.data(), v.data(), m));
    for (std::size_t b = 0; b < basis.size(); ++b) {
      double c = kern::dot(v.data(), basis[b].data(), m);
      kern::axpy(-c, basis[b].data(), v.data(), m);
      rho -= c * basis_rhs[b];
    }
    double rem = std::sqrt(kern::dot(v.data(), v.data(), m));
    if (rem > 1e-11 * std::max(1.0, orig)) {
      kern::scal(1.0 / rem, v.data(), m);
      basis.push_back(std::move(v));
      basis_rhs.push_back(rho / rem);
      eq_keep.push_back(i);
    } else if (std::abs(rho) > 1e-8 * pscale) {
      throw solver_error("dispatch: pinned flow constraints are inconsistent");
    }
  }
  const std::size_t neq = eq_keep.size();
  Matrix ceq(neq, m);
  std::vector<double> deq(neq);
  for (std::size_t k = 0; k < neq; ++k) {
    for (std::size_t j = 0; j < m; ++j) ceq(k, j) = eq_cand[eq_keep[k]][j];
    deq[k] = eq_rhs_cand[eq_keep[k]];
  }

  // inequality rows in +/- pairs: cin y <= u
  const std::size_t nin = 2 * ineq_rows.size();
  Matrix cin(nin, m);
  std::vector<double> u(nin);
  for (std::size_t i = 0; i < ineq_rows.size(); ++i) {
    std::size_t r = ineq_rows[i];
    for (std::size_t j = 0; j < m; ++j) {
      double a = poly.rows(r, segs[j].gen);
      cin(2 * i, j) = a;
      cin(2 * i + 1, j) = -a;
    }
    u[2 * i] = poly.limit[r] - poly.shift[r] - lodot[r];
    u[2 * i + 1] = poly.limit[r] + poly.shift[r] + lodot[r];
  }

  std::vector<double> w(m);
  for (std::size_t j = 0; j < m; ++j) w[j] = segs[j].width;

  double dscale = 1.0;
  for (std::size_t j = 0; j < m; ++j)
    dscale = std::max({dscale, std::abs(seg_marginal(segs[j], 0.0)),
                       std::abs(seg_marginal(segs[j], w[j]))});

  Iterate it;
  it.y.resize(m);
  for (std::size_t j = 0; j < m; ++j) it.y[j] = 0.5 * w[j];
  it.zlo.assign(m, 1.0);
  it.zhi.assign(m, 1.0);
  it.nu.assign(neq, 0.0);
  it.t.resize(nin);
  it.eta.assign(nin, 1.0);
  {
    std::vector<double> cy = cin.mul(it.y);
    for (std::size_t i = 0; i < nin; ++i)
      it.t[i] = std::max(u[i] - cy[i], 0.05 * (1.0 + std::abs(u[i])));
  }

  const std::size_t denom = 2 * m + nin;
  const double tau = 0.995;
  Iterate best = it;
  double best_res = std::numeric_limits<double>::infinity();
  bool converged = false;
  int iters = 0;
  int stalls = 0;
  int since_best = 0;

  // slack floors keep the eliminated blocks finite when constraints bind
  // exactly; the polish pass below finishes what the barrier cannot
  auto slack_floor = [&](std::size_t i) {
    return std::max(it.t[i], 1e-13 * (1.0 + std::abs(u[i])));
  };

  std::vector<double> mg(m), hh(m), rstat(m), req(neq), rin(nin), cy(nin);

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    iters = iter;
    for (std::size_t j = 0; j < m; ++j) {
      mg[j] = seg_marginal(segs[j], it.y[j]);
      hh[j] = seg_curvature(segs[j], it.y[j]);
    }
    cy = cin.mul(it.y);
    double viol = 0.0;
    for (std::size_t i = 0; i < nin; ++i) {
      rin[i] = cy[i] + it.t[i] - u[i];
      viol = std::max(viol, cy[i] - u[i]);
    }
    for (std::size_t k = 0; k < neq; ++k)
      req[k] = kern::dot(ceq.row(k), it.y.data(), m) - deq[k];
    for (std::size_t j = 0; j < m; ++j) {
      double s = mg[j] + it.zhi[j] - it.zlo[j];
      for (std::size_t i = 0; i < nin; ++i) s += cin(i, j) * it.eta[i];
      for (std::size_t k = 0; k < neq; ++k) s -= ceq(k, j) * it.nu[k];
      rstat[j] = s;
    }
    double gap = 0.0;
    for (std::size_t j = 0; j < m; ++j)
      gap += it.zlo[j] * it.y[j] + it.zhi[j] * (w[j] - it.y[j]);
    for (std::size_t i = 0; i < nin; ++i) gap += it.eta[i] * it.t[i];
    gap /= static_cast<double>(denom);

    double rstat_inf = 0.0, req_inf = 0.0;
    for (double v : rstat) rstat_inf = std::max(rstat_inf, std::abs(v));
    for (double v : req) req_inf = std::max(req_inf, std::abs(v));
    double res = std::max({rstat_inf / (1.0 + dscale), req_inf / (1.0 + pscale),
                           viol / (1.0 + pscale), gap / (1.0 + dscale)});
    if (!std::isfinite(res)) break;
    if (res < best_res) {
      best_res = res;
      best = it;
      since_best = 0;
    } else if (++since_best >= 30) {
      break;
    }
    if (res <= opts.tol) {
      converged = true;
      break;
    }

    // normal system on (dy, dnu); bound and slack blocks eliminated
    std::vector<double> dg(nin);
    for (std::size_t i = 0; i < nin; ++i) dg[i] = it.eta[i] / slack_floor(i);
    const std::size_t nsys = m + neq;
    Matrix sys(nsys, nsys);
    for (std::size_t j = 0; j < m; ++j)
      sys(j, j) = hh[j] + it.zlo[j] / it.y[j] + it.zhi[j] / (w[j] - it.y[j]);
    for (std::size_t i = 0; i < nin; ++i) {
      const double* arow = cin.row(i);
      for (std::size_t a = 0; a < m; ++a) {
        if (arow[a] == 0.0) continue;
        double da = dg[i] * arow[a];
        for (std::size_t b = 0; b < m; ++b) sys(a, b) += da * arow[b];
      }
    }
    for (std::size_t k = 0; k < neq; ++k)
      for (std::size_t j = 0; j < m; ++j) {
        sys(j, m + k) = -ceq(k, j);
        sys(m + k, j) = ceq(k, j);
      }
    std::optional<Lu> lu;
    try {
      lu.emplace(Lu::factor(std::move(sys)));
    } catch (const solver_error&) {
      break;  // degenerate active set; settle for the best iterate so far
    }

    auto solve_dir = [&](double mu, Iterate& d) {
      std::vector<double> rhs(nsys, 0.0);
      for (std::size_t j = 0; j < m; ++j) {
        rhs[j] = -rstat[j] - (mu / (w[j] - it.y[j]) - it.zhi[j]) +
                 (mu / it.y[j] - it.zlo[j]);
      }
      for (std::size_t i = 0; i < nin; ++i) {
        double c = mu / slack_floor(i) - it.eta[i] + dg[i] * rin[i];
        if (c == 0.0) continue;
        const double* arow = cin.row(i);
        for (std::size_t j = 0; j < m; ++j) rhs[j] -= c * arow[j];
      }
      for (std::size_t k = 0; k < neq; ++k) rhs[m + k] = -req[k];
      std::vector<double> sol = lu->solve(std::move(rhs));
      d.y.assign(sol.begin(), sol.begin() + m);
      d.nu.assign(sol.begin() + m, sol.end());
      d.t.resize(nin);
      d.eta.resize(nin);
      std::vector<double> cdy = cin.mul(d.y);
      for (std::size_t i = 0; i < nin; ++i) {
        d.t[i] = -rin[i] - cdy[i];
        d.eta[i] = mu / slack_floor(i) - it.eta[i] - dg[i] * d.t[i];
      }
      d.zlo.resize(m);
      d.zhi.resize(m);
      for (std::size_t j = 0; j < m; ++j) {
        d.zlo[j] = mu / it.y[j] - it.zlo[j] - it.zlo[j] / it.y[j] * d.y[j];
        d.zhi[j] =
            mu / (w[j] - it.y[j]) - it.zhi[j] + it.zhi[j] / (w[j] - it.y[j]) * d.y[j];
      }
    };

    auto step_lengths = [&](const Iterate& d, double& ap, double& ad) {
      ap = 1.0;
      ad = 1.0;
      for (std::size_t j = 0; j < m; ++j) {
        if (d.y[j] < 0.0) ap = std::min(ap, -tau * it.y[j] / d.y[j]);
        if (d.y[j] > 0.0) ap = std::min(ap, tau * (w[j] - it.y[j]) / d.y[j]);
        if (d.zlo[j] < 0.0) ad = std::min(ad, -tau * it.zlo[j] / d.zlo[j]);
        if (d.zhi[j] < 0.0) ad = std::min(ad, -tau * it.zhi[j] / d.zhi[j]);
      }
      for (std::size_t i = 0; i < nin; ++i) {
        if (d.t[i] < 0.0) ap = std::min(ap, -tau * it.t[i] / d.t[i]);
        if (d.eta[i] < 0.0) ad = std::min(ad, -tau * it.eta[i] / d.eta[i]);
      }
    };

    Iterate aff;
    solve_dir(0.0, aff);
    double ap, ad;
    step_lengths(aff, ap, ad);
    double gap_aff = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      gap_aff += (it.zlo[j] + ad * aff.zlo[j]) * (it.y[j] + ap * aff.y[j]);
      gap_aff +=
          (it.zhi[j] + ad * aff.zhi[j]) * (w[j] - it.y[j] - ap * aff.y[j]);
    }
    for (std::size_t i = 0; i < nin; ++i)
      gap_aff += (it.eta[i] + ad * aff.eta[i]) * (it.t[i] + ap * aff.t[i]);
    gap_aff /= static_cast<double>(denom);
    double sigma = std::clamp(std::pow(std::max(gap_aff, 0.0) / gap, 3.0),
                              1e-4, 0.8);

    Iterate dir;
    solve_dir(sigma * gap, dir);
    step_lengths(dir, ap, ad);
    if (std::max(ap, ad) < 1e-8) {
      if (++stalls >= 3) break;
    } else {
      stalls = 0;
    }
    for (std::size_t j = 0; j < m; ++j) {
      it.y[j] += ap * dir.y[j];
      it.zlo[j] += ad * dir.zlo[j];
      it.zhi[j] += ad * dir.zhi[j];
    }
    for (std::size_t i = 0; i < nin; ++i) {
      it.t[i] += ap * dir.t[i];
      it.eta[i] += ad * dir.eta[i];
    }
    for (std::size_t k = 0; k < neq; ++k) it.nu[k] += ad * dir.nu[k];
  }

  if (!converged) it = best;

  auto extract = [&](const Iterate& cur) {
    DispatchResult res;
    res.supply.assign(ng, 0.0);
    for (std::size_t n = 0; n < ng; ++n) res.supply[n] = poly.lo[n];
    for (std::size_t j = 0; j < m; ++j) res.supply[segs[j].gen] += cur.y[j];
    res.lambda_lo.assign(poly.num_rows(), 0.0);
    res.lambda_hi.assign(poly.num_rows(), 0.0);
    for (std::size_t i = 0; i < ineq_rows.size(); ++i) {
      res.lambda_hi[ineq_rows[i]] = cur.eta[2 * i];
      res.lambda_lo[ineq_rows[i]] = cur.eta[2 * i + 1];
    }
    for (std::size_t k = 0; k < neq; ++k) {
      int tag = eq_tag[eq_keep[k]];
      if (tag < 0) {
        res.price = cur.nu[k];
      } else {
        // pinned row: free multiplier split by sign
        res.lambda_hi[tag] = std::max(-cur.nu[k], 0.0);
        res.lambda_lo[tag] = std::max(cur.nu[k], 0.0);
      }
    }
    double objv = 0.0;
    for (std::size_t n = 0; n < ng; ++n) objv += obj[n].value(res.supply[n]);
    res.objective = objv;
    res.row_flows = poly.row_flows(res.supply);
    res.kkt = kkt_residual(poly, obj, res.supply, res.price, res.lambda_lo,
                           res.lambda_hi);
    res.iterations = iters;
    return res;
  };

  DispatchResult out = extract(it);

  // The central path stalls at degenerate corners: optima seated on a
  // marginal-cost kink, or cuts where several lines saturate at once.  Read
  // the active set off the final iterate, solve the reduced stationarity +
  // activity equations by Newton, and keep the polished point only when the
  // measured residual actually improves.
  auto try_polish = [&](double band) {
    // a coordinate counts as bound when it is within `band` of the bound or
    // when its multiplier decisively dominates the remaining distance (the
    // usual complementarity reading of a stalled central path)
    auto pinned = [&](double dist, double dual, double span) {
      return dist <= band * span ||
             dual * span > 10.0 * dist * (1.0 + dscale);
    };
    std::vector<std::size_t> free_idx;
    std::vector<double> yfix(m);
    for (std::size_t j = 0; j < m; ++j) {
      if (pinned(it.y[j], it.zlo[j], w[j])) {
        yfix[j] = 0.0;
      } else if (pinned(w[j] - it.y[j], it.zhi[j], w[j])) {
        yfix[j] = w[j];
      } else {
        yfix[j] = it.y[j];
        free_idx.push_back(j);
      }
    }
    const std::size_t nf = free_idx.size();
    if (nf == 0) return;  // fully bound-determined; nothing to refine

    std::vector<double> cy0 = cin.mul(it.y);
    std::vector<char> act(nin, 0);
    for (std::size_t q = 0; q < nin / 2; ++q) {
      // at most one side of a line can bind (pinned rows are equalities)
      double shi = u[2 * q] - cy0[2 * q];
      double slo = u[2 * q + 1] - cy0[2 * q + 1];
      std::size_t side = shi <= slo ? 2 * q : 2 * q + 1;
      if (pinned(std::min(shi, slo), it.eta[side], 1.0 + std::abs(u[side])))
        act[side] = 1;
    }

    struct PRow {
      const double* coef;  // over all segment variables
      double rhs;
      double dir;  // stationarity sign of the multiplier
      int eq_k, in_i;
    };
    for (int round = 0; round < 3; ++round) {
      std::vector<PRow> rows;
      for (std::size_t k = 0; k < neq; ++k)
        rows.push_back({ceq.row(k), deq[k], -1.0, static_cast<int>(k), -1});
      for (std::size_t i = 0; i < nin; ++i)
        if (act[i])
          rows.push_back({cin.row(i), u[i], 1.0, -1, static_cast<int>(i)});

      // rank filter on the free coordinates; a dependent row carries no
      // multiplier and the residual check below vouches for its consistency
      std::vector<std::size_t> keep;
      std::vector<std::vector<double>> fbasis;
      for (std::size_t rix = 0; rix < rows.size(); ++rix) {
        std::vector<double> v(nf);
        for (std::size_t a = 0; a < nf; ++a) v[a] = rows[rix].coef[free_idx[a]];
        double orig = std::sqrt(kern::dot(v.data(), v.data(), nf));
        for (const auto& bvec : fbasis) {
          double c = kern::dot(v.data(), bvec.data(), nf);
          kern::axpy(-c, bvec.data(), v.data(), nf);
        }
        double rem = std::sqrt(kern::dot(v.data(), v.data(), nf));
        if (rem > 1e-9 * std::max(1.0, orig)) {
          kern::scal(1.0 / rem, v.data(), nf);
          fbasis.push_back(std::move(v));
          keep.push_back(rix);
        }
      }

      const std::size_t nk = keep.size();
      const std::size_t nsys = nf + nk;
      std::vector<double> x(nsys, 0.0);
      for (std::size_t a = 0; a < nf; ++a) x[a] = it.y[free_idx[a]];
      for (std::size_t r = 0; r < nk; ++r) {
        const PRow& pr = rows[keep[r]];
        x[nf + r] = pr.eq_k >= 0 ? it.nu[pr.eq_k] : it.eta[pr.in_i];
      }

      std::vector<double> ycur(m);
      bool solved = false;
      for (int nit = 0; nit < 20 && !solved; ++nit) {
        for (std::size_t j = 0; j < m; ++j) ycur[j] = yfix[j];
        for (std::size_t a = 0; a < nf; ++a) ycur[free_idx[a]] = x[a];
        std::vector<double> rvec(nsys, 0.0);
        for (std::size_t a = 0; a < nf; ++a) {
          std::size_t j = free_idx[a];
          double s = seg_marginal(segs[j], x[a]);
          for (std::size_t r = 0; r < nk; ++r)
            s += rows[keep[r]].dir * x[nf + r] * rows[keep[r]].coef[j];
          rvec[a] = s;
        }
        for (std::size_t r = 0; r < nk; ++r)
          rvec[nf + r] =
              kern::dot(rows[keep[r]].coef, ycur.data(), m) - rows[keep[r]].rhs;
        double rinf = 0.0;
        for (double v : rvec) rinf = std::max(rinf, std::abs(v));
        if (rinf <= 1e-13 * (dscale + pscale)) {
          solved = true;
          break;
        }
        Matrix jac(nsys, nsys);
        for (std::size_t a = 0; a < nf; ++a) {
          std::size_t j = free_idx[a];
          jac(a, a) = seg_curvature(segs[j], x[a]);
          for (std::size_t r = 0; r < nk; ++r) {
            jac(a, nf + r) = rows[keep[r]].dir * rows[keep[r]].coef[j];
            jac(nf + r, a) = rows[keep[r]].coef[j];
          }
        }
        std::vector<double> step;
        try {
          for (double& v : rvec) v = -v;
          step = Lu::factor(std::move(jac)).solve(std::move(rvec));
        } catch (const solver_error&) {
          return;  // optimal face is ambiguous; keep the interior answer
        }
        for (std::size_t i2 = 0; i2 < nsys; ++i2) x[i2] += step[i2];
      }
      if (!solved) return;

      // a negative multiplier says the row should not bind: release and redo
      bool redo = false;
      for (std::size_t r = 0; r < nk; ++r) {
        const PRow& pr = rows[keep[r]];
        if (pr.in_i >= 0 && x[nf + r] < -1e-9 * (1.0 + dscale)) {
          act[pr.in_i] = 0;
          redo = true;
        }
      }
      if (redo) continue;

      for (std::size_t a = 0; a < nf; ++a) {
        std::size_t j = free_idx[a];
        double slop = 1e-7 * (1.0 + w[j]);
        if (x[a] < -slop || x[a] > w[j] + slop) return;  // wrong active set
        // roundoff can land a hair past a bound; a kink solution one ulp on
        // the wrong side reads the wrong piece, so project back onto the box
        ycur[j] = std::clamp(ycur[j], 0.0, w[j]);
      }

      Iterate cand;
      cand.y = ycur;
      cand.eta.assign(nin, 0.0);
      cand.nu.assign(neq, 0.0);
      for (std::size_t r = 0; r < nk; ++r) {
        const PRow& pr = rows[keep[r]];
        if (pr.in_i >= 0)
          cand.eta[pr.in_i] = std::max(x[nf + r], 0.0);
        else
          cand.nu[pr.eq_k] = x[nf + r];
      }
      DispatchResult refined = extract(cand);
      if (refined.kkt.max_residual() < out.kkt.max_residual()) out = refined;
      return;
    }
  };

  for (double band : {1e-4, 1e-6, 1e-9}) {
    if (out.kkt.max_residual() <= 1e-14 * (dscale + pscale)) break;
    try_polish(band);
  }

  double final_res =
      std::max({out.kkt.stationarity / (1.0 + dscale),
                out.kkt.balance / (1.0 + pscale),
                out.kkt.feasibility / (1.0 + pscale),
                out.kkt.complementarity / ((1.0 + dscale) * (1.0 + pscale))});
  if (!converged && final_res > std::max(1e-8, 100.0 * opts.tol))
    throw solver_error(
        "dispatch: solver did not reach the requested accuracy (residual " +
        std::to_string(final_res) + ")");
  return out;
}

DispatchResult economic_dispatch(const Market& m, const SolveOptions& opts) {
  ShiftFactors sf = build_shift_factors(m.network());
  return solve_separable_convex(dispatch_polytope(m, sf), true_objectives(m),
                                opts);
}

DispatchResult equilibrium_dispatch(const Market& m, const SolveOptions& opts) {
  ShiftFactors sf = build_shift_factors(m.network());
  return solve_separable_convex(dispatch_polytope(m, sf),
                                modified_objectives(m), opts);
}

}  // namespace sfe
