#include "sfe/tightness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <stdexcept>
#include <string>

#include "sfe/errors.hpp"
#include "sfe/poa.hpp"

namespace sfe {

double TightnessParams::alpha() const {
  double k = (static_cast<double>(n) - 2.0) * demand;
  double num = 1.0 + t / k;
  double den = 1.0 + (demand - t) / ((static_cast<double>(n) - 1.0) * k);
  return num / den;
}

void validate_params(const TightnessParams& p) {
  if (p.n < 4)
    throw validation_error("tightness construction needs at least four nodes");
  if (!(p.demand > 0.0))
    throw validation_error("tightness construction needs positive demand");
  double per_node = p.demand / static_cast<double>(p.n);
  if (!(p.t > per_node))
    throw validation_error("kink must exceed the per-node load");
  if (!(p.t < p.d_hat1()))
    throw validation_error("kink must lie below the cheap generator's share");
  if (!(p.d_hat1() < p.demand))
    throw validation_error(
        "the cheap generator's share must lie below total demand");
  if (!(p.slope > 0.0 && p.slope < 1.0))
    throw validation_error("first-piece slope must lie in (0, 1)");
}

std::vector<double> radial_flow_limits(const Network& net,
                                       const RootedTree& rt,
                                       double delta_cap) {
  std::vector<double> f(net.num_lines(), 0.0);
  double per = delta_cap / (static_cast<double>(net.num_buses()) - 1.0);
  for (std::size_t v = 0; v < net.num_buses(); ++v) {
    if (v == rt.root) continue;
    f[static_cast<std::size_t>(rt.parent_line[v])] =
        static_cast<double>(rt.subtree_size[v]) * per;
  }
  return f;
}

double cycle_adjustment(std::vector<double>& flows,
                        const std::vector<double>& b) {
  if (flows.size() != b.size())
    throw std::invalid_argument("cycle adjustment: size mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < flows.size(); ++i) {
    num += flows[i] / b[i];
    den += 1.0 / b[i];
  }
  double omega = -num / den;
  for (double& p : flows) p += omega;
  return omega;
}

std::vector<double> admittance_balancing(const std::vector<double>& flows) {
  double pos = 0.0, neg = 0.0;
  for (double p : flows) {
    if (p > 0.0) pos += p;
    if (p < 0.0) neg += p;
  }
  if (!(pos > 0.0) || !(neg < 0.0))
    throw validation_error(
        "cycle flows are all one-signed; admittances cannot balance the loop");
  double scale = -neg / pos;  // common admittance for the negative edges
  std::vector<double> b(flows.size(), 1.0);
  for (std::size_t i = 0; i < flows.size(); ++i)
    if (flows[i] < 0.0) b[i] = scale;
  return b;
}

double analytical_poa(const TightnessParams& p) {
  double a = p.alpha();
  double num = p.slope * p.t + a * (p.demand - p.t);
  double den =
      p.d_hat1() - p.t + p.slope * p.t + a * (p.demand - p.d_hat1());
  return num / den;
}

double analytic_bound(const TightnessParams& p) {
  return 1.0 + p.d_hat1() / ((static_cast<double>(p.n) - 2.0) * p.demand);
}

namespace {

// lowest common ancestor by depth walking
std::size_t lca(const RootedTree& rt, std::size_t a, std::size_t b) {
  while (rt.depth[a] > rt.depth[b]) a = rt.parent[a];
  while (rt.depth[b] > rt.depth[a]) b = rt.parent[b];
  while (a != b) {
    a = rt.parent[a];
    b = rt.parent[b];
  }
  return a;
}

}  // namespace

TightnessInstance build_instance(const Network& net,
                                 const TightnessParams& params) {
  TightnessParams p = params;
  p.n = net.num_buses();
  validate_params(p);
  const std::size_t n = p.n;
  const double demand = p.demand;

  CycleDecomposition dec0 = cycle_decomposition(net);
  if (!dec0.weakly_cyclic)
    throw unsupported_error(
        "tightness construction requires a weakly cyclic network");

  // relabel: center becomes bus 1, the rest in BFS order over the tree
  SpanningTree st0 = spanning_tree(net);
  BusId center = tree_center(net, st0);
  std::vector<std::vector<std::size_t>> tree_adj(n);
  for (std::size_t l : st0.lines) {
    const Line& ln = net.lines()[l];
    tree_adj[net.bus_index(ln.from)].push_back(net.bus_index(ln.to));
    tree_adj[net.bus_index(ln.to)].push_back(net.bus_index(ln.from));
  }
  for (auto& v : tree_adj)
    std::sort(v.begin(), v.end(), [&](std::size_t a, std::size_t b) {
      return net.buses()[a] < net.buses()[b];
    });
  std::vector<BusId> new_id(n, 0);
  std::vector<BusId> original_bus(n, 0);
  {
    std::queue<std::size_t> q;
    std::vector<char> seen(n, 0);
    std::size_t ci = net.bus_index(center);
    q.push(ci);
    seen[ci] = 1;
    BusId next = 1;
    while (!q.empty()) {
      std::size_t v = q.front();
      q.pop();
      new_id[v] = next;
      original_bus[static_cast<std::size_t>(next - 1)] = net.buses()[v];
      ++next;
      for (std::size_t w : tree_adj[v])
        if (!seen[w]) {
          seen[w] = 1;
          q.push(w);
        }
    }
  }

  std::vector<BusId> buses(n);
  for (std::size_t i = 0; i < n; ++i) buses[i] = static_cast<BusId>(i + 1);
  std::vector<Line> lines;
  lines.reserve(net.num_lines());
  for (const Line& ln : net.lines()) {
    Line l;
    l.from = new_id[net.bus_index(ln.from)];
    l.to = new_id[net.bus_index(ln.to)];
    lines.push_back(l);
  }
  Network scratch(buses, lines);

  SpanningTree st = spanning_tree(scratch);
  RootedTree rt = root_tree(scratch, st, scratch.bus_index(1));

  // saturating flows: radial magnitudes oriented away from the center
  std::vector<double> limit = radial_flow_limits(scratch, rt, p.delta_cap);
  std::vector<double> flow(scratch.num_lines(), 0.0);
  std::vector<double> adm(scratch.num_lines(), 1.0);
  for (std::size_t v = 0; v < n; ++v) {
    if (v == rt.root) continue;
    std::size_t l = static_cast<std::size_t>(rt.parent_line[v]);
    const Line& ln = scratch.lines()[l];
    bool toward_child = scratch.bus_index(ln.to) == v;
    flow[l] = toward_child ? limit[l] : -limit[l];
  }

  std::vector<char> in_tree(scratch.num_lines(), 0);
  for (std::size_t l : st.lines) in_tree[l] = 1;
  CycleDecomposition dec = cycle_decomposition(scratch);
  for (const Cycle& cyc : dec.cycles) {
    // orientation signs and the chord
    std::size_t k = cyc.lines.size();
    std::vector<double> pc(k), bc(k);
    std::vector<double> sign(k);
    std::size_t chord = scratch.num_lines();
    for (std::size_t i = 0; i < k; ++i) {
      std::size_t l = cyc.lines[i];
      const Line& ln = scratch.lines()[l];
      sign[i] =
          scratch.bus_index(ln.from) == cyc.nodes[i] ? 1.0 : -1.0;
      pc[i] = sign[i] * flow[l];
      bc[i] = adm[l];
      if (!in_tree[l]) chord = l;
    }
    const Line& ch = scratch.lines()[chord];
    std::size_t u = scratch.bus_index(ch.from);
    std::size_t v = scratch.bus_index(ch.to);
    bool across = u != rt.root && v != rt.root && lca(rt, u, v) == rt.root;
    if (across) {
      // two branches meet: balance admittances, chord flow stays zero
      std::vector<double> nb = admittance_balancing(pc);
      for (std::size_t i = 0; i < k; ++i) adm[cyc.lines[i]] = nb[i];
    } else {
      cycle_adjustment(pc, bc);
      for (std::size_t i = 0; i < k; ++i) flow[cyc.lines[i]] = sign[i] * pc[i];
    }
  }

  // snap adjustment roundoff so genuine zero flows give hard zero limits
  double fmax = 0.0;
  for (double f : flow) fmax = std::max(fmax, std::abs(f));
  for (double& f : flow)
    if (std::abs(f) < 1e-12 * (1.0 + fmax)) f = 0.0;

  for (std::size_t l = 0; l < lines.size(); ++l) {
    lines[l].b = adm[l];
    lines[l].f = std::abs(flow[l]);
  }

  std::map<BusId, double> loads;
  for (BusId b : buses) loads[b] = demand / static_cast<double>(n);
  std::vector<Generator> gens;
  double a = p.alpha();
  for (BusId b : buses) {
    Generator g;
    g.bus = b;
    g.smin = 0.0;
    g.smax = demand;
    g.cost = b == 1 ? CostFunction::piecewise_linear({p.t}, {p.slope, 1.0})
                    : CostFunction::linear(a);
    gens.push_back(g);
  }

  TightnessInstance inst{Market(Network(buses, lines), loads, std::move(gens)),
                         p,
                         std::move(original_bus),
                         {},
                         {},
                         analytical_poa(p),
                         analytic_bound(p)};
  double rest_opt = (demand - p.d_hat1()) / (static_cast<double>(n) - 1.0);
  double rest_eq = (demand - p.t) / (static_cast<double>(n) - 1.0);
  inst.supply_optimal.assign(n, rest_opt);
  inst.supply_optimal[0] = p.d_hat1();
  inst.supply_equilibrium.assign(n, rest_eq);
  inst.supply_equilibrium[0] = p.t;

  ValidationReport vr = validate_market(inst.market);
  if (!vr.ok())
    throw solver_error("tightness construction produced an invalid market");
  return inst;
}

SweepResult tightness_gap(const Network& net, double epsilon) {
  if (!(epsilon > 0.0))
    throw std::invalid_argument("sweep tolerance must be positive");
  const std::size_t n = net.num_buses();
  const double demand = static_cast<double>(n);  // unit load per node

  SweepResult out;
  double smallest = std::numeric_limits<double>::infinity();
  int step = 0;
  for (int k = 1; k <= 26; ++k) {
    double eta = std::ldexp(1.0, -k);
    TightnessParams p;
    p.n = n;
    p.demand = demand;
    p.delta_cap = demand * (1.0 - eta * eta) - demand / static_cast<double>(n);
    p.t = demand * (1.0 - eta * eta) - eta * demand;
    p.slope = eta * eta;
    if (!(p.t > demand / static_cast<double>(n))) continue;  // eta too coarse
    if (!(p.d_hat1() < demand)) break;  // eta^2 below double resolution
    validate_params(p);

    TightnessInstance inst = build_instance(net, p);
    PoaReport rep = price_of_anarchy(inst.market);

    SweepRow row;
    row.step = step++;
    row.t = p.t;
    row.d_hat1 = p.d_hat1();
    row.slope = p.slope;
    row.alpha = p.alpha();
    row.poa_analytic = inst.poa_analytic;
    row.poa_numeric = rep.poa;
    row.bound = inst.bound;
    row.gap = inst.bound - inst.poa_analytic;
    out.rows.push_back(row);
    smallest = std::min(smallest, row.gap);
    if (row.gap < epsilon) {
      out.gap = row.gap;
      return out;
    }
  }
  throw solver_error(
      "tightness sweep could not certify the requested gap; smallest achieved "
      "gap = " +
      std::to_string(smallest));
}

}  // namespace sfe
