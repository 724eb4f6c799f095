#include "sfe/powerflow.hpp"

#include <cmath>
#include <queue>

#include "sfe/errors.hpp"
#include "sfe/kernels.hpp"

namespace sfe {

ShiftFactors build_shift_factors(const Network& net,
                                 std::optional<BusId> slack) {
  const std::size_t n = net.num_buses();
  const std::size_t e = net.num_lines();
  const BusId slack_bus = slack.value_or(net.buses().front());
  const std::size_t s = net.bus_index(slack_bus);

  ShiftFactors out;
  out.slack = slack_bus;
  out.slack_index = s;
  out.a_node = linalg::Matrix(e, n);
  if (n == 1) return out;

  // reduced weighted Laplacian (slack row/column removed)
  auto red = [s](std::size_t i) { return i < s ? i : i - 1; };
  linalg::Matrix lap(n - 1, n - 1);
  for (const Line& l : net.lines()) {
    std::size_t i = net.bus_index(l.from), j = net.bus_index(l.to);
    if (i != s) lap(red(i), red(i)) += l.b;
    if (j != s) lap(red(j), red(j)) += l.b;
    if (i != s && j != s) {
      lap(red(i), red(j)) -= l.b;
      lap(red(j), red(i)) -= l.b;
    }
  }
  auto lu = linalg::Lu::factor(std::move(lap));
  linalg::Matrix inv = lu.inverse();  // (n-1) x (n-1)

  // flow on line (i,j) for injection at bus k: b * (theta_i - theta_k ... )
  for (std::size_t le = 0; le < e; ++le) {
    const Line& l = net.lines()[le];
    std::size_t i = net.bus_index(l.from), j = net.bus_index(l.to);
    for (std::size_t k = 0; k < n; ++k) {
      if (k == s) continue;  // slack column stays zero
      double ti = (i == s) ? 0.0 : inv(red(i), red(k));
      double tj = (j == s) ? 0.0 : inv(red(j), red(k));
      out.a_node(le, k) = l.b * (ti - tj);
    }
  }
  return out;
}

std::vector<double> line_flows(const Network& net, const ShiftFactors& sf,
                               const std::vector<double>& injection,
                               double balance_tol) {
  if (injection.size() != net.num_buses())
    throw validation_error("injection vector length mismatch");
  double sum = 0.0;
  for (double v : injection) sum += v;
  if (std::fabs(sum) > balance_tol)
    throw validation_error("injections do not balance (net " +
                           std::to_string(sum) + ")");
  return sf.a_node.mul(injection);
}

std::vector<double> market_flows(const Market& m, const ShiftFactors& sf,
                                 const std::vector<double>& supply,
                                 double balance_tol) {
  const auto& gens = m.generators();
  if (supply.size() != gens.size())
    throw validation_error("supply vector length mismatch");
  std::vector<double> inj(m.network().num_buses());
  for (std::size_t i = 0; i < inj.size(); ++i) inj[i] = -m.loads()[i];
  for (std::size_t g = 0; g < gens.size(); ++g)
    inj[m.network().bus_index(gens[g].bus)] += supply[g];
  return line_flows(m.network(), sf, inj, balance_tol);
}

linalg::Matrix generator_shift_matrix(const Market& m, const ShiftFactors& sf) {
  const auto& gens = m.generators();
  linalg::Matrix ag(m.network().num_lines(), gens.size());
  for (std::size_t g = 0; g < gens.size(); ++g) {
    std::size_t col = m.network().bus_index(gens[g].bus);
    for (std::size_t l = 0; l < ag.rows(); ++l)
      ag(l, g) = sf.a_node(l, col);
  }
  return ag;
}

std::vector<double> load_flow_term(const Market& m, const ShiftFactors& sf) {
  std::vector<double> neg_d(m.loads().size());
  for (std::size_t i = 0; i < neg_d.size(); ++i) neg_d[i] = -m.loads()[i];
  return sf.a_node.mul(neg_d);
}

std::vector<double> tree_cycle_flows(const Network& net,
                                     const std::vector<double>& injection,
                                     double balance_tol) {
  const std::size_t n = net.num_buses();
  if (injection.size() != n)
    throw validation_error("injection vector length mismatch");
  double sum = 0.0;
  for (double v : injection) sum += v;
  if (std::fabs(sum) > balance_tol)
    throw validation_error("injections do not balance (net " +
                           std::to_string(sum) + ")");

  // BFS spanning tree from the first bus
  const auto& lines = net.lines();
  std::vector<int> parent_line(n, -1);
  std::vector<std::size_t> parent(n, SIZE_MAX);
  std::vector<std::size_t> order;
  std::vector<char> seen(n, 0);
  std::queue<std::size_t> q;
  q.push(0);
  seen[0] = 1;
  while (!q.empty()) {
    std::size_t u = q.front();
    q.pop();
    order.push_back(u);
    for (std::size_t e : net.incident()[u]) {
      std::size_t v = net.bus_index(lines[e].from) == u
                          ? net.bus_index(lines[e].to)
                          : net.bus_index(lines[e].from);
      if (!seen[v]) {
        seen[v] = 1;
        parent[v] = u;
        parent_line[v] = static_cast<int>(e);
        q.push(v);
      }
    }
  }

  std::vector<char> in_tree(lines.size(), 0);
  for (std::size_t v = 0; v < n; ++v)
    if (parent_line[v] >= 0) in_tree[parent_line[v]] = 1;

  // tree flows: accumulate subtree injections leaf-to-root
  std::vector<double> flow(lines.size(), 0.0);
  std::vector<double> acc = injection;
  for (std::size_t idx = order.size(); idx-- > 1;) {
    std::size_t v = order[idx];
    std::size_t e = parent_line[v];
    // flow toward the parent, signed by stored orientation
    double toward_parent = acc[v];
    if (net.bus_index(lines[e].from) == v)
      flow[e] = toward_parent;
    else
      flow[e] = -toward_parent;
    acc[parent[v]] += acc[v];
  }

  // one unknown per chord: walk the tree path, apply the loop law
  std::vector<char> used(lines.size(), 0);
  std::vector<int> depth(n, 0);
  for (std::size_t idx = 1; idx < order.size(); ++idx)
    depth[order[idx]] = depth[parent[order[idx]]] + 1;

  for (std::size_t e = 0; e < lines.size(); ++e) {
    if (in_tree[e]) continue;
    std::size_t u = net.bus_index(lines[e].from);
    std::size_t v = net.bus_index(lines[e].to);
    // collect path edges with orientation sign along the cycle u -> ... -> v -> u
    std::vector<std::pair<std::size_t, double>> path;  // (line, sign in cycle dir)
    std::size_t a = u, b = v;
    std::vector<std::pair<std::size_t, double>> up_a, up_b;
    while (depth[a] > depth[b]) {
      std::size_t pe = parent_line[a];
      up_a.emplace_back(pe, net.bus_index(lines[pe].from) == a ? 1.0 : -1.0);
      a = parent[a];
    }
    while (depth[b] > depth[a]) {
      std::size_t pe = parent_line[b];
      up_b.emplace_back(pe, net.bus_index(lines[pe].to) == b ? 1.0 : -1.0);
      b = parent[b];
    }
    while (a != b) {
      std::size_t pe = parent_line[a];
      up_a.emplace_back(pe, net.bus_index(lines[pe].from) == a ? 1.0 : -1.0);
      a = parent[a];
      pe = parent_line[b];
      up_b.emplace_back(pe, net.bus_index(lines[pe].to) == b ? 1.0 : -1.0);
      b = parent[b];
    }
    // cycle direction: v -> ... -> u (tree path), then chord u -> v
    for (auto it = up_b.rbegin(); it != up_b.rend(); ++it)
      path.emplace_back(it->first, -it->second);
    for (auto& pr : up_a) path.emplace_back(pr.first, -pr.second);
    for (auto& [pe, sign] : path) {
      (void)sign;
      if (used[pe])
        throw unsupported_error(
            "tree_cycle_flows: an edge lies on two cycles; network is not "
            "weakly cyclic");
      used[pe] = 1;
    }
    // Loop law around chord(u->v) + tree path(v->u): the angle drops sum to
    // zero, and the unknown cycle flow x rides every edge of the cycle:
    //   x/b_chord + sum_path sign*(tree_flow + sign*x)/b = 0
    double resid = 0.0, coeff = 1.0 / lines[e].b;
    for (auto& [pe, sign] : path) {
      resid += sign * flow[pe] / lines[pe].b;
      coeff += 1.0 / lines[pe].b;
    }
    const double x = -resid / coeff;
    flow[e] = x;
    for (auto& [pe, sign] : path) flow[pe] += sign * x;
  }
  return flow;
}

}  // namespace sfe
