#include "sfe/topology.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <queue>
#include <set>

#include "sfe/errors.hpp"

namespace sfe {

namespace {

std::size_t other_end(const Network& net, std::size_t line, std::size_t at) {
  const Line& l = net.lines()[line];
  std::size_t i = net.bus_index(l.from);
  return i == at ? net.bus_index(l.to) : i;
}

// Orders a component known to be a simple cycle: start at the smallest bus
// index, walk toward the smaller-id neighbor first.
Cycle trace_cycle(const Network& net, const std::vector<std::size_t>& edges) {
  std::map<std::size_t, std::vector<std::size_t>> adj;  // node -> incident comp edges
  for (std::size_t e : edges) {
    adj[net.bus_index(net.lines()[e].from)].push_back(e);
    adj[net.bus_index(net.lines()[e].to)].push_back(e);
  }
  std::size_t start = adj.begin()->first;
  auto pick_next = [&](std::size_t at, std::size_t avoid_line) {
    std::size_t best_line = SIZE_MAX, best_node = SIZE_MAX;
    for (std::size_t e : adj[at]) {
      if (e == avoid_line) continue;
      std::size_t v = other_end(net, e, at);
      if (best_line == SIZE_MAX || v < best_node) {
        best_line = e;
        best_node = v;
      }
    }
    return std::make_pair(best_line, best_node);
  };

  Cycle c;
  std::size_t at = start, last_line = SIZE_MAX;
  do {
    c.nodes.push_back(at);
    auto [le, nx] = pick_next(at, last_line);
    c.lines.push_back(le);
    last_line = le;
    at = nx;
  } while (at != start);
  return c;
}

}  // namespace

bool Cycle::contains_line(std::size_t l) const {
  return std::find(lines.begin(), lines.end(), l) != lines.end();
}

bool Cycle::contains_node(std::size_t n) const {
  return std::find(nodes.begin(), nodes.end(), n) != nodes.end();
}

CycleDecomposition cycle_decomposition(const Network& net) {
  const std::size_t n = net.num_buses();
  const std::size_t m = net.num_lines();
  CycleDecomposition out;
  out.line_cycle.assign(m, -1);
  out.weakly_cyclic = true;

  // iterative biconnected components (edge stack + low links)
  std::vector<int> disc(n, -1), low(n, 0);
  std::vector<std::size_t> edge_stack;
  int timer = 0;

  struct Frame {
    std::size_t u;
    int parent_line;
    std::size_t next;  // position in incident list
  };

  std::vector<std::vector<std::size_t>> comps;

  for (std::size_t root = 0; root < n; ++root) {
    if (disc[root] != -1) continue;
    std::vector<Frame> st{{root, -1, 0}};
    disc[root] = low[root] = timer++;
    while (!st.empty()) {
      Frame& fr = st.back();
      const auto& inc = net.incident()[fr.u];
      if (fr.next < inc.size()) {
        std::size_t e = inc[fr.next++];
        if (static_cast<int>(e) == fr.parent_line) continue;
        std::size_t v = other_end(net, e, fr.u);
        if (disc[v] == -1) {
          edge_stack.push_back(e);
          disc[v] = low[v] = timer++;
          st.push_back({v, static_cast<int>(e), 0});
        } else if (disc[v] < disc[fr.u]) {
          edge_stack.push_back(e);
          low[fr.u] = std::min(low[fr.u], disc[v]);
        }
      } else {
        std::size_t u = fr.u;
        int pline = fr.parent_line;
        st.pop_back();
        if (st.empty()) break;
        Frame& par = st.back();
        low[par.u] = std::min(low[par.u], low[u]);
        if (low[u] >= disc[par.u]) {
          // pop one biconnected component ending at the parent edge
          std::vector<std::size_t> comp;
          while (!edge_stack.empty()) {
            std::size_t e = edge_stack.back();
            edge_stack.pop_back();
            comp.push_back(e);
            if (static_cast<int>(e) == pline) break;
          }
          comps.push_back(std::move(comp));
        }
      }
    }
  }

  for (auto& comp : comps) {
    if (comp.size() == 1) {
      out.bridges.push_back(comp[0]);
      continue;
    }
    std::set<std::size_t> nodes;
    for (std::size_t e : comp) {
      nodes.insert(net.bus_index(net.lines()[e].from));
      nodes.insert(net.bus_index(net.lines()[e].to));
    }
    if (nodes.size() == comp.size()) {
      Cycle c = trace_cycle(net, comp);
      for (std::size_t e : c.lines)
        out.line_cycle[e] = static_cast<int>(out.cycles.size());
      out.cycles.push_back(std::move(c));
    } else {
      out.weakly_cyclic = false;  // dense component, not a plain cycle
    }
  }
  return out;
}

std::vector<Cycle> fundamental_cycles(const Network& net) {
  SpanningTree t = spanning_tree(net);
  RootedTree rt = root_tree(net, t, 0);
  std::vector<Cycle> out;
  for (std::size_t chord : t.chords) {
    std::size_t u = net.bus_index(net.lines()[chord].from);
    std::size_t v = net.bus_index(net.lines()[chord].to);
    std::vector<std::size_t> up_u, up_v;  // node paths toward the LCA
    std::size_t a = u, b = v;
    while (rt.depth[a] > rt.depth[b]) {
      up_u.push_back(a);
      a = rt.parent[a];
    }
    while (rt.depth[b] > rt.depth[a]) {
      up_v.push_back(b);
      b = rt.parent[b];
    }
    while (a != b) {
      up_u.push_back(a);
      a = rt.parent[a];
      up_v.push_back(b);
      b = rt.parent[b];
    }
    Cycle c;
    // u ... lca ... v, then chord closes v->u
    for (std::size_t x : up_u) c.nodes.push_back(x);
    c.nodes.push_back(a);
    for (auto it = up_v.rbegin(); it != up_v.rend(); ++it)
      c.nodes.push_back(*it);
    for (std::size_t i = 0; i + 1 < c.nodes.size(); ++i) {
      std::size_t x = c.nodes[i + 1];
      // line between consecutive path nodes is the parent line of the deeper
      std::size_t deeper = rt.depth[c.nodes[i]] > rt.depth[x] ? c.nodes[i] : x;
      c.lines.push_back(static_cast<std::size_t>(rt.parent_line[deeper]));
    }
    c.lines.push_back(chord);
    out.push_back(std::move(c));
  }
  return out;
}

namespace {

// neighbors of `node` inside cycle c (exactly two when the node is on c)
std::vector<std::size_t> cycle_neighbors(const Network& net, const Cycle& c,
                                         std::size_t node) {
  std::vector<std::size_t> out;
  for (std::size_t e : c.lines) {
    const Line& l = net.lines()[e];
    if (net.bus_index(l.from) == node) out.push_back(net.bus_index(l.to));
    else if (net.bus_index(l.to) == node) out.push_back(net.bus_index(l.from));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

NeighborPartition neighbor_partition(const Network& net, BusId node,
                                     const CycleDecomposition& dec) {
  const std::size_t ni = net.bus_index(node);
  NeighborPartition p;
  p.node = node;

  std::vector<std::size_t> neighbors;
  for (std::size_t e : net.incident()[ni]) neighbors.push_back(other_end(net, e, ni));
  std::sort(neighbors.begin(), neighbors.end());

  const std::vector<Cycle>* universe = &dec.cycles;
  std::vector<Cycle> fUniverse;
  if (!dec.weakly_cyclic) {
    fUniverse = fundamental_cycles(net);
    universe = &fUniverse;
  }

  std::set<std::size_t> unassigned(neighbors.begin(), neighbors.end());
  for (const Cycle& c : *universe) {
    if (!c.contains_node(ni)) continue;
    auto nb = cycle_neighbors(net, c, ni);
    if (nb.size() != 2) continue;
    if (unassigned.count(nb[0]) && unassigned.count(nb[1]) && nb[0] != nb[1]) {
      PartitionPart part;
      part.members = {net.buses()[nb[0]], net.buses()[nb[1]]};
      part.cycle = c;
      p.parts.push_back(std::move(part));
      unassigned.erase(nb[0]);
      unassigned.erase(nb[1]);
    }
  }
  for (std::size_t m : unassigned) {
    PartitionPart part;
    part.members = {net.buses()[m]};
    p.parts.push_back(std::move(part));
  }
  std::sort(p.parts.begin(), p.parts.end(),
            [](const PartitionPart& a, const PartitionPart& b) {
              return a.members.front() < b.members.front();
            });
  p.valid = partition_valid(net, *universe, p);
  return p;
}

bool partition_valid(const Network& net, const std::vector<Cycle>& universe,
                     const NeighborPartition& p) {
  const std::size_t ni = net.bus_index(p.node);

  std::vector<std::size_t> neighbors;
  for (std::size_t e : net.incident()[ni]) neighbors.push_back(other_end(net, e, ni));
  std::sort(neighbors.begin(), neighbors.end());

  // coverage without repeats
  std::vector<std::size_t> covered;
  for (const auto& part : p.parts) {
    if (part.members.empty() || part.members.size() > 2) return false;
    for (BusId b : part.members) covered.push_back(net.bus_index(b));
  }
  std::sort(covered.begin(), covered.end());
  if (covered != neighbors) return false;

  // duples: consecutive to the node on their own cycle; cycles edge-disjoint
  std::set<std::size_t> used_lines;
  std::vector<std::size_t> singles;
  for (const auto& part : p.parts) {
    if (part.members.size() == 1) {
      singles.push_back(net.bus_index(part.members[0]));
      continue;
    }
    const Cycle& c = part.cycle;
    if (c.lines.empty() || !c.contains_node(ni)) return false;
    auto nb = cycle_neighbors(net, c, ni);
    std::vector<std::size_t> want = {net.bus_index(part.members[0]),
                                     net.bus_index(part.members[1])};
    std::sort(want.begin(), want.end());
    if (nb != want) return false;
    for (std::size_t e : c.lines)
      if (!used_lines.insert(e).second) return false;
  }

  // no two singletons on one known cycle through the node
  for (const Cycle& c : universe) {
    if (!c.contains_node(ni)) continue;
    auto nb = cycle_neighbors(net, c, ni);
    int hits = 0;
    for (std::size_t sgl : singles)
      if (std::find(nb.begin(), nb.end(), sgl) != nb.end()) ++hits;
    if (hits >= 2) return false;
  }
  return true;
}

std::vector<EffectiveLimit> effective_flow_limits(const Network& net,
                                                  const NeighborPartition& p,
                                                  double sentinel) {
  const std::size_t ni = net.bus_index(p.node);
  auto line_between = [&](std::size_t a, std::size_t b) {
    for (std::size_t e : net.incident()[a])
      if (other_end(net, e, a) == b) return e;
    throw validation_error("no line between the requested buses");
  };
  auto capped = [&](double f) { return std::isfinite(f) ? f : sentinel; };

  std::vector<EffectiveLimit> out;
  for (const auto& part : p.parts) {
    for (BusId member : part.members) {
      std::size_t mi = net.bus_index(member);
      std::size_t e = line_between(ni, mi);
      EffectiveLimit el;
      el.neighbor = member;
      el.line = e;
      el.f = net.lines()[e].f;
      if (part.members.size() == 1 || !p.valid) {
        el.f_hat = capped(el.f);
      } else {
        // what the rest of the assigned cycle can carry, admittance-weighted
        double through = 0.0;
        for (std::size_t ce : part.cycle.lines) {
          if (ce == e) continue;
          through += capped(net.lines()[ce].f) / net.lines()[ce].b;
        }
        el.f_hat = std::min(capped(el.f), through * net.lines()[e].b);
      }
      out.push_back(el);
    }
  }
  std::sort(out.begin(), out.end(),
            [](const EffectiveLimit& a, const EffectiveLimit& b) {
              return a.neighbor < b.neighbor;
            });
  return out;
}

SpanningTree spanning_tree(const Network& net) {
  const std::size_t n = net.num_buses();
  std::vector<std::size_t> uf(n);
  for (std::size_t i = 0; i < n; ++i) uf[i] = i;
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
    while (uf[x] != x) {
      uf[x] = uf[uf[x]];
      x = uf[x];
    }
    return x;
  };
  SpanningTree t;
  for (std::size_t e = 0; e < net.num_lines(); ++e) {
    std::size_t a = find(net.bus_index(net.lines()[e].from));
    std::size_t b = find(net.bus_index(net.lines()[e].to));
    if (a == b) {
      t.chords.push_back(e);
    } else {
      uf[a] = b;
      t.lines.push_back(e);
    }
  }
  return t;
}

RootedTree root_tree(const Network& net, const SpanningTree& t,
                     std::size_t root_idx) {
  const std::size_t n = net.num_buses();
  std::vector<std::vector<std::size_t>> adj(n);  // tree adjacency: line idx
  for (std::size_t e : t.lines) {
    adj[net.bus_index(net.lines()[e].from)].push_back(e);
    adj[net.bus_index(net.lines()[e].to)].push_back(e);
  }
  RootedTree rt;
  rt.root = root_idx;
  rt.parent.assign(n, SIZE_MAX);
  rt.parent_line.assign(n, -1);
  rt.depth.assign(n, 0);
  rt.subtree_size.assign(n, 1);
  rt.parent[root_idx] = root_idx;
  std::queue<std::size_t> q;
  q.push(root_idx);
  while (!q.empty()) {
    std::size_t u = q.front();
    q.pop();
    rt.order.push_back(u);
    for (std::size_t e : adj[u]) {
      std::size_t v = other_end(net, e, u);
      if (rt.parent[v] != SIZE_MAX) continue;
      rt.parent[v] = u;
      rt.parent_line[v] = static_cast<int>(e);
      rt.depth[v] = rt.depth[u] + 1;
      q.push(v);
    }
  }
  for (std::size_t i = rt.order.size(); i-- > 1;)
    rt.subtree_size[rt.parent[rt.order[i]]] += rt.subtree_size[rt.order[i]];
  return rt;
}

BusId tree_center(const Network& net, const SpanningTree& t) {
  const std::size_t n = net.num_buses();
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t e : t.lines) {
    std::size_t a = net.bus_index(net.lines()[e].from);
    std::size_t b = net.bus_index(net.lines()[e].to);
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<std::size_t> deg(n);
  std::vector<char> removed(n, 0);
  std::queue<std::size_t> leaves;
  std::size_t remaining = n;
  for (std::size_t i = 0; i < n; ++i) {
    deg[i] = adj[i].size();
    if (deg[i] <= 1) leaves.push(i);
  }
  while (remaining > 2) {
    std::size_t layer = leaves.size();
    if (layer == 0) break;
    for (std::size_t k = 0; k < layer; ++k) {
      std::size_t u = leaves.front();
      leaves.pop();
      removed[u] = 1;
      --remaining;
      for (std::size_t v : adj[u])
        if (!removed[v] && --deg[v] == 1) leaves.push(v);
    }
  }
  BusId best = 0;
  bool found = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (removed[i]) continue;
    if (!found || net.buses()[i] < best) {
      best = net.buses()[i];
      found = true;
    }
  }
  return best;
}

}  // namespace sfe
