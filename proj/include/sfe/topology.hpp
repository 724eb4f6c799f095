#pragma once
#include <cstddef>
#include <vector>

#include "sfe/netmodel.hpp"

namespace sfe {

// A simple cycle, stored as bus indices in traversal order plus the line
// index joining nodes[i] to nodes[i+1] (wrapping at the end).
struct Cycle {
  std::vector<std::size_t> nodes;
  std::vector<std::size_t> lines;
  bool contains_line(std::size_t l) const;
  bool contains_node(std::size_t n) const;
};

// Biconnected-component view of the network: every component is either a
// single edge (bridge) or, when the network is weakly cyclic, a simple
// cycle.  `weakly_cyclic` is false iff some component is neither.
struct CycleDecomposition {
  std::vector<Cycle> cycles;
  std::vector<std::size_t> bridges;   // line indices
  std::vector<int> line_cycle;        // per line: cycle index or -1
  bool weakly_cyclic = false;
};

CycleDecomposition cycle_decomposition(const Network& net);

// Fundamental cycles of the deterministic spanning tree (one per chord, in
// chord index order).  Used for partitions on general networks.
std::vector<Cycle> fundamental_cycles(const Network& net);

// Partition of a node's neighbors into singletons and duples; each duple is
// backed by a cycle through the node and both members.
struct PartitionPart {
  std::vector<BusId> members;  // size 1 or 2, sorted
  Cycle cycle;                 // meaningful when members.size() == 2
};

struct NeighborPartition {
  BusId node = 0;
  std::vector<PartitionPart> parts;
  bool valid = false;
};

// Builds the partition.  On weakly cyclic networks the simple cycles through
// the node give the duples exactly; otherwise duples are paired greedily
// over the fundamental cycles and the result is verified, falling back to
// valid = false when the greedy assignment breaks a condition.
NeighborPartition neighbor_partition(const Network& net, BusId node,
                                     const CycleDecomposition& dec);

// Checks the partition conditions against a universe of known cycles through
// the node: full neighbor coverage, each duple consecutive to the node on
// its own cycle, assigned cycles pairwise edge-disjoint, and no two
// singletons sharing a known cycle with the node.
bool partition_valid(const Network& net, const std::vector<Cycle>& universe,
                     const NeighborPartition& p);

struct EffectiveLimit {
  BusId neighbor = 0;
  std::size_t line = 0;
  double f = 0.0;      // raw limit (may be +inf)
  double f_hat = 0.0;  // effective limit, always finite
};

// Effective flow limit toward each neighbor of p.node: the raw limit capped,
// for duple members, by what the rest of the assigned cycle can carry
// (admittance-weighted).  Unlimited lines enter the arithmetic as `sentinel`.
// Invalid partitions fall back to f_hat = f.
std::vector<EffectiveLimit> effective_flow_limits(const Network& net,
                                                  const NeighborPartition& p,
                                                  double sentinel);

struct SpanningTree {
  std::vector<std::size_t> lines;   // tree line indices
  std::vector<std::size_t> chords;  // remaining line indices
};

// Deterministic: scans lines in index order, keeping every line that does
// not close a cycle.
SpanningTree spanning_tree(const Network& net);

struct RootedTree {
  std::size_t root = 0;                   // bus index
  std::vector<std::size_t> parent;        // parent bus index (root maps to itself)
  std::vector<int> parent_line;           // line to parent, -1 at root
  std::vector<std::size_t> order;         // BFS order from root
  std::vector<int> depth;
  std::vector<std::size_t> subtree_size;  // nodes in subtree, including self
};

RootedTree root_tree(const Network& net, const SpanningTree& t,
                     std::size_t root_idx);

// Center of the spanning tree (minimum eccentricity within the tree); ties
// broken toward the lower bus id.
BusId tree_center(const Network& net, const SpanningTree& t);

}  // namespace sfe
