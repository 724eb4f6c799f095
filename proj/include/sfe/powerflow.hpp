#pragma once
#include <optional>
#include <vector>

#include "sfe/linalg.hpp"
#include "sfe/netmodel.hpp"

namespace sfe {

// Linear(ized) flow sensitivities: row per line, column per bus, giving the
// flow induced on each line by one unit of net injection at a bus (balanced
// against the slack).  Flows are oriented from -> to.
struct ShiftFactors {
  linalg::Matrix a_node;  // |E| x |N|
  BusId slack = 0;
  std::size_t slack_index = 0;
};

// Factors the admittance-weighted reduced Laplacian (dense LU, partial
// pivoting).  Default slack: lowest-numbered bus.
ShiftFactors build_shift_factors(const Network& net,
                                 std::optional<BusId> slack = std::nullopt);

// Flows for a balanced nodal injection vector (per bus index).  Throws if
// |sum(injection)| > balance_tol.
std::vector<double> line_flows(const Network& net, const ShiftFactors& sf,
                               const std::vector<double>& injection,
                               double balance_tol = 1e-9);

// Flows for a supply profile (canonical generator order) netted against the
// market loads.
std::vector<double> market_flows(const Market& m, const ShiftFactors& sf,
                                 const std::vector<double>& supply,
                                 double balance_tol = 1e-9);

// Columns of a_node restricted to generator buses (|E| x |N_g|).
linalg::Matrix generator_shift_matrix(const Market& m, const ShiftFactors& sf);

// Constant per-line flow offset contributed by the loads alone, i.e. the
// flows of the injection vector (-d).  market_flows == A_g s + this.
std::vector<double> load_flow_term(const Market& m, const ShiftFactors& sf);

// Independent flow computation that never touches the shift factors:
// conservation pins the spanning-tree flows, and each chord's cycle is
// settled by the loop law (sum of flow/b around the cycle = 0).  Only valid
// when no edge sits on more than one cycle; throws unsupported_error
// otherwise.  Used as a cross-check oracle against line_flows.
std::vector<double> tree_cycle_flows(const Network& net,
                                     const std::vector<double>& injection,
                                     double balance_tol = 1e-9);

}  // namespace sfe
