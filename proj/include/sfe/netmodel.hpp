#pragma once
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "sfe/costs.hpp"

namespace sfe {

using BusId = int;

inline constexpr double kUnlimited = std::numeric_limits<double>::infinity();

struct Line {
  BusId from = 0, to = 0;
  double b = 1.0;          // admittance weight, > 0
  double f = kUnlimited;   // flow limit; +inf = unlimited
  bool limited() const { return std::isfinite(f); }
};

struct Generator {
  BusId bus = 0;
  double smin = 0.0, smax = 0.0;
  CostFunction cost = CostFunction::linear(1.0);
};

// Simple connected undirected graph with admittances and flow limits.
// Construction validates structure: known endpoints, no self-loops, no
// parallel lines, positive admittances, connectivity.
class Network {
 public:
  Network(std::vector<BusId> buses, std::vector<Line> lines);

  const std::vector<BusId>& buses() const { return buses_; }
  const std::vector<Line>& lines() const { return lines_; }
  std::size_t num_buses() const { return buses_.size(); }
  std::size_t num_lines() const { return lines_.size(); }

  bool has_bus(BusId id) const;
  std::size_t bus_index(BusId id) const;  // throws validation_error if unknown
  // incident line indices per bus index
  const std::vector<std::vector<std::size_t>>& incident() const { return incident_; }

 private:
  std::vector<BusId> buses_;  // sorted ascending
  std::vector<Line> lines_;
  std::vector<std::vector<std::size_t>> incident_;
};

// Network plus loads and generators.  At most one generator per bus; the
// generator list is kept sorted by bus id and that order is the canonical
// generator order everywhere (shift-factor columns, supply vectors, bids).
class Market {
 public:
  Market(Network net, const std::map<BusId, double>& loads,
         std::vector<Generator> gens);

  const Network& network() const { return net_; }
  const std::vector<double>& loads() const { return loads_; }  // per bus index
  double load(BusId id) const { return loads_[net_.bus_index(id)]; }
  const std::vector<Generator>& generators() const { return gens_; }
  std::size_t num_generators() const { return gens_.size(); }
  int generator_index(BusId bus) const;  // -1 if none
  double total_demand() const;           // recomputed on call
  // finite stand-in for unlimited line limits, larger than any achievable flow
  double flow_sentinel() const;

 private:
  Network net_;
  std::vector<double> loads_;
  std::vector<Generator> gens_;
};

struct ValidationCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  double feasibility_slack = 0.0;  // optimal value of the slack program
  bool ok() const;
};

// Checks the market against the standing model assumptions: shapes of the
// cost functions, more than two generators, demand coverable with any single
// generator withheld, and existence of a strictly feasible dispatch (max-min
// slack over box and flow constraints solved as a linear program; lines with
// f = 0 count as equalities and carry no slack requirement).
ValidationReport validate_market(const Market& m, double tol = 1e-9);

double total_demand(const Market& m);

}  // namespace sfe
