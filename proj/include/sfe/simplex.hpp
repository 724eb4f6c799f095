#pragma once
#include <cstddef>
#include <vector>

// Dense two-phase simplex for the small linear programs that show up around
// the dispatch work: the strict-feasibility slack program and max-supply
// witnesses.  Sizes are tiny (rows ~ generators + limited lines), so a
// tableau method with Bland's rule is plenty.

namespace sfe::lp {

enum class Rel { le, ge, eq };

struct Row {
  std::vector<double> a;  // dense coefficients, length num_vars
  Rel rel = Rel::le;
  double rhs = 0.0;
};

struct Problem {
  std::size_t num_vars = 0;
  std::vector<double> lower, upper;  // finite bounds per variable
  std::vector<double> objective;     // maximized
  std::vector<Row> rows;
};

enum class Status { optimal, infeasible, unbounded };

struct Result {
  Status status = Status::infeasible;
  double value = 0.0;
  std::vector<double> x;
};

Result solve(const Problem& p);

}  // namespace sfe::lp
