#include "sfe/simplex.hpp"

#include <cmath>
#include <limits>

#include "sfe/errors.hpp"

namespace sfe::lp {

namespace {

constexpr double kEnterTol = 1e-9;
constexpr double kPivotTol = 1e-11;

struct Tableau {
  std::size_t m = 0, ncols = 0;
  std::vector<std::vector<double>> t;  // m rows, ncols + 1 (rhs last)
  std::vector<int> basis;              // column basic in each row

  double& rhs(std::size_t i) { return t[i][ncols]; }

  void pivot(std::size_t r, std::size_t c) {
    const double inv = 1.0 / t[r][c];
    for (auto& v : t[r]) v *= inv;
    t[r][c] = 1.0;  // clamp rounding
    for (std::size_t i = 0; i < m; ++i) {
      if (i == r) continue;
      const double f = t[i][c];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= ncols; ++j) t[i][j] -= f * t[r][j];
      t[i][c] = 0.0;
    }
    basis[r] = static_cast<int>(c);
  }
};

// One simplex phase: maximize cost over the current tableau with Bland's
// rule.  `allowed` masks out columns that may not enter (artificials in
// phase 2).  Returns false if unbounded.
bool run_phase(Tableau& tb, const std::vector<double>& cost,
               const std::vector<char>& allowed, std::size_t max_iter) {
  std::vector<double> red(tb.ncols);
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    // reduced costs d = c - c_B B^-1 A (tableau already holds B^-1 A)
    for (std::size_t j = 0; j < tb.ncols; ++j) red[j] = cost[j];
    for (std::size_t i = 0; i < tb.m; ++i) {
      const double cb = cost[tb.basis[i]];
      if (cb == 0.0) continue;
      for (std::size_t j = 0; j < tb.ncols; ++j) red[j] -= cb * tb.t[i][j];
    }
    // Bland: smallest improving column index
    std::size_t enter = tb.ncols;
    for (std::size_t j = 0; j < tb.ncols; ++j) {
      if (allowed[j] && red[j] > kEnterTol) {
        enter = j;
        break;
      }
    }
    if (enter == tb.ncols) return true;  // optimal
    // ratio test, Bland tie-break on basis column index
    std::size_t leave = tb.m;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < tb.m; ++i) {
      const double aij = tb.t[i][enter];
      if (aij > kPivotTol) {
        const double ratio = tb.rhs(i) / aij;
        if (ratio < best - 1e-12 ||
            (ratio < best + 1e-12 &&
             (leave == tb.m || tb.basis[i] < tb.basis[leave]))) {
          best = ratio;
          leave = i;
        }
      }
    }
    if (leave == tb.m) return false;  // unbounded
    tb.pivot(leave, enter);
  }
  throw solver_error("simplex: iteration limit exceeded");
}

}  // namespace

Result solve(const Problem& p) {
  const std::size_t n = p.num_vars;
  if (p.lower.size() != n || p.upper.size() != n || p.objective.size() != n)
    throw solver_error("simplex: inconsistent problem dimensions");
  for (std::size_t j = 0; j < n; ++j) {
    if (!(std::isfinite(p.lower[j]) && std::isfinite(p.upper[j])))
      throw solver_error("simplex: variable bounds must be finite");
    if (p.lower[j] > p.upper[j]) return {Status::infeasible, 0.0, {}};
  }

  // Shift to x' = x - lower >= 0; upper bounds become rows.
  std::vector<Row> rows = p.rows;
  for (auto& r : rows) {
    if (r.a.size() != n) throw solver_error("simplex: row dimension mismatch");
    for (std::size_t j = 0; j < n; ++j) r.rhs -= r.a[j] * p.lower[j];
    if (r.rel == Rel::ge) {  // negate to <=
      for (auto& v : r.a) v = -v;
      r.rhs = -r.rhs;
      r.rel = Rel::le;
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    Row ub;
    ub.a.assign(n, 0.0);
    ub.a[j] = 1.0;
    ub.rel = Rel::le;
    ub.rhs = p.upper[j] - p.lower[j];
    rows.push_back(ub);
  }

  const std::size_t m = rows.size();
  // columns: structural | slacks (LE rows) | artificials (assigned below)
  std::size_t nslack = 0;
  for (const auto& r : rows)
    if (r.rel == Rel::le) ++nslack;

  Tableau tb;
  tb.m = m;
  std::vector<std::size_t> slack_col(m, SIZE_MAX);
  {
    std::size_t sc = n;
    for (std::size_t i = 0; i < m; ++i)
      if (rows[i].rel == Rel::le) slack_col[i] = sc++;
  }
  // artificial needed where no slack gives a feasible start
  std::vector<char> need_art(m, 0);
  std::size_t nart = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const bool neg = rows[i].rhs < 0.0;
    if (rows[i].rel == Rel::eq || neg) {
      need_art[i] = 1;
      ++nart;
    }
  }
  tb.ncols = n + nslack + nart;
  tb.t.assign(m, std::vector<double>(tb.ncols + 1, 0.0));
  tb.basis.assign(m, -1);

  std::size_t ac = n + nslack;
  for (std::size_t i = 0; i < m; ++i) {
    const double sign = rows[i].rhs < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < n; ++j) tb.t[i][j] = sign * rows[i].a[j];
    if (slack_col[i] != SIZE_MAX) tb.t[i][slack_col[i]] = sign;
    tb.t[i][tb.ncols] = sign * rows[i].rhs;
    if (need_art[i]) {
      tb.t[i][ac] = 1.0;
      tb.basis[i] = static_cast<int>(ac);
      ++ac;
    } else {
      tb.basis[i] = static_cast<int>(slack_col[i]);
    }
  }

  const std::size_t max_iter = 20000 + 100 * (tb.ncols + m);
  std::vector<char> allow_all(tb.ncols, 1);

  if (nart > 0) {
    std::vector<double> c1(tb.ncols, 0.0);
    for (std::size_t j = n + nslack; j < tb.ncols; ++j) c1[j] = -1.0;
    if (!run_phase(tb, c1, allow_all, max_iter))
      throw solver_error("simplex: phase-1 unbounded");
    double art_sum = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      if (tb.basis[i] >= static_cast<int>(n + nslack)) art_sum += tb.rhs(i);
    if (art_sum > 1e-7) return {Status::infeasible, 0.0, {}};
    // drive any zero-level artificial out of the basis if possible
    for (std::size_t i = 0; i < m; ++i) {
      if (tb.basis[i] < static_cast<int>(n + nslack)) continue;
      for (std::size_t j = 0; j < n + nslack; ++j) {
        if (std::fabs(tb.t[i][j]) > kPivotTol) {
          tb.pivot(i, j);
          break;
        }
      }
    }
  }

  std::vector<double> c2(tb.ncols, 0.0);
  for (std::size_t j = 0; j < n; ++j) c2[j] = p.objective[j];
  std::vector<char> allowed(tb.ncols, 1);
  for (std::size_t j = n + nslack; j < tb.ncols; ++j) allowed[j] = 0;
  if (!run_phase(tb, c2, allowed, max_iter)) return {Status::unbounded, 0.0, {}};

  Result out;
  out.status = Status::optimal;
  out.x.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    if (tb.basis[i] >= 0 && tb.basis[i] < static_cast<int>(n))
      out.x[tb.basis[i]] = tb.rhs(i);
  for (std::size_t j = 0; j < n; ++j) out.x[j] += p.lower[j];
  out.value = 0.0;
  for (std::size_t j = 0; j < n; ++j) out.value += p.objective[j] * out.x[j];
  return out;
}

}  // namespace sfe::lp
