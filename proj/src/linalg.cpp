#include "sfe/linalg.hpp"

#include <cmath>
#include <utility>

#include "sfe/errors.hpp"
#include "sfe/kernels.hpp"

namespace sfe::linalg {

std::vector<double> Matrix::mul(const std::vector<double>& x) const {
  std::vector<double> y(rows_);
  kern::gemv(a_.data(), rows_, cols_, x.data(), y.data());
  return y;
}

Lu Lu::factor(Matrix m, double pivot_tol) {
  if (m.rows() != m.cols()) throw solver_error("lu: matrix must be square");
  const std::size_t n = m.rows();
  std::vector<int> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<int>(i);

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    double best = std::fabs(m(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      double v = std::fabs(m(i, k));
      if (v > best) {
        best = v;
        piv = i;
      }
    }
    if (best < pivot_tol)
      throw solver_error("lu: pivot below tolerance (matrix numerically singular)");
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(m(k, j), m(piv, j));
      std::swap(perm[k], perm[piv]);
    }
    const double inv = 1.0 / m(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double mult = m(i, k) * inv;
      m(i, k) = mult;
      if (mult != 0.0)
        kern::axpy(-mult, m.row(k) + k + 1, m.row(i) + k + 1, n - k - 1);
    }
  }

  Lu out;
  out.lu_ = std::move(m);
  out.perm_ = std::move(perm);
  return out;
}

std::vector<double> Lu::solve(std::vector<double> b) const {
  const std::size_t n = dim();
  if (b.size() != n) throw solver_error("lu: rhs dimension mismatch");
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[perm_[i]];
  // forward substitution (unit lower triangle)
  for (std::size_t i = 1; i < n; ++i)
    x[i] -= kern::dot(lu_.row(i), x.data(), i);
  // back substitution
  for (std::size_t ii = n; ii-- > 0;) {
    x[ii] -= kern::dot(lu_.row(ii) + ii + 1, x.data() + ii + 1, n - ii - 1);
    x[ii] /= lu_(ii, ii);
  }
  return x;
}

Matrix Lu::solve_many(const Matrix& b) const {
  const std::size_t n = dim(), k = b.cols();
  if (b.rows() != n) throw solver_error("lu: rhs dimension mismatch");
  Matrix x(n, k);
  std::vector<double> col(n);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < n; ++i) col[i] = b(i, j);
    auto sol = solve(col);
    for (std::size_t i = 0; i < n; ++i) x(i, j) = sol[i];
  }
  return x;
}

Matrix Lu::inverse() const {
  const std::size_t n = dim();
  Matrix id(n, n);
  for (std::size_t i = 0; i < n; ++i) id(i, i) = 1.0;
  return solve_many(id);
}

}  // namespace sfe::linalg
