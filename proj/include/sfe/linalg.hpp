#pragma once
#include <cstddef>
#include <vector>

namespace sfe::linalg {

// Dense row-major matrix.  Sized for the problems at hand (a few thousand
// buses at most); no view machinery, just contiguous storage.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), a_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return a_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return a_[r * cols_ + c]; }
  double* row(std::size_t r) { return a_.data() + r * cols_; }
  const double* row(std::size_t r) const { return a_.data() + r * cols_; }
  double* data() { return a_.data(); }
  const double* data() const { return a_.data(); }

  // y = M x
  std::vector<double> mul(const std::vector<double>& x) const;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> a_;
};

// LU factorization with partial pivoting.  Factorization refuses pivots
// smaller than `pivot_tol` in absolute value and throws solver_error, which
// is how singular reduced Laplacians (disconnected networks, degenerate
// admittances) surface.
class Lu {
 public:
  static Lu factor(Matrix m, double pivot_tol = 1e-12);

  std::vector<double> solve(std::vector<double> b) const;
  // Solves M X = B column-by-column; B row-major (n x k), returns n x k.
  Matrix solve_many(const Matrix& b) const;
  Matrix inverse() const;

  std::size_t dim() const { return lu_.rows(); }

 private:
  Matrix lu_;
  std::vector<int> perm_;
};

}  // namespace sfe::linalg
