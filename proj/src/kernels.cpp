#include "sfe/kernels.hpp"

namespace sfe::kern {

namespace ref {

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scal(double alpha, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void gemv(const double* a, std::size_t rows, std::size_t cols,
          const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot(a + r * cols, x, cols);
}

}  // namespace ref

namespace {

Backend pick_default() {
  return avx2::available() ? Backend::avx2 : Backend::scalar;
}

Backend g_backend = pick_default();

}  // namespace

Backend active_backend() { return g_backend; }

bool backend_supported(Backend b) {
  return b == Backend::scalar || avx2::available();
}

bool set_backend(Backend b) {
  if (!backend_supported(b)) return false;
  g_backend = b;
  return true;
}

const char* backend_name() {
  return g_backend == Backend::avx2 ? "avx2" : "scalar";
}

double dot(const double* a, const double* b, std::size_t n) {
  return g_backend == Backend::avx2 ? avx2::dot(a, b, n) : ref::dot(a, b, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  if (g_backend == Backend::avx2)
    avx2::axpy(alpha, x, y, n);
  else
    ref::axpy(alpha, x, y, n);
}

void scal(double alpha, double* x, std::size_t n) {
  if (g_backend == Backend::avx2)
    avx2::scal(alpha, x, n);
  else
    ref::scal(alpha, x, n);
}

void gemv(const double* a, std::size_t rows, std::size_t cols, const double* x,
          double* y) {
  if (g_backend == Backend::avx2)
    avx2::gemv(a, rows, cols, x, y);
  else
    ref::gemv(a, rows, cols, x, y);
}

}  // namespace sfe::kern
