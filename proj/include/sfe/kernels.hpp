#pragma once
#include <cstddef>

// Small dense-vector kernels used by the linear algebra layer.  Scalar
// reference implementations plus an AVX2 variant; the backend is chosen once
// at startup from CPUID and can be forced (used by the equivalence tests).

namespace sfe::kern {

enum class Backend { scalar, avx2 };

Backend active_backend();
bool backend_supported(Backend b);
bool set_backend(Backend b);  // returns false if unsupported on this CPU
const char* backend_name();

// sum_i a[i]*b[i]
double dot(const double* a, const double* b, std::size_t n);
// y[i] += alpha * x[i]
void axpy(double alpha, const double* x, double* y, std::size_t n);
// x[i] *= alpha
void scal(double alpha, double* x, std::size_t n);
// y = A x with A row-major (rows x cols)
void gemv(const double* a, std::size_t rows, std::size_t cols,
          const double* x, double* y);

namespace ref {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scal(double alpha, double* x, std::size_t n);
void gemv(const double* a, std::size_t rows, std::size_t cols,
          const double* x, double* y);
}  // namespace ref

namespace avx2 {
bool available();
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scal(double alpha, double* x, std::size_t n);
void gemv(const double* a, std::size_t rows, std::size_t cols,
          const double* x, double* y);
}  // namespace avx2

}  // namespace sfe::kern
