#include "sfe/kernels.hpp"

// Compiled with -mavx2 -mfma (see CMakeLists).  Nothing here runs unless the
// CPU reports both feature bits, so the rest of the build stays portable.

#if !defined(SFE_NO_AVX2) && defined(__AVX2__) && defined(__FMA__)
#define SFE_AVX2_ENABLED 1
#include <immintrin.h>
#else
#define SFE_AVX2_ENABLED 0
#endif

namespace sfe::kern::avx2 {

bool available() {
#if SFE_AVX2_ENABLED
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

#if SFE_AVX2_ENABLED

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  acc0 = _mm256_add_pd(acc0, acc1);
  __m128d lo = _mm256_castpd256_pd128(acc0);
  __m128d hi = _mm256_extractf128_pd(acc0, 1);
  lo = _mm_add_pd(lo, hi);
  double acc = _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scal(double alpha, double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] *= alpha;
}

void gemv(const double* a, std::size_t rows, std::size_t cols, const double* x,
          double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot(a + r * cols, x, cols);
}

#else  // scalar fallbacks keep the symbols defined on non-AVX2 builds

double dot(const double* a, const double* b, std::size_t n) {
  return ref::dot(a, b, n);
}
void axpy(double alpha, const double* x, double* y, std::size_t n) {
  ref::axpy(alpha, x, y, n);
}
void scal(double alpha, double* x, std::size_t n) { ref::scal(alpha, x, n); }
void gemv(const double* a, std::size_t rows, std::size_t cols, const double* x,
          double* y) {
  ref::gemv(a, rows, cols, x, y);
}

#endif

}  // namespace sfe::kern::avx2
