#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "sfe/kernels.hpp"

using namespace sfe;

TEST_CASE("scalar kernels match hand values") {
  double a[3] = {1, 2, 3}, b[3] = {4, 5, 6};
  CHECK(kern::ref::dot(a, b, 3) == doctest::Approx(32.0));

  double y[3] = {1, 1, 1};
  kern::ref::axpy(2.0, a, y, 3);
  CHECK(y[0] == 3.0);
  CHECK(y[2] == 7.0);

  kern::ref::scal(0.5, y, 3);
  CHECK(y[0] == 1.5);

  // 2x3 row-major times x
  double m[6] = {1, 0, 2, 0, 1, -1};
  double x[3] = {3, 4, 5}, out[2];
  kern::ref::gemv(m, 2, 3, x, out);
  CHECK(out[0] == doctest::Approx(13.0));
  CHECK(out[1] == doctest::Approx(-1.0));
}

TEST_CASE("backend selection is sticky and reports support") {
  CHECK(kern::backend_supported(kern::Backend::scalar));
  kern::Backend before = kern::active_backend();
  REQUIRE(kern::set_backend(kern::Backend::scalar));
  CHECK(kern::active_backend() == kern::Backend::scalar);
  if (kern::backend_supported(kern::Backend::avx2)) {
    REQUIRE(kern::set_backend(kern::Backend::avx2));
    CHECK(kern::active_backend() == kern::Backend::avx2);
  } else {
    CHECK_FALSE(kern::set_backend(kern::Backend::avx2));
  }
  kern::set_backend(before);
}

TEST_CASE("vector backend agrees with the reference on awkward sizes") {
  if (!kern::backend_supported(kern::Backend::avx2)) return;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 15u, 33u, 64u, 67u}) {
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = d(rng);
      b[i] = d(rng);
    }
    double num = std::max(1.0, std::fabs(kern::ref::dot(a.data(), b.data(), n)));
    CHECK(std::fabs(kern::avx2::dot(a.data(), b.data(), n) -
                    kern::ref::dot(a.data(), b.data(), n)) <= 1e-12 * num);

    std::vector<double> y1(b), y2(b);
    kern::ref::axpy(1.7, a.data(), y1.data(), n);
    kern::avx2::axpy(1.7, a.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-13));

    std::vector<double> s1(a), s2(a);
    kern::ref::scal(-0.3, s1.data(), n);
    kern::avx2::scal(-0.3, s2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(s1[i] == s2[i]);

    std::size_t rows = n / 2 + 1;
    std::vector<double> m(rows * n);
    for (double& v : m) v = d(rng);
    std::vector<double> o1(rows), o2(rows);
    kern::ref::gemv(m.data(), rows, n, a.data(), o1.data());
    kern::avx2::gemv(m.data(), rows, n, a.data(), o2.data());
    for (std::size_t i = 0; i < rows; ++i)
      CHECK(o1[i] == doctest::Approx(o2[i]).epsilon(1e-13));
  }
}

TEST_CASE("dispatched kernels follow the forced backend") {
  double a[4] = {1, 2, 3, 4}, b[4] = {5, 6, 7, 8};
  kern::Backend before = kern::active_backend();
  kern::set_backend(kern::Backend::scalar);
  CHECK(kern::dot(a, b, 4) == kern::ref::dot(a, b, 4));
  if (kern::backend_supported(kern::Backend::avx2)) {
    kern::set_backend(kern::Backend::avx2);
    CHECK(kern::dot(a, b, 4) == kern::avx2::dot(a, b, 4));
  }
  kern::set_backend(before);
}
