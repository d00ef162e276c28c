#include <doctest.h>

#include <vector>

#include "qps/kernels.hpp"
#include "qps/random.hpp"

using namespace qps;

namespace {

std::vector<cplx> random_row(Rng& rng, std::size_t n) {
  std::vector<cplx> v(n);
  for (auto& z : v) z = {standard_normal(rng), standard_normal(rng)};
  return v;
}

double max_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("scalar kernels match naive loops") {
  Rng rng(3);
  for (std::size_t n : {0u, 1u, 2u, 3u, 7u, 16u}) {
    auto x = random_row(rng, n), y = random_row(rng, n);
    kernels::Mat2 m{{0.3, 0.1}, {-0.2, 0.5}, {0.7, -0.4}, {0.05, 0.9}};
    auto xs = x, ys = y;
    kernels::scalar::rotate_rows(xs, ys, m);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::abs(xs[i] - (m.m00 * x[i] + m.m01 * y[i])) < 1e-14);
      CHECK(std::abs(ys[i] - (m.m10 * x[i] + m.m11 * y[i])) < 1e-14);
    }
    cplx d = 0;
    double ns = 0;
    for (std::size_t i = 0; i < n; ++i) {
      d += std::conj(x[i]) * y[i];
      ns += std::norm(x[i]);
    }
    CHECK(std::abs(kernels::scalar::dot(x, y) - d) < 1e-12);
    CHECK(kernels::scalar::norm_sq(x) == doctest::Approx(ns));
  }
}

#if defined(QPS_HAVE_AVX2)
TEST_CASE("avx2 kernels agree with the scalar reference") {
  if (!kernels::isa_supported(kernels::Isa::avx2)) return;
  Rng rng(11);
  for (std::size_t n = 0; n < 40; ++n) {
    auto x = random_row(rng, n), y = random_row(rng, n);
    kernels::Mat2 m{{0.3, 0.1}, {-0.2, 0.5}, {0.7, -0.4}, {0.05, 0.9}};

    auto xs = x, ys = y, xv = x, yv = y;
    kernels::scalar::rotate_rows(xs, ys, m);
    kernels::avx2::rotate_rows(xv, yv, m);
    CHECK(max_diff(xs, xv) < 1e-13);
    CHECK(max_diff(ys, yv) < 1e-13);

    CHECK(std::abs(kernels::scalar::dot(x, y) - kernels::avx2::dot(x, y)) < 1e-12);
    CHECK(kernels::scalar::norm_sq(x) == doctest::Approx(kernels::avx2::norm_sq(x)).epsilon(1e-13));

    const cplx alpha(0.4, -1.3);
    auto ya = y, yb = y;
    kernels::scalar::axpy(alpha, x, ya);
    kernels::avx2::axpy(alpha, x, yb);
    CHECK(max_diff(ya, yb) < 1e-13);

    std::vector<double> pa(n), pb(n);
    kernels::scalar::abs_sq(x, pa);
    kernels::avx2::abs_sq(x, pb);
    for (std::size_t i = 0; i < n; ++i) CHECK(pa[i] == doctest::Approx(pb[i]).epsilon(1e-14));
  }
}
#endif

TEST_CASE("isa pinning") {
  const auto before = kernels::active_isa();
  kernels::set_isa(kernels::Isa::scalar);
  CHECK(kernels::active_isa() == kernels::Isa::scalar);
  if (!kernels::isa_supported(kernels::Isa::avx2)) {
    CHECK_THROWS_AS(kernels::set_isa(kernels::Isa::avx2), DomainError);
  }
  kernels::set_isa(before);
}
