#include "qps/kernels.hpp"

namespace qps::kernels::scalar {

void rotate_rows(std::span<cplx> x, std::span<cplx> y, const Mat2& m) {
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    const cplx a = x[i];
    const cplx b = y[i];
    x[i] = m.m00 * a + m.m01 * b;
    y[i] = m.m10 * a + m.m11 * b;
  }
}

cplx dot(std::span<const cplx> x, std::span<const cplx> y) {
  double re = 0.0;
  double im = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    re += x[i].real() * y[i].real() + x[i].imag() * y[i].imag();
    im += x[i].real() * y[i].imag() - x[i].imag() * y[i].real();
  }
  return {re, im};
}

void axpy(cplx alpha, std::span<const cplx> x, std::span<cplx> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double norm_sq(std::span<const cplx> x) {
  double s = 0.0;
  for (const cplx& v : x) s += v.real() * v.real() + v.imag() * v.imag();
  return s;
}

void abs_sq(std::span<const cplx> x, std::span<double> out) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = x[i].real() * x[i].real() + x[i].imag() * x[i].imag();
  }
}

}  // namespace qps::kernels::scalar
