// Compiled with -mavx2 -mfma; only reached after the cpuid check in
// dispatch.cpp. std::complex<double> is laid out as {re, im}, so one __m256d
// holds two consecutive complex numbers.

#include <immintrin.h>

#include "qps/kernels.hpp"

namespace qps::kernels::avx2 {

namespace {

inline const double* raw(const cplx* p) { return reinterpret_cast<const double*>(p); }
inline double* raw(cplx* p) { return reinterpret_cast<double*>(p); }

// (c_re + i c_im) · v for two packed complex numbers in v.
inline __m256d cmul_scalar(__m256d v, __m256d c_re, __m256d c_im) {
  const __m256d swapped = _mm256_permute_pd(v, 0x5);
  return _mm256_addsub_pd(_mm256_mul_pd(v, c_re), _mm256_mul_pd(swapped, c_im));
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

void rotate_rows(std::span<cplx> x, std::span<cplx> y, const Mat2& m) {
  const std::size_t n = x.size();
  const __m256d a_re = _mm256_set1_pd(m.m00.real()), a_im = _mm256_set1_pd(m.m00.imag());
  const __m256d b_re = _mm256_set1_pd(m.m01.real()), b_im = _mm256_set1_pd(m.m01.imag());
  const __m256d c_re = _mm256_set1_pd(m.m10.real()), c_im = _mm256_set1_pd(m.m10.imag());
  const __m256d d_re = _mm256_set1_pd(m.m11.real()), d_im = _mm256_set1_pd(m.m11.imag());
  double* px = raw(x.data());
  double* py = raw(y.data());
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d vx = _mm256_loadu_pd(px + 2 * i);
    const __m256d vy = _mm256_loadu_pd(py + 2 * i);
    const __m256d nx = _mm256_add_pd(cmul_scalar(vx, a_re, a_im), cmul_scalar(vy, b_re, b_im));
    const __m256d ny = _mm256_add_pd(cmul_scalar(vx, c_re, c_im), cmul_scalar(vy, d_re, d_im));
    _mm256_storeu_pd(px + 2 * i, nx);
    _mm256_storeu_pd(py + 2 * i, ny);
  }
  for (; i < n; ++i) {
    const cplx a = x[i];
    const cplx b = y[i];
    x[i] = m.m00 * a + m.m01 * b;
    y[i] = m.m10 * a + m.m11 * b;
  }
}

cplx dot(std::span<const cplx> x, std::span<const cplx> y) {
  const std::size_t n = x.size();
  const double* px = raw(x.data());
  const double* py = raw(y.data());
  // acc_re collects (xr·yr, xi·yi); acc_im collects (xr·yi, xi·yr).
  __m256d acc_re = _mm256_setzero_pd();
  __m256d acc_im = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d vx = _mm256_loadu_pd(px + 2 * i);
    const __m256d vy = _mm256_loadu_pd(py + 2 * i);
    acc_re = _mm256_fmadd_pd(vx, vy, acc_re);
    acc_im = _mm256_fmadd_pd(vx, _mm256_permute_pd(vy, 0x5), acc_im);
  }
  const __m256d sign = _mm256_set_pd(-1.0, 1.0, -1.0, 1.0);
  double re = hsum(acc_re);
  double im = hsum(_mm256_mul_pd(acc_im, sign));
  for (; i < n; ++i) {
    re += x[i].real() * y[i].real() + x[i].imag() * y[i].imag();
    im += x[i].real() * y[i].imag() - x[i].imag() * y[i].real();
  }
  return {re, im};
}

void axpy(cplx alpha, std::span<const cplx> x, std::span<cplx> y) {
  const std::size_t n = x.size();
  const __m256d al_re = _mm256_set1_pd(alpha.real());
  const __m256d al_im = _mm256_set1_pd(alpha.imag());
  const double* px = raw(x.data());
  double* py = raw(y.data());
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d vx = _mm256_loadu_pd(px + 2 * i);
    const __m256d vy = _mm256_loadu_pd(py + 2 * i);
    _mm256_storeu_pd(py + 2 * i, _mm256_add_pd(vy, cmul_scalar(vx, al_re, al_im)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double norm_sq(std::span<const cplx> x) {
  const std::size_t n = x.size();
  const double* px = raw(x.data());
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d v = _mm256_loadu_pd(px + 2 * i);
    acc = _mm256_fmadd_pd(v, v, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i].real() * x[i].real() + x[i].imag() * x[i].imag();
  return s;
}

void abs_sq(std::span<const cplx> x, std::span<double> out) {
  const std::size_t n = x.size();
  const double* px = raw(x.data());
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d v = _mm256_loadu_pd(px + 2 * i);
    const __m256d sq = _mm256_mul_pd(v, v);
    // (r0², i0², r1², i1²) → (r0²+i0², r1²+i1²)
    const __m128d lo = _mm256_castpd256_pd128(sq);
    const __m128d hi = _mm256_extractf128_pd(sq, 1);
    _mm_storeu_pd(out.data() + i, _mm_hadd_pd(lo, hi));
  }
  for (; i < n; ++i) out[i] = x[i].real() * x[i].real() + x[i].imag() * x[i].imag();
}

}  // namespace qps::kernels::avx2
