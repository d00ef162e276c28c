#pragma once

// Inner loops shared by mesh construction, the layer evaluator and the
// Gram-Schmidt update. Each kernel has a scalar reference and an AVX2+FMA
// variant; the variant is chosen once at startup from cpuid and can be
// pinned for testing.

#include <span>
#include <string_view>

#include "qps/common.hpp"

namespace qps::kernels {

/// 2×2 complex block [[m00, m01], [m10, m11]].
struct Mat2 {
  cplx m00, m01, m10, m11;
};

enum class Isa { scalar, avx2 };

/// x ← m00·x + m01·y,  y ← m10·x + m11·y (element-wise over equal-length rows).
void rotate_rows(std::span<cplx> x, std::span<cplx> y, const Mat2& m);

/// Σ conj(x_i)·y_i
cplx dot(std::span<const cplx> x, std::span<const cplx> y);

/// y ← y + alpha·x
void axpy(cplx alpha, std::span<const cplx> x, std::span<cplx> y);

/// Σ |x_i|²
double norm_sq(std::span<const cplx> x);

/// out_i = |x_i|²
void abs_sq(std::span<const cplx> x, std::span<double> out);

/// ISA used by the free functions above.
Isa active_isa();

/// True when the CPU can run the given variant.
bool isa_supported(Isa isa);

/// Pins the dispatch to `isa`; throws DomainError when unsupported.
void set_isa(Isa isa);

std::string_view isa_name(Isa isa);

// Direct entry points to each variant, for equivalence tests and benchmarks.
namespace scalar {
void rotate_rows(std::span<cplx> x, std::span<cplx> y, const Mat2& m);
cplx dot(std::span<const cplx> x, std::span<const cplx> y);
void axpy(cplx alpha, std::span<const cplx> x, std::span<cplx> y);
double norm_sq(std::span<const cplx> x);
void abs_sq(std::span<const cplx> x, std::span<double> out);
}  // namespace scalar

#if defined(QPS_HAVE_AVX2)
namespace avx2 {
void rotate_rows(std::span<cplx> x, std::span<cplx> y, const Mat2& m);
cplx dot(std::span<const cplx> x, std::span<const cplx> y);
void axpy(cplx alpha, std::span<const cplx> x, std::span<cplx> y);
double norm_sq(std::span<const cplx> x);
void abs_sq(std::span<const cplx> x, std::span<double> out);
}  // namespace avx2
#endif

}  // namespace qps::kernels
