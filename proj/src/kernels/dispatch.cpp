#include <atomic>

#include "qps/kernels.hpp"

namespace qps::kernels {

namespace {

struct Table {
  void (*rotate_rows)(std::span<cplx>, std::span<cplx>, const Mat2&);
  cplx (*dot)(std::span<const cplx>, std::span<const cplx>);
  void (*axpy)(cplx, std::span<const cplx>, std::span<cplx>);
  double (*norm_sq)(std::span<const cplx>);
  void (*abs_sq)(std::span<const cplx>, std::span<double>);
};

constexpr Table kScalar{scalar::rotate_rows, scalar::dot, scalar::axpy, scalar::norm_sq,
                        scalar::abs_sq};
#if defined(QPS_HAVE_AVX2)
constexpr Table kAvx2{avx2::rotate_rows, avx2::dot, avx2::axpy, avx2::norm_sq, avx2::abs_sq};
#endif

bool cpu_has_avx2() {
#if defined(QPS_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa detect() { return cpu_has_avx2() ? Isa::avx2 : Isa::scalar; }

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

const Table& table() {
#if defined(QPS_HAVE_AVX2)
  if (current().load(std::memory_order_relaxed) == Isa::avx2) return kAvx2;
#endif
  return kScalar;
}

}  // namespace

void rotate_rows(std::span<cplx> x, std::span<cplx> y, const Mat2& m) {
  table().rotate_rows(x, y, m);
}
cplx dot(std::span<const cplx> x, std::span<const cplx> y) { return table().dot(x, y); }
void axpy(cplx alpha, std::span<const cplx> x, std::span<cplx> y) { table().axpy(alpha, x, y); }
double norm_sq(std::span<const cplx> x) { return table().norm_sq(x); }
void abs_sq(std::span<const cplx> x, std::span<double> out) { table().abs_sq(x, out); }

Isa active_isa() { return current().load(); }

bool isa_supported(Isa isa) { return isa == Isa::scalar || cpu_has_avx2(); }

void set_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw DomainError("kernel ISA not supported on this CPU: " + std::string(isa_name(isa)));
  }
  current().store(isa);
}

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

}  // namespace qps::kernels
