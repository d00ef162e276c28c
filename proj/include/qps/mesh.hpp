#pragma once

#include <span>
#include <vector>

#include "qps/common.hpp"
#include "qps/kernels.hpp"
#include "qps/random.hpp"

namespace qps {

/// Dense square complex matrix that is unitary by construction or by
/// validation.
class UnitaryMatrix {
 public:
  /// Tolerance applied to user-supplied matrices.
  static constexpr double kInputTolerance = 1e-8;

  /// Validates ‖UU† − I‖_F < tolerance; throws ValidationError otherwise.
  static UnitaryMatrix from_matrix(CMatrix m, double tolerance = kInputTolerance);
  /// Skips validation; for matrices produced by unitary constructions.
  static UnitaryMatrix assume_unitary(CMatrix m);
  static UnitaryMatrix identity(std::size_t dim);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }
  const CMatrix& matrix() const noexcept { return m_; }
  cplx operator()(std::size_t row, std::size_t col) const {
    return m_(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
  }
  double unitarity_defect() const;
  UnitaryMatrix adjoint() const { return UnitaryMatrix(m_.adjoint()); }

  friend UnitaryMatrix operator*(const UnitaryMatrix& a, const UnitaryMatrix& b) {
    return UnitaryMatrix(a.m_ * b.m_);
  }

 private:
  explicit UnitaryMatrix(CMatrix m) : m_(std::move(m)) {}
  CMatrix m_;
};

/// ‖MM† − I‖_F
double unitarity_defect(const CMatrix& m);

/// One Mach-Zehnder cell of the square mesh acting on modes
/// (top_mode, top_mode + 1).
struct MziCell {
  std::size_t layer = 0;
  std::size_t top_mode = 0;
  double theta1 = 0.0;  ///< external phase on the top input
  double theta2 = 0.0;  ///< internal phase between the two splitters
};

/// Phase settings of a square (rectangular) mesh: dim(dim−1)/2 cells plus
/// an output phase per mode. build_unitary gives D · T_N ⋯ T_1 with cells
/// applied in layer order.
struct MeshParameters {
  std::size_t dim = 0;
  std::vector<MziCell> cells;
  std::vector<double> output_phases;

  /// Throws StructuralError naming the offending cell.
  void validate() const;

  /// Number of tunable phases: 2 per cell plus the output row.
  std::size_t phase_count() const { return 2 * cells.size() + output_phases.size(); }
};

/// Cell positions of the square layout: layer l holds cells on (k, k+1) for
/// k ≡ l (mod 2); dim layers in total.
std::vector<MziCell> square_layout(std::size_t dim);

/// Square mesh with every phase set to the given values.
MeshParameters square_mesh(std::size_t dim, double theta1 = 0.0, double theta2 = 0.0);

/// Square mesh with all phases uniform in [0, 2π).
MeshParameters random_square_mesh(std::size_t dim, Rng& rng);

/// 2×2 transfer matrix of a cell: M(θ2)·diag(e^{iθ1}, 1) with
/// M(θ) = ½·[[1,i],[i,1]]·diag(e^{iθ},1)·[[1,i],[i,1]].
kernels::Mat2 mzi_block(double theta1, double theta2);
UnitaryMatrix mzi_unitary(double theta1, double theta2);

UnitaryMatrix build_unitary(const MeshParameters& params);

/// Exact Clements elimination: build_unitary(clements_decompose(U)) = U.
/// Phases are returned in [0, 2π).
MeshParameters clements_decompose(const UnitaryMatrix& u);
/// Validates unitarity first (tolerance 1e-8).
MeshParameters clements_decompose(const CMatrix& u);

/// Wavelength operating point; lambda is dimensionless with nominal 1.
struct WavelengthSpec {
  double lambda = 1.0;
  double lambda_nominal = 1.0;
};

/// Phase produced at `lambda` by a shifter programmed for `theta` at the
/// nominal wavelength (power setting P = θ·λ_nominal, phase = P/λ).
double phase_at_wavelength(double theta, const WavelengthSpec& wl);

/// Cell transfer matrix at a wavelength: each balanced coupler becomes a
/// coupler of angle π·λ_nominal/(4λ) and each phase θ becomes θ·λ_nominal/λ.
kernels::Mat2 mzi_block(double theta1, double theta2, const WavelengthSpec& wl);

/// Effective unitary seen by light at wl.lambda; throws DomainError for
/// lambda ≤ 0.
UnitaryMatrix wavelength_unitary(const MeshParameters& params, const WavelengthSpec& wl);
UnitaryMatrix wavelength_unitary(const MeshParameters& params, double lambda);

/// |Tr(U†V)|² / dim²
double gate_fidelity(const CMatrix& u, const CMatrix& v);

/// Phases flattened as (θ1, θ2) per cell in stored order, then output phases.
std::vector<double> flatten_phases(const MeshParameters& params);
/// Inverse of flatten_phases; sizes must match.
void assign_phases(MeshParameters& params, std::span<const double> phases);

/// Left-multiplies rows (top, top+1) of m by the block.
void apply_block_rows(CMatrix& m, std::size_t top, std::size_t bottom, const kernels::Mat2& b);

}  // namespace qps
