#include "qps/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qps {

namespace {

using Idx = Eigen::Index;

inline cplx expi(double a) { return {std::cos(a), std::sin(a)}; }

// Scales rows by the output phases.
void apply_output_phases(CMatrix& m, std::span<const double> phases, double scale) {
  for (std::size_t r = 0; r < phases.size(); ++r) {
    const cplx f = expi(phases[r] * scale);
    m.row(static_cast<Idx>(r)) *= f;
  }
}

std::vector<std::size_t> cells_in_layer_order(const std::vector<MziCell>& cells) {
  std::vector<std::size_t> order(cells.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return cells[a].layer < cells[b].layer; });
  return order;
}

template <class BlockFn>
CMatrix assemble(const MeshParameters& p, BlockFn&& block) {
  CMatrix u = CMatrix::Identity(static_cast<Idx>(p.dim), static_cast<Idx>(p.dim));
  for (std::size_t idx : cells_in_layer_order(p.cells)) {
    const MziCell& c = p.cells[idx];
    apply_block_rows(u, c.top_mode, c.top_mode + 1, block(c));
  }
  return u;
}

}  // namespace

double unitarity_defect(const CMatrix& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  const CMatrix g = m * m.adjoint() - CMatrix::Identity(m.rows(), m.cols());
  return g.norm();
}

UnitaryMatrix UnitaryMatrix::from_matrix(CMatrix m, double tolerance) {
  if (m.rows() == 0 || m.rows() != m.cols()) {
    std::ostringstream os;
    os << "matrix is " << m.rows() << "x" << m.cols() << ", expected non-empty square";
    throw ValidationError(os.str(), std::numeric_limits<double>::infinity());
  }
  for (Idx i = 0; i < m.size(); ++i) {
    if (!std::isfinite(m.data()[i].real()) || !std::isfinite(m.data()[i].imag())) {
      throw ValidationError("matrix has non-finite entries", std::numeric_limits<double>::infinity());
    }
  }
  const double d = qps::unitarity_defect(m);
  if (!(d < tolerance)) {
    std::ostringstream os;
    os << "matrix is not unitary: ||UU^dag - I||_F = " << d;
    throw ValidationError(os.str(), d);
  }
  return UnitaryMatrix(std::move(m));
}

UnitaryMatrix UnitaryMatrix::assume_unitary(CMatrix m) { return UnitaryMatrix(std::move(m)); }

UnitaryMatrix UnitaryMatrix::identity(std::size_t dim) {
  return UnitaryMatrix(CMatrix::Identity(static_cast<Idx>(dim), static_cast<Idx>(dim)));
}

double UnitaryMatrix::unitarity_defect() const { return qps::unitarity_defect(m_); }

void MeshParameters::validate() const {
  if (dim < 2) throw StructuralError("mesh dimension must be at least 2");
  const std::size_t expected = dim * (dim - 1) / 2;
  if (cells.size() != expected) {
    std::ostringstream os;
    os << "mesh of dimension " << dim << " needs " << expected << " cells, got " << cells.size();
    throw StructuralError(os.str());
  }
  if (output_phases.size() != dim) {
    std::ostringstream os;
    os << "expected " << dim << " output phases, got " << output_phases.size();
    throw StructuralError(os.str());
  }
  std::vector<std::vector<char>> used(dim, std::vector<char>(dim, 0));
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const MziCell& c = cells[i];
    std::ostringstream os;
    os << "cell " << i << " (layer " << c.layer << ", mode " << c.top_mode << ")";
    if (c.layer >= dim) throw StructuralError(os.str() + ": layer out of range");
    if (c.top_mode + 1 >= dim) throw StructuralError(os.str() + ": mode out of range");
    if ((c.top_mode % 2) != (c.layer % 2)) {
      throw StructuralError(os.str() + ": mode parity does not match the square layout");
    }
    if (used[c.layer][c.top_mode]) throw StructuralError(os.str() + ": duplicate cell");
    used[c.layer][c.top_mode] = 1;
    if (!std::isfinite(c.theta1) || !std::isfinite(c.theta2)) {
      throw StructuralError(os.str() + ": non-finite phase");
    }
  }
  for (double p : output_phases) {
    if (!std::isfinite(p)) throw StructuralError("non-finite output phase");
  }
}

std::vector<MziCell> square_layout(std::size_t dim) {
  std::vector<MziCell> out;
  if (dim < 2) return out;
  out.reserve(dim * (dim - 1) / 2);
  for (std::size_t l = 0; l < dim; ++l) {
    for (std::size_t k = l % 2; k + 1 < dim; k += 2) out.push_back({l, k, 0.0, 0.0});
  }
  return out;
}

MeshParameters square_mesh(std::size_t dim, double theta1, double theta2) {
  MeshParameters p;
  p.dim = dim;
  p.cells = square_layout(dim);
  for (auto& c : p.cells) {
    c.theta1 = theta1;
    c.theta2 = theta2;
  }
  p.output_phases.assign(dim, 0.0);
  return p;
}

MeshParameters random_square_mesh(std::size_t dim, Rng& rng) {
  MeshParameters p = square_mesh(dim);
  for (auto& c : p.cells) {
    c.theta1 = uniform(rng, 0.0, kTwoPi);
    c.theta2 = uniform(rng, 0.0, kTwoPi);
  }
  for (auto& d : p.output_phases) d = uniform(rng, 0.0, kTwoPi);
  return p;
}

kernels::Mat2 mzi_block(double theta1, double theta2) {
  // M(θ) = i·e^{iθ/2}·[[sin θ/2, cos θ/2], [cos θ/2, −sin θ/2]]
  const double s = std::sin(theta2 / 2), c = std::cos(theta2 / 2);
  const cplx g = cplx(0, 1) * expi(theta2 / 2);
  const cplx e1 = expi(theta1);
  return {g * s * e1, g * c, g * c * e1, -g * s};
}

UnitaryMatrix mzi_unitary(double theta1, double theta2) {
  const kernels::Mat2 b = mzi_block(theta1, theta2);
  CMatrix m(2, 2);
  m << b.m00, b.m01, b.m10, b.m11;
  return UnitaryMatrix::assume_unitary(std::move(m));
}

void apply_block_rows(CMatrix& m, std::size_t top, std::size_t bottom, const kernels::Mat2& b) {
  const auto n = static_cast<std::size_t>(m.cols());
  std::span<cplx> x(m.data() + top * n, n);
  std::span<cplx> y(m.data() + bottom * n, n);
  kernels::rotate_rows(x, y, b);
}

UnitaryMatrix build_unitary(const MeshParameters& params) {
  params.validate();
  CMatrix u = assemble(params, [](const MziCell& c) { return mzi_block(c.theta1, c.theta2); });
  apply_output_phases(u, params.output_phases, 1.0);
  return UnitaryMatrix::assume_unitary(std::move(u));
}

namespace {

struct Elim {
  std::size_t mode;  // top mode of the pair
  double theta;
  double phi;
};

// W ← W·S(θ,φ)^† on columns (c, c+1).
void right_apply_inverse(CMatrix& w, std::size_t c, const kernels::Mat2& s) {
  const Idx c0 = static_cast<Idx>(c), c1 = c0 + 1;
  for (Idx r = 0; r < w.rows(); ++r) {
    const cplx a = w(r, c0), b = w(r, c1);
    w(r, c0) = a * std::conj(s.m00) + b * std::conj(s.m01);
    w(r, c1) = a * std::conj(s.m10) + b * std::conj(s.m11);
  }
}

}  // namespace

MeshParameters clements_decompose(const UnitaryMatrix& u) {
  const std::size_t n = u.dim();
  if (n < 2) throw StructuralError("mesh dimension must be at least 2");
  CMatrix w = u.matrix();
  std::vector<Elim> right, left;

  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (i % 2 == 0) {
      for (std::size_t j = 0; j <= i; ++j) {
        const std::size_t c = i - j, r = n - 1 - j;
        const cplx x = w(static_cast<Idx>(r), static_cast<Idx>(c));
        const cplx y = w(static_cast<Idx>(r), static_cast<Idx>(c + 1));
        const double theta = 2.0 * std::atan2(std::abs(y), std::abs(x));
        const double phi = (std::abs(x) == 0.0 || std::abs(y) == 0.0)
                               ? 0.0
                               : std::arg(x) - std::arg(y) + kPi;
        right_apply_inverse(w, c, mzi_block(phi, theta));
        right.push_back({c, theta, phi});
      }
    } else {
      for (std::size_t j = 1; j <= i + 1; ++j) {
        const std::size_t r = n + j - i - 2;  // row to clear
        const std::size_t c = j - 1;
        const cplx x = w(static_cast<Idx>(r - 1), static_cast<Idx>(c));
        const cplx y = w(static_cast<Idx>(r), static_cast<Idx>(c));
        const double theta = 2.0 * std::atan2(std::abs(x), std::abs(y));
        const double phi =
            (std::abs(x) == 0.0 || std::abs(y) == 0.0) ? 0.0 : std::arg(y) - std::arg(x);
        apply_block_rows(w, r - 1, r, mzi_block(phi, theta));
        left.push_back({r - 1, theta, phi});
      }
    }
  }

  std::vector<cplx> d(n);
  for (std::size_t k = 0; k < n; ++k) {
    const cplx v = w(static_cast<Idx>(k), static_cast<Idx>(k));
    d[k] = std::abs(v) > 0 ? v / std::abs(v) : cplx(1.0, 0.0);
  }

  // U = S_L1^† ⋯ S_Lq^† · D · S_Rp ⋯ S_R1. Move D to the far left with
  // S(θ,φ)^†·diag(d1,d2) = diag(−e^{−i(θ+φ)}d2, −e^{−iθ}d2)·S(θ, arg d1/d2).
  std::vector<Elim> moved;
  for (auto it = left.rbegin(); it != left.rend(); ++it) {
    const cplx d1 = d[it->mode], d2 = d[it->mode + 1];
    const double delta = std::arg(d1 / d2);
    d[it->mode] = -expi(-(it->theta + it->phi)) * d2;
    d[it->mode + 1] = -expi(-it->theta) * d2;
    moved.push_back({it->mode, it->theta, delta});
  }
  // Propagation order: right cells as found, then moved cells (built from the
  // last left cell backwards).
  std::vector<Elim> seq = right;
  seq.insert(seq.end(), moved.begin(), moved.end());

  MeshParameters p;
  p.dim = n;
  std::vector<std::size_t> next_free(n, 0);  // earliest layer each mode is available
  for (const Elim& e : seq) {
    std::size_t layer = std::max(next_free[e.mode], next_free[e.mode + 1]);
    if (layer % 2 != e.mode % 2) ++layer;
    next_free[e.mode] = next_free[e.mode + 1] = layer + 1;
    p.cells.push_back({layer, e.mode, wrap_phase(e.phi), wrap_phase(e.theta)});
  }
  std::stable_sort(p.cells.begin(), p.cells.end(), [](const MziCell& a, const MziCell& b) {
    return a.layer != b.layer ? a.layer < b.layer : a.top_mode < b.top_mode;
  });
  p.output_phases.resize(n);
  for (std::size_t k = 0; k < n; ++k) p.output_phases[k] = wrap_phase(std::arg(d[k]));
  return p;
}

MeshParameters clements_decompose(const CMatrix& u) {
  return clements_decompose(UnitaryMatrix::from_matrix(u));
}

double phase_at_wavelength(double theta, const WavelengthSpec& wl) {
  if (!(wl.lambda > 0.0) || !(wl.lambda_nominal > 0.0)) throw DomainError("wavelengths must be positive");
  return theta * wl.lambda_nominal / wl.lambda;
}

kernels::Mat2 mzi_block(double theta1, double theta2, const WavelengthSpec& wl) {
  const double kappa = kPi / 4.0 * wl.lambda_nominal / wl.lambda;
  const double ck = std::cos(kappa), sk = std::sin(kappa);
  const cplx k00(ck, 0), k01(0, sk);
  const cplx p1 = expi(phase_at_wavelength(theta1, wl));
  const cplx p2 = expi(phase_at_wavelength(theta2, wl));
  // K·diag(p2,1)·K·diag(p1,1), K = [[ck, i sk], [i sk, ck]]
  const cplx a00 = k00 * p2 * k00 + k01 * k01;
  const cplx a01 = k00 * p2 * k01 + k01 * k00;
  const cplx a10 = k01 * p2 * k00 + k00 * k01;
  const cplx a11 = k01 * p2 * k01 + k00 * k00;
  return {a00 * p1, a01, a10 * p1, a11};
}

UnitaryMatrix wavelength_unitary(const MeshParameters& params, const WavelengthSpec& wl) {
  if (!(wl.lambda > 0.0) || !(wl.lambda_nominal > 0.0) || !std::isfinite(wl.lambda)) {
    throw DomainError("wavelength must be positive and finite");
  }
  params.validate();
  CMatrix u = assemble(params, [&](const MziCell& c) { return mzi_block(c.theta1, c.theta2, wl); });
  apply_output_phases(u, params.output_phases, wl.lambda_nominal / wl.lambda);
  return UnitaryMatrix::assume_unitary(std::move(u));
}

UnitaryMatrix wavelength_unitary(const MeshParameters& params, double lambda) {
  return wavelength_unitary(params, WavelengthSpec{lambda, 1.0});
}

double gate_fidelity(const CMatrix& u, const CMatrix& v) {
  if (u.rows() != v.rows() || u.cols() != v.cols() || u.rows() == 0) {
    throw StructuralError("fidelity needs two square matrices of equal size");
  }
  const cplx tr = (u.adjoint() * v).trace();
  const double n = static_cast<double>(u.rows());
  return std::norm(tr) / (n * n);
}

std::vector<double> flatten_phases(const MeshParameters& params) {
  std::vector<double> out;
  out.reserve(params.phase_count());
  for (const auto& c : params.cells) {
    out.push_back(c.theta1);
    out.push_back(c.theta2);
  }
  out.insert(out.end(), params.output_phases.begin(), params.output_phases.end());
  return out;
}

void assign_phases(MeshParameters& params, std::span<const double> phases) {
  if (phases.size() != params.phase_count()) {
    throw StructuralError("phase vector size does not match the mesh");
  }
  std::size_t k = 0;
  for (auto& c : params.cells) {
    c.theta1 = phases[k++];
    c.theta2 = phases[k++];
  }
  for (auto& d : params.output_phases) d = phases[k++];
}

}  // namespace qps
