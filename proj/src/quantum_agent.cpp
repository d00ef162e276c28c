#include "qps/quantum_agent.hpp"

#include <algorithm>
#include <cmath>

namespace qps {

void GlowTable::update(std::size_t s, std::size_t a, double eta) {
  if (s >= rows_ || a >= cols_) throw LookupError("glow index out of range");
  for (double& x : g_) x *= (1.0 - eta);
  g_[s * cols_ + a] = 1.0;
}

QuantumAgent::QuantumAgent(MeshParameters mesh, std::vector<std::vector<std::size_t>> percept_modes,
                           std::vector<std::vector<std::size_t>> action_modes)
    : mesh_(std::move(mesh)), percepts_(std::move(percept_modes)), actions_(std::move(action_modes)) {
  refresh();
  check_maps();
  glow_ = GlowTable(percepts_.size(), actions_.size());
}

QuantumAgent::QuantumAgent(UnitaryRoute route, std::vector<std::vector<std::size_t>> percept_modes,
                           std::vector<std::vector<std::size_t>> action_modes)
    : route_(std::move(route)), percepts_(std::move(percept_modes)), actions_(std::move(action_modes)) {
  refresh();
  check_maps();
  glow_ = GlowTable(percepts_.size(), actions_.size());
}

QuantumAgent QuantumAgent::one_to_one(MeshParameters mesh) {
  std::vector<std::vector<std::size_t>> modes(mesh.dim);
  for (std::size_t k = 0; k < mesh.dim; ++k) modes[k] = {k};
  return QuantumAgent(std::move(mesh), modes, modes);
}

void QuantumAgent::check_maps() const {
  const std::size_t n = dim();
  std::vector<char> in(n, 0), out(n, 0);
  for (const auto& p : percepts_) {
    if (p.empty()) throw StructuralError("percept without modes");
    for (std::size_t m : p) {
      if (m >= n) throw StructuralError("percept mode out of range");
      if (in[m]++) throw StructuralError("percept modes overlap");
    }
  }
  for (const auto& a : actions_) {
    if (a.empty()) throw StructuralError("action without modes");
    for (std::size_t m : a) {
      if (m >= n) throw StructuralError("action mode out of range");
      if (out[m]++) throw StructuralError("action mode sets overlap");
    }
  }
}

void QuantumAgent::refresh() {
  if (mesh_) {
    u_ = build_unitary(*mesh_).matrix();
  } else if (route_) {
    u_ = ecm_unitary(*route_).matrix();
  }
}

void QuantumAgent::set_mesh(MeshParameters mesh) {
  if (mesh.dim != dim()) throw StructuralError("mesh dimension does not match the agent");
  mesh_ = std::move(mesh);
  route_.reset();
  refresh();
}

void QuantumAgent::set_unitary(const UnitaryMatrix& u) {
  if (u.dim() != dim()) throw StructuralError("unitary dimension does not match the agent");
  mesh_.reset();
  route_.reset();
  u_ = u.matrix();
}

CVector QuantumAgent::input_state(std::size_t percept) const {
  if (percept >= percepts_.size()) throw LookupError("unknown percept " + std::to_string(percept));
  CVector psi = CVector::Zero(static_cast<Eigen::Index>(dim()));
  const auto& modes = percepts_[percept];
  const double amp = 1.0 / std::sqrt(static_cast<double>(modes.size()));
  for (std::size_t m : modes) psi(static_cast<Eigen::Index>(m)) = amp;
  return psi;
}

CVector QuantumAgent::forward(std::size_t percept) const { return u_ * input_state(percept); }

std::vector<double> QuantumAgent::action_probabilities(std::size_t percept) const {
  const CVector out = forward(percept);
  std::vector<double> p(actions_.size(), 0.0);
  for (std::size_t a = 0; a < actions_.size(); ++a) {
    for (std::size_t m : actions_[a]) p[a] += std::norm(out(static_cast<Eigen::Index>(m)));
  }
  return p;
}

PolicyDistribution QuantumAgent::policy(std::size_t percept) const {
  PolicyDistribution d;
  d.probabilities = action_probabilities(percept);
  for (double x : d.probabilities) d.acceptance += x;
  if (!(d.acceptance > QuantumAgent::kMinAcceptance)) throw DegenerateError("no amplitude reaches any action mode");
  for (double& x : d.probabilities) x /= d.acceptance;
  return d;
}

std::size_t QuantumAgent::sample_action(std::size_t percept, Rng& rng) const {
  return sample_discrete(rng, policy(percept).probabilities);
}

RealMatrix QuantumAgent::layer_probabilities(std::size_t percept) const {
  CVector psi = input_state(percept);
  std::vector<Eigen::VectorXd> cols;
  auto snapshot = [&] { cols.push_back(psi.cwiseAbs2()); };
  snapshot();
  if (mesh_) {
    const std::size_t layers = mesh_->dim;
    for (std::size_t l = 0; l < layers; ++l) {
      for (const auto& c : mesh_->cells) {
        if (c.layer != l) continue;
        const kernels::Mat2 b = mzi_block(c.theta1, c.theta2);
        const auto i = static_cast<Eigen::Index>(c.top_mode);
        const cplx x = psi(i), y = psi(i + 1);
        psi(i) = b.m00 * x + b.m01 * y;
        psi(i + 1) = b.m10 * x + b.m11 * y;
      }
      snapshot();
    }
    // Output phases leave probabilities unchanged; apply for exactness.
    for (std::size_t k = 0; k < mesh_->dim; ++k) psi(static_cast<Eigen::Index>(k)) *= std::polar(1.0, mesh_->output_phases[k]);
    cols.back() = psi.cwiseAbs2();
  } else if (route_) {
    for (const auto& layer : layer_grouping(*route_)) {
      for (std::size_t i : layer) psi = route_->steps[i].matrix * psi;
      snapshot();
    }
  } else {
    psi = u_ * psi;
    snapshot();
  }
  RealMatrix out(static_cast<Eigen::Index>(dim()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t l = 0; l < cols.size(); ++l) out.col(static_cast<Eigen::Index>(l)) = cols[l];
  return out;
}

}  // namespace qps
