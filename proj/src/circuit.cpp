#include "qps/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qps {

namespace {

std::string describe(std::size_t i, const CircuitCell& c) {
  std::ostringstream os;
  os << "cell " << i << " (layer " << c.layer << ", modes " << c.mode_a << "," << c.mode_b << ")";
  return os.str();
}

void push_unique(std::vector<std::size_t>& v, std::size_t x) {
  if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
}

}  // namespace

void CircuitLayout::validate() const {
  if (dim < 2) throw StructuralError("circuit dimension must be at least 2");
  if (output_phases.size() != dim) throw StructuralError("output phase count does not match dimension");
  std::vector<std::pair<std::size_t, std::size_t>> slots;  // (layer, mode)
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    if (c.mode_a >= dim || c.mode_b >= dim) throw StructuralError(describe(i, c) + ": mode out of range");
    if (c.mode_a == c.mode_b) throw StructuralError(describe(i, c) + ": both ports on one mode");
    if (!std::isfinite(c.theta1) || !std::isfinite(c.theta2)) {
      throw StructuralError(describe(i, c) + ": non-finite phase");
    }
    slots.emplace_back(c.layer, c.mode_a);
    slots.emplace_back(c.layer, c.mode_b);
  }
  std::sort(slots.begin(), slots.end());
  if (auto it = std::adjacent_find(slots.begin(), slots.end()); it != slots.end()) {
    std::ostringstream os;
    os << "overlapping cells in layer " << it->first << " on mode " << it->second;
    throw StructuralError(os.str());
  }
}

CircuitLayout CircuitLayout::from_mesh(const MeshParameters& mesh) {
  mesh.validate();
  CircuitLayout out;
  out.dim = mesh.dim;
  for (const auto& c : mesh.cells) out.cells.push_back({c.layer, c.top_mode, c.top_mode + 1, c.theta1, c.theta2});
  out.output_phases = mesh.output_phases;
  return out;
}

CircuitLayout CircuitLayout::from_layers(
    std::size_t dim, const std::vector<std::vector<std::pair<std::size_t, std::size_t>>>& layers) {
  CircuitLayout out;
  out.dim = dim;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    for (const auto& [a, b] : layers[l]) out.cells.push_back({l, a, b, 0.0, 0.0});
  }
  out.output_phases.assign(dim, 0.0);
  out.validate();
  return out;
}

MeshParameters CircuitLayout::to_mesh() const {
  validate();
  MeshParameters m;
  m.dim = dim;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    if (c.mode_b != c.mode_a + 1) throw StructuralError(describe(i, c) + ": not an adjacent pair");
    m.cells.push_back({c.layer, c.mode_a, c.theta1, c.theta2});
  }
  m.output_phases = output_phases;
  m.validate();
  return m;
}

CircuitLayout triangular_layout(std::size_t dim) {
  CircuitLayout out;
  out.dim = dim;
  out.output_phases.assign(dim, 0.0);
  std::vector<std::size_t> next_free(dim, 0);
  for (std::size_t k = 1; k < dim; ++k) {
    for (std::size_t j = k; j >= 1; --j) {
      const std::size_t layer = std::max(next_free[j - 1], next_free[j]);
      next_free[j - 1] = next_free[j] = layer + 1;
      out.cells.push_back({layer, j - 1, j, 0.0, 0.0});
    }
  }
  return out;
}

CircuitLayout random_layout(std::size_t dim, std::size_t cells, Rng& rng) {
  if (dim < 2) throw StructuralError("circuit dimension must be at least 2");
  CircuitLayout out;
  out.dim = dim;
  out.output_phases.assign(dim, 0.0);
  std::vector<std::size_t> next_free(dim, 0);
  for (std::size_t i = 0; i < cells; ++i) {
    const std::size_t a = uniform_index(rng, dim);
    std::size_t b = uniform_index(rng, dim - 1);
    if (b >= a) ++b;
    const std::size_t layer = std::max(next_free[a], next_free[b]);
    next_free[a] = next_free[b] = layer + 1;
    out.cells.push_back({layer, a, b, uniform(rng, 0, kTwoPi), uniform(rng, 0, kTwoPi)});
  }
  return out;
}

UnitaryMatrix circuit_unitary(const CircuitLayout& layout, const WavelengthSpec& wl) {
  if (!(wl.lambda > 0.0) || !(wl.lambda_nominal > 0.0)) throw DomainError("wavelength must be positive");
  layout.validate();
  const auto n = static_cast<Eigen::Index>(layout.dim);
  CMatrix u = CMatrix::Identity(n, n);
  std::vector<std::size_t> order(layout.cells.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return layout.cells[a].layer < layout.cells[b].layer;
  });
  const bool nominal = wl.lambda == wl.lambda_nominal;
  for (std::size_t i : order) {
    const auto& c = layout.cells[i];
    apply_block_rows(u, c.mode_a, c.mode_b,
                     nominal ? mzi_block(c.theta1, c.theta2) : mzi_block(c.theta1, c.theta2, wl));
  }
  for (std::size_t k = 0; k < layout.dim; ++k) {
    u.row(static_cast<Eigen::Index>(k)) *= std::polar(1.0, phase_at_wavelength(layout.output_phases[k], wl));
  }
  return UnitaryMatrix::assume_unitary(std::move(u));
}

CircuitGraph::CircuitGraph(CircuitLayout layout) : layout_(std::move(layout)) {
  layout_.validate();
  std::stable_sort(layout_.cells.begin(), layout_.cells.end(), [](const CircuitCell& a, const CircuitCell& b) {
    return a.layer != b.layer ? a.layer < b.layer : std::min(a.mode_a, a.mode_b) < std::min(b.mode_a, b.mode_b);
  });
  const std::size_t n = layout_.cells.size();
  succ_.assign(n, {});
  pred_.assign(n, {});
  sinks_.assign(n, {});
  sources_.assign(n, {});
  entry_.assign(layout_.dim, std::nullopt);
  exit_.assign(layout_.dim, std::nullopt);

  std::vector<std::optional<std::size_t>> last(layout_.dim);  // last cell seen on each mode
  for (std::size_t v = 0; v < n; ++v) {
    const auto& c = layout_.cells[v];
    for (std::size_t mode : {c.mode_a, c.mode_b}) {
      if (last[mode]) {
        push_unique(succ_[*last[mode]], v);
        push_unique(pred_[v], *last[mode]);
      } else {
        entry_[mode] = v;
        sources_[v].push_back(mode);
      }
      last[mode] = v;
    }
    if (layers_.empty() || layout_.cells[layers_.back().front()].layer != c.layer) layers_.emplace_back();
    layers_.back().push_back(v);
  }
  for (std::size_t mode = 0; mode < layout_.dim; ++mode) {
    if (last[mode]) {
      exit_[mode] = last[mode];
      sinks_[*last[mode]].push_back(mode);
    }
  }
}

std::optional<std::size_t> CircuitGraph::entry_cell(std::size_t mode) const {
  if (mode >= dim()) throw LookupError("mode out of range");
  return entry_[mode];
}

std::optional<std::size_t> CircuitGraph::exit_cell(std::size_t mode) const {
  if (mode >= dim()) throw LookupError("mode out of range");
  return exit_[mode];
}

std::size_t CircuitGraph::edge_count() const {
  std::size_t e = 0;
  for (const auto& s : succ_) e += s.size();
  return e;
}

double CircuitGraph::phase(std::size_t index) const {
  const auto& c = layout_.cells.at(index / 2);
  return index % 2 == 0 ? c.theta1 : c.theta2;
}

void CircuitGraph::set_phase(std::size_t index, double value) {
  auto& c = layout_.cells.at(index / 2);
  (index % 2 == 0 ? c.theta1 : c.theta2) = value;
}

void CircuitGraph::set_output_phases(std::vector<double> phases) {
  if (phases.size() != dim()) throw StructuralError("output phase count does not match dimension");
  layout_.output_phases = std::move(phases);
}

}  // namespace qps
