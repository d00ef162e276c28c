#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "qps/mesh.hpp"
#include "qps/random.hpp"

namespace qps {

/// Tunable cell on an arbitrary mode pair. The MZI block acts with mode_a as
/// its top port and mode_b as its bottom port.
struct CircuitCell {
  std::size_t layer = 0;
  std::size_t mode_a = 0;
  std::size_t mode_b = 1;
  double theta1 = 0.0;
  double theta2 = 0.0;
};

/// Layer-wise description of a circuit: square, triangular or arbitrary.
struct CircuitLayout {
  std::size_t dim = 0;
  std::vector<CircuitCell> cells;
  std::vector<double> output_phases;

  /// Throws StructuralError for out-of-range or coincident modes and for
  /// cells of the same layer sharing a mode.
  void validate() const;

  static CircuitLayout from_mesh(const MeshParameters& mesh);
  /// One inner list per layer, each entry a mode pair; phases start at zero.
  static CircuitLayout from_layers(std::size_t dim,
                                   const std::vector<std::vector<std::pair<std::size_t, std::size_t>>>& layers);
  /// Back to square-mesh form; throws StructuralError unless every cell sits
  /// on an adjacent pair with the square-layout parity.
  MeshParameters to_mesh() const;
};

/// Reck triangular schedule: diagonal k = 1..dim−1 places cells on
/// (k−1,k), (k−2,k−1), …, (0,1), each cell as early as its modes allow.
CircuitLayout triangular_layout(std::size_t dim);

/// Random connectivity: `cells` cells on uniformly chosen distinct mode
/// pairs, packed greedily into layers.
CircuitLayout random_layout(std::size_t dim, std::size_t cells, Rng& rng);

/// D · (product of cell blocks in layer order) at the given wavelength.
UnitaryMatrix circuit_unitary(const CircuitLayout& layout, const WavelengthSpec& wl = {});

/// Cell-level DAG of a circuit. Vertex v is cell v of the layout after
/// sorting by (layer, mode_a); an edge u → v exists when light leaving u on
/// some mode next meets v. Input modes are sources and output modes sinks.
class CircuitGraph {
 public:
  explicit CircuitGraph(CircuitLayout layout);
  static CircuitGraph from_mesh(const MeshParameters& mesh) {
    return CircuitGraph(CircuitLayout::from_mesh(mesh));
  }

  std::size_t dim() const noexcept { return layout_.dim; }
  std::size_t vertex_count() const noexcept { return layout_.cells.size(); }
  const CircuitLayout& layout() const noexcept { return layout_; }
  const CircuitCell& cell(std::size_t v) const { return layout_.cells.at(v); }

  const std::vector<std::size_t>& successors(std::size_t v) const { return succ_.at(v); }
  const std::vector<std::size_t>& predecessors(std::size_t v) const { return pred_.at(v); }
  /// Output modes on which light leaves the circuit directly after v.
  const std::vector<std::size_t>& sink_modes(std::size_t v) const { return sinks_.at(v); }
  /// Input modes that enter v directly.
  const std::vector<std::size_t>& source_modes(std::size_t v) const { return sources_.at(v); }
  /// First cell met by light entering on `mode`, if any.
  std::optional<std::size_t> entry_cell(std::size_t mode) const;
  /// Last cell touching `mode`, if any.
  std::optional<std::size_t> exit_cell(std::size_t mode) const;

  /// Vertices grouped by layer, in increasing layer order; empty layers dropped.
  const std::vector<std::vector<std::size_t>>& layers() const noexcept { return layers_; }
  std::size_t edge_count() const;

  /// Tunable phases: (θ1, θ2) of vertex v live at indices 2v and 2v+1.
  double phase(std::size_t index) const;
  void set_phase(std::size_t index, double value);
  std::size_t phase_count() const noexcept { return 2 * vertex_count(); }
  void set_output_phases(std::vector<double> phases);

  UnitaryMatrix unitary(const WavelengthSpec& wl = {}) const { return circuit_unitary(layout_, wl); }

 private:
  CircuitLayout layout_;
  std::vector<std::vector<std::size_t>> succ_, pred_, sinks_, sources_;
  std::vector<std::optional<std::size_t>> entry_, exit_;
  std::vector<std::vector<std::size_t>> layers_;
};

}  // namespace qps
