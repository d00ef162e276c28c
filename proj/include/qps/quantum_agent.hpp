#pragma once

#include <optional>
#include <vector>

#include "qps/ecm.hpp"
#include "qps/mesh.hpp"
#include "qps/random.hpp"

namespace qps {

using RealMatrix = Eigen::MatrixXd;

/// Glow per (percept, action) pair.
class GlowTable {
 public:
  GlowTable() = default;
  GlowTable(std::size_t percepts, std::size_t actions) : rows_(percepts), cols_(actions), g_(percepts * actions, 0.0) {}

  std::size_t percepts() const noexcept { return rows_; }
  std::size_t actions() const noexcept { return cols_; }
  double operator()(std::size_t s, std::size_t a) const { return g_.at(s * cols_ + a); }
  /// Taken pair → 1, every other pair ×(1−η).
  void update(std::size_t s, std::size_t a, double eta);
  void reset() { std::fill(g_.begin(), g_.end(), 0.0); }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> g_;
};

struct PolicyDistribution {
  std::vector<double> probabilities;  ///< post-selected, per action
  double acceptance = 0.0;            ///< mass on all action modes
};

/// Quantum PS agent: a single photon enters on the percept's mode(s), the
/// backend unitary acts, and detection on an action's modes selects it.
/// Outcomes on modes belonging to no action are discarded.
class QuantumAgent {
 public:
  /// Percept inputs are equal-amplitude superpositions over their modes.
  QuantumAgent(MeshParameters mesh, std::vector<std::vector<std::size_t>> percept_modes,
               std::vector<std::vector<std::size_t>> action_modes);
  QuantumAgent(UnitaryRoute route, std::vector<std::vector<std::size_t>> percept_modes,
               std::vector<std::vector<std::size_t>> action_modes);
  /// Every mode is both a percept and an action.
  static QuantumAgent one_to_one(MeshParameters mesh);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(u_.rows()); }
  std::size_t percept_count() const noexcept { return percepts_.size(); }
  std::size_t action_count() const noexcept { return actions_.size(); }
  const std::vector<std::size_t>& percept_modes(std::size_t s) const { return percepts_.at(s); }
  const std::vector<std::size_t>& action_modes(std::size_t a) const { return actions_.at(a); }

  const MeshParameters* mesh() const noexcept { return mesh_ ? &*mesh_ : nullptr; }
  const UnitaryRoute* route() const noexcept { return route_ ? &*route_ : nullptr; }
  void set_mesh(MeshParameters mesh);
  /// Replaces the backend with a raw unitary (used by direct matrix updates).
  void set_unitary(const UnitaryMatrix& u);
  const CMatrix& unitary() const noexcept { return u_; }

  GlowTable& glow() noexcept { return glow_; }
  const GlowTable& glow() const noexcept { return glow_; }

  CVector input_state(std::size_t percept) const;
  /// Output amplitudes U·ψ_s over all modes; LookupError for unknown percepts.
  CVector forward(std::size_t percept) const;
  /// Acceptance below this counts as zero (rounding leaves ~1e-33 on
  /// modes that are exactly dark).
  static constexpr double kMinAcceptance = 1e-14;

  /// DegenerateError when no amplitude reaches an action mode.
  PolicyDistribution policy(std::size_t percept) const;
  /// Unnormalized detection probability of each action (no post-selection).
  std::vector<double> action_probabilities(std::size_t percept) const;
  std::size_t sample_action(std::size_t percept, Rng& rng) const;

  /// P(mode, l) = probability on `mode` after the first l layers; column 0
  /// is the input, the last column equals |forward|². Layers are the mesh
  /// layers, or the route's commuting groups.
  RealMatrix layer_probabilities(std::size_t percept) const;

 private:
  void check_maps() const;
  void refresh();

  std::optional<MeshParameters> mesh_;
  std::optional<UnitaryRoute> route_;
  CMatrix u_;
  std::vector<std::vector<std::size_t>> percepts_, actions_;
  GlowTable glow_;
};

}  // namespace qps
