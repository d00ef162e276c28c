#pragma once

#include <vector>

#include "qps/ecm.hpp"
#include "qps/random.hpp"

namespace qps {

struct Rational {
  long num = 0;
  long den = 1;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Rational&) const = default;
};

/// Classical projective-simulation agent: a random walk over the ECM with
/// h-values, glow and forgetting.
class ClassicalAgent {
 public:
  /// h starts at 1 and glow at 0 on every edge.
  ClassicalAgent(EcmGraph graph, double gamma, double eta);

  const EcmGraph& graph() const noexcept { return graph_; }
  double gamma() const noexcept { return gamma_; }
  double eta() const noexcept { return eta_; }

  /// Edge values are addressed by (clip, position in children(clip)).
  double h(std::size_t clip, std::size_t child_pos) const { return h_.at(clip).at(child_pos); }
  double glow(std::size_t clip, std::size_t child_pos) const { return g_.at(clip).at(child_pos); }
  void set_h(std::size_t clip, std::size_t child_pos, double value);

  /// h_ij / Σ_j' h_ij' over the children of `clip`; StructuralError when a
  /// non-action clip has no children.
  std::vector<double> transition_probabilities(std::size_t clip) const;

  struct Walk {
    std::size_t action = 0;
    std::vector<std::size_t> path;  ///< visited clips, percept first
  };
  /// Walks from the percept until an action clip is hit.
  Walk walk(std::size_t percept, Rng& rng) const;

  /// Glow first (taken edges → 1, others ×(1−η)), then every h:
  /// h ← 1 + (1−γ)(h−1) + g·R, floored at h_floor.
  void update(const std::vector<std::size_t>& path, double reward);

  static constexpr double h_floor = 1e-6;

 private:
  EcmGraph graph_;
  double gamma_, eta_;
  std::vector<std::vector<double>> h_, g_;
};

/// Upper bound on the raw accuracy of a classical agent on the
/// two-observable transfer tasks.
Rational classical_transfer_bound();

}  // namespace qps
