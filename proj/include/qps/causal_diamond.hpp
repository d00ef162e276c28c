#pragma once

#include <functional>
#include <span>
#include <vector>

#include "qps/circuit.hpp"

namespace qps {

/// Input and output mode sets of one rewarded transition. A single-mode
/// percept has one input; adjacent-pair encodings list both modes and are
/// fed with equal amplitudes.
struct ModePair {
  std::vector<std::size_t> inputs;
  std::vector<std::size_t> outputs;

  static ModePair single(std::size_t s, std::size_t a) { return {{s}, {a}}; }
  /// Modes (2s, 2s+1) → (2a, 2a+1).
  static ModePair adjacent(std::size_t s, std::size_t a) { return {{2 * s, 2 * s + 1}, {2 * a, 2 * a + 1}}; }
};

struct CausalDiamond {
  ModePair pair;
  std::vector<std::size_t> diamond;  ///< sorted vertex ids
  std::vector<std::size_t> surface;  ///< diamond cells with an edge crossing its boundary
  std::vector<std::size_t> leaking;  ///< diamond cells with an out-edge leaving it

  bool empty() const noexcept { return diamond.empty(); }
};

/// Forward light cone of the inputs intersected with the backward light cone
/// of the outputs, followed by a single pass over the diamond's out-edges.
/// An unreachable pair gives an empty diamond.
CausalDiamond find_causal_diamond(const CircuitGraph& g, const ModePair& pair);
CausalDiamond find_causal_diamond(const CircuitGraph& g, std::size_t s, std::size_t a);

enum class TunableSet { leaking, surface, diamond, all };
enum class MeritMode { mean, geometric_mean, min };

/// Union (sorted) of the selected cell sets over all pairs.
std::vector<std::size_t> tunable_cells(const CircuitGraph& g, const std::vector<ModePair>& pairs,
                                       TunableSet set);

/// Scalar merit over several probabilities. The geometric mean is 0 if any
/// probability is 0.
double multi_pair_figure_of_merit(std::span<const double> probabilities, MeritMode mode);

/// One (input state, output set, wavelength) combination whose detection
/// probability is tracked.
struct Probe {
  CVector input;                     ///< normalized input amplitudes
  std::vector<std::size_t> outputs;  ///< detection modes
  WavelengthSpec wavelength;

  static Probe from_pair(std::size_t dim, const ModePair& pair, const WavelengthSpec& wl = {});
};

/// Probability of detecting a probe's photon in its output modes, by full
/// rebuild of the circuit unitary.
double probe_probability(const CircuitGraph& g, const Probe& probe);

/// Layer-by-layer evaluator. It keeps, per probe, the state after all layers
/// before the current one and the rows of (D · layers after the current one)
/// for the output modes, so a phase change in the current layer is
/// re-evaluated in O(|outputs|·dim) and advancing costs one pass over a
/// layer.
class FastLayerEvaluator {
 public:
  FastLayerEvaluator(CircuitGraph& g, std::vector<Probe> probes);

  std::size_t layer_count() const noexcept { return g_->layers().size(); }
  std::size_t current_layer() const noexcept { return layer_; }
  bool done() const noexcept { return layer_ >= layer_count(); }
  const std::vector<std::size_t>& current_cells() const { return g_->layers().at(layer_); }

  /// Changes a phase of a cell in the current layer (index as in
  /// CircuitGraph::phase); throws DomainError for other cells.
  void set_phase(std::size_t index, double value);
  double probability(std::size_t probe) const;
  std::vector<double> probabilities() const;

  /// Commits the current layer and moves to the next one.
  void advance();
  /// Recomputes everything from the graph's current phases at layer 0.
  void reset();

 private:
  struct State {
    CVector before;   // state entering the current layer
    CVector current;  // state after the current layer
    CMatrix after_t;  // rows of D·(later layers) for the outputs, transposed: dim × |outputs|
  };
  kernels::Mat2 block(std::size_t v, const WavelengthSpec& wl) const;
  void refresh_current(std::size_t p, std::size_t v);

  CircuitGraph* g_;
  std::vector<Probe> probes_;
  std::vector<State> states_;
  std::size_t layer_ = 0;
};

struct SequentialOptions {
  MeritMode merit = MeritMode::mean;
  std::size_t grid_points = 64;
  bool golden_refine = true;
  std::vector<WavelengthSpec> wavelengths{WavelengthSpec{}};
};

struct SweepResult {
  double merit_before = 0.0;
  double merit_after = 0.0;
  std::vector<double> probabilities;  ///< per probe (pair-major, wavelength-minor)
  std::size_t phases_tuned = 0;
  std::size_t evaluations = 0;
};

/// Probes for every pair at every wavelength, pair-major.
std::vector<Probe> make_probes(const CircuitGraph& g, const std::vector<ModePair>& pairs,
                               const std::vector<WavelengthSpec>& wavelengths);

/// One sweep over the given cells in light-propagation order. Each phase is
/// set to the best of a uniform grid on [0, 2π), refined by golden-section
/// search, and kept only if the combined merit does not drop.
SweepResult update_sequential(CircuitGraph& g, const std::vector<ModePair>& pairs,
                              std::span<const std::size_t> cells, const SequentialOptions& options = {});

struct GradientOptions {
  MeritMode merit = MeritMode::mean;
  double learning_rate = 0.1;
  double step = 1e-5;
  std::vector<WavelengthSpec> wavelengths{WavelengthSpec{}};
};

/// One simultaneous central-difference gradient-ascent step on the phases of
/// the given cells.
SweepResult update_gradient(CircuitGraph& g, const std::vector<ModePair>& pairs,
                            std::span<const std::size_t> cells, const GradientOptions& options = {});

/// Combined merit of the pairs on the current circuit.
double evaluate_merit(const CircuitGraph& g, const std::vector<ModePair>& pairs, MeritMode mode,
                      const std::vector<WavelengthSpec>& wavelengths = {WavelengthSpec{}});

}  // namespace qps
