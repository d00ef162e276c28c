#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qps/causal_diamond.hpp"
#include "qps/circuit.hpp"
#include "qps/classical_ps.hpp"
#include "qps/mesh.hpp"
#include "qps/random.hpp"

namespace qps {

/// Generator for sub-run `stream` of a seeded run; independent of the order
/// in which sub-runs execute.
Rng derive_rng(std::uint64_t seed, std::uint64_t stream);

// ---------------------------------------------------------------------------
// GSO learning curve

struct GsoRecord {
  std::size_t step = 0;
  double p_sa = 0.0;
  std::vector<double> row_competitors;     ///< |U_aj|², j ≠ s
  std::vector<double> column_competitors;  ///< |U_is|², i ≠ a
  double defect = 0.0;

  double max_competitor() const;
};

struct GsoLog {
  std::size_t dim = 0, s = 0, a = 0;
  double alpha = 1.0;
  std::uint64_t seed = 0;
  std::vector<GsoRecord> records;  ///< step 0 is the Haar start
  std::optional<std::size_t> converged_step;  ///< first step with p_sa > 0.99 and competitors < 0.01
  double max_defect = 0.0;
  CMatrix final_unitary;
};

/// Repeated gso_update on a single rewarded pair starting from a Haar
/// unitary.
GsoLog gso_curve(std::size_t dim, double alpha, std::size_t steps, std::uint64_t seed, std::size_t s = 0,
                 std::size_t a = 0);

// ---------------------------------------------------------------------------
// Causal-diamond training

struct DiamondTrainConfig {
  TunableSet tunable = TunableSet::leaking;
  MeritMode merit = MeritMode::geometric_mean;
  std::size_t max_sweeps = 200;
  double target = 0.9;       ///< every probe above this counts as converged
  bool stop_at_target = true;
  std::vector<WavelengthSpec> wavelengths{WavelengthSpec{}};
  std::size_t grid_points = 64;
};

struct DiamondTrainLog {
  std::vector<std::vector<double>> probabilities;  ///< per sweep (row 0 before training), per probe
  std::vector<double> merit;
  std::optional<std::size_t> converged_sweep;
  std::size_t tuned_cells = 0;
};

struct DiamondTrainResult {
  CircuitLayout layout;
  DiamondTrainLog log;
};

/// Sequential causal-diamond sweeps until every probe exceeds the target or
/// the sweep budget runs out.
DiamondTrainResult train_causal_diamond(CircuitLayout start, const std::vector<ModePair>& pairs,
                                        const DiamondTrainConfig& config);

/// Four rewarded pairs on a 12-mode square mesh, each percept and action on
/// two adjacent modes.
std::vector<ModePair> four_pair_task();

// ---------------------------------------------------------------------------
// Multi-wavelength

struct FidelityPoint {
  std::size_t dim = 0;
  double delta = 0.0;  ///< λ − λ_nominal in units of λ_nominal
  double mean = 0.0;
  double stddev = 0.0;
};

/// Mean gate fidelity between U(λ_nom) and U(λ_nom + Δ) of square meshes
/// with uniformly random phases, `samples` meshes per point.
std::vector<FidelityPoint> wavelength_fidelity_study(const std::vector<std::size_t>& dims,
                                                     const std::vector<double>& deltas, std::size_t samples,
                                                     std::uint64_t seed);

/// Three wavelengths λ_nom·(1 − δ), λ_nom, λ_nom·(1 + δ).
std::vector<WavelengthSpec> wavelength_triplet(double delta);

/// Four rewarded adjacent-mode pairs on a 10-mode mesh.
std::vector<ModePair> multiwavelength_pairs();

/// Causal-diamond training of one shared phase configuration against the
/// geometric mean over all pairs and wavelengths.
DiamondTrainResult multiwavelength_train(const MeshParameters& mesh, const std::vector<ModePair>& pairs,
                                         const std::vector<WavelengthSpec>& lambdas, DiamondTrainConfig config);

// ---------------------------------------------------------------------------
// Transfer-learning scenario

inline constexpr std::size_t kObservables = 3;
inline constexpr std::size_t kValues = 3;
inline constexpr std::size_t kPercepts = 27;
inline constexpr std::size_t kMiddleModes = 9;

using PerceptValues = std::array<std::size_t, kObservables>;

/// 9·v0 + 3·v1 + v2.
std::size_t percept_index(const PerceptValues& v);
PerceptValues percept_values(std::size_t index);

/// Middle mode of observable j taking value v.
inline std::size_t middle_mode(std::size_t j, std::size_t v) { return 3 * j + v; }

/// (|v0⟩ + |3+v1⟩ + |6+v2⟩)/√3; DomainError for values outside {0,1,2}.
CVector middle_target_state(const PerceptValues& v);

/// "Does observable obs_a have value val_a and observable obs_b value val_b?"
struct TransferTask {
  std::size_t obs_a = 0, obs_b = 1;
  std::size_t val_a = 0, val_b = 0;

  bool answer(const PerceptValues& v) const { return v[obs_a] == val_a && v[obs_b] == val_b; }
  bool answer(std::size_t percept) const { return answer(percept_values(percept)); }
  std::string name() const;
};

/// All 27 two-observable tasks, ordered by observable pair then values.
std::vector<TransferTask> transfer_tasks();

inline constexpr double kYesWeight = 8.0;

/// Σ_s w_s·P(correct | s) / Σ_s w_s over the 27 percepts, w = 8 on
/// yes-percepts; p_yes[s] is the probability of answering yes.
double weighted_accuracy(const TransferTask& task, const std::vector<double>& p_yes);
/// Same with w = 1.
double raw_accuracy(const TransferTask& task, const std::vector<double>& p_yes);

/// Balanced splitter tree with 9 leaves: a node over n leaves sends its top
/// output to a subtree over ⌈n/2⌉ leaves and its bottom output to the rest.
/// Each node is an MZI with phases (θ1, θ2) fed on its top port. Leaves are
/// numbered left to right.
class BinaryTree {
 public:
  static constexpr std::size_t kLeaves = kMiddleModes;
  static constexpr std::size_t kNodes = kLeaves - 1;
  static constexpr std::size_t kPhases = 2 * kNodes;

  explicit BinaryTree(double initial_phase = kPi / 4);

  std::vector<double>& phases() noexcept { return phases_; }
  const std::vector<double>& phases() const noexcept { return phases_; }

  /// Leaf amplitudes for a photon injected at the root; unit norm.
  CVector amplitudes() const;
  static CVector amplitudes(const std::vector<double>& phases);
  /// Number of MZIs on the longest root-to-leaf path.
  static std::size_t depth();

 private:
  std::vector<double> phases_;
};

struct MiddleLayerConfig {
  std::size_t batch = 600;
  std::size_t optimizer_steps = 10;
  double reward = 0.1;
  double shannon_weight = 10.0;
  double phase_weight = 1.0;
  /// Penalize Σ_m (p_sm + phase_floor)·|Φ_sm| instead of Σ_m |Φ_sm|.
  bool weighted_phase_penalty = true;
  double phase_floor = 0.05;
  double learning_rate = 0.01;
  double reduced_learning_rate = 0.001;
  double step_down_accuracy = 0.95;
  double stop_accuracy = 0.99;
  std::size_t stop_rounds = 10;
  double stop_phase = 0.1;
  std::size_t max_flushes = 10000;
};

struct MiddleLayerRecord {
  std::size_t flush = 0;
  double batch_accuracy = 0.0;
  double expected_accuracy = 0.0;  ///< mean over percepts of the mass on correct modes
  double worst_accuracy = 0.0;     ///< min over percepts of the mass on correct modes
  double weighted_phase = 0.0;     ///< max over percepts of Σ_m p_sm·|Φ_sm|
  double loss = 0.0;
  double learning_rate = 0.0;
};

struct MiddleLayerResult {
  std::vector<BinaryTree> trees;
  std::vector<MiddleLayerRecord> log;
  bool converged = false;
};

/// log(3) + Σ_j p_j log p_j of the observable marginals of a middle state.
double shannon_term(const CVector& middle);
/// Σ_m |arg a_m|.
double phase_term(const CVector& middle);
/// Σ_m |a_m|²·|arg a_m|.
double weighted_phase(const CVector& middle);
/// Marginal probability of each observable.
std::array<double, kObservables> observable_marginals(const CVector& middle);
/// |⟨target(s)|middle⟩|².
double target_overlap(std::size_t percept, const CVector& middle);

/// Stage 1: trains 27 trees with the PS, Shannon and phase losses on
/// replayed middle-layer measurements. The learning rate steps down on the
/// sampled batch accuracy. Training stops after `stop_rounds` consecutive
/// flushes whose worst per-percept accuracy exceeds `stop_accuracy` while
/// the weighted phase is below `stop_phase`; otherwise it returns after
/// `max_flushes` with converged = false.
MiddleLayerResult train_middle_layer(std::vector<BinaryTree> trees, const MiddleLayerConfig& config, Rng& rng);

struct TaskLayerConfig {
  std::size_t rounds = 8000;
  std::size_t batch = 500;
  std::size_t optimizer_steps = 10;
  double reward = 0.1;
  double yes_factor = kYesWeight;
  double learning_rate = 0.01;
  double reduced_learning_rate = 0.001;
  double step_down_accuracy = 0.95;
  double pass_threshold = 0.95;
  std::size_t yes_mode = 0;
  std::size_t no_mode = 1;
  /// Starting phase of every cell (the trees' π/4 by default); unset means
  /// uniformly random phases.
  std::optional<double> initial_phase = kPi / 4;
};

struct TaskRecord {
  std::size_t round = 0;
  double weighted_accuracy = 0.0;
  double raw_accuracy = 0.0;
  double loss = 0.0;
};

struct TaskLayerResult {
  TransferTask task;
  MeshParameters mesh;
  std::vector<TaskRecord> log;
  double weighted_accuracy = 0.0;
  double raw_accuracy = 0.0;
  bool passed = false;
};

/// Post-selected P(yes | s) of every percept for a task mesh fed with the
/// given middle states.
std::vector<double> yes_probabilities(const MeshParameters& mesh, const std::vector<CVector>& middle,
                                      const TaskLayerConfig& config);

/// Stage 2: trains a fresh 9×9 square mesh on one task with the middle
/// states held fixed.
TaskLayerResult train_task_layer(const std::vector<CVector>& middle, const TransferTask& task,
                                 const TaskLayerConfig& config, Rng& rng);

struct ClassicalTransferConfig {
  std::size_t training_rounds = 8000;
  std::size_t evaluation_rounds = 100000;
  double gamma = 0.0;
  double eta = 1.0;
  double reward = 1.0;
};

struct ClassicalTransferResult {
  TransferTask task;
  double raw_accuracy = 0.0;  ///< Monte-Carlo estimate
  double sigma = 0.0;         ///< its standard error
  double exact_raw_accuracy = 0.0;
  double exact_weighted_accuracy = 0.0;
};

/// Ideal classical ECM of the scenario: 27 percept clips, each wired to its
/// three (observable, value) middle clips, every middle clip wired to the
/// "yes" and "no" action clips.
EcmGraph transfer_ecm();

ClassicalTransferResult classical_transfer_baseline(const TransferTask& task, const ClassicalTransferConfig& config,
                                                    Rng& rng);

struct TransferConfig {
  MiddleLayerConfig middle;
  TaskLayerConfig task;
  ClassicalTransferConfig classical;
  std::vector<std::size_t> tasks;  ///< indices into transfer_tasks(); empty means all
  unsigned threads = 0;            ///< 0 means hardware concurrency

  static TransferConfig desk_scale();
  static TransferConfig paper_scale();
};

struct TransferResult {
  MiddleLayerResult middle;
  std::vector<TaskLayerResult> tasks;
  std::vector<ClassicalTransferResult> classical;
  std::uint64_t seed = 0;
};

/// Stage 1 once, then every selected task (stage 2 and classical baseline)
/// in parallel, each with its own derived generator.
TransferResult run_transfer(const TransferConfig& config, std::uint64_t seed);

}  // namespace qps
