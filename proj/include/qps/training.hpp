#pragma once

#include <functional>
#include <span>
#include <vector>

#include "qps/mesh.hpp"
#include "qps/quantum_agent.hpp"

namespace qps {

enum class Distance { kl_binary, squared_error };

/// KL(target ‖ p) on the binary distributions {t, 1−t} and {p, 1−p}, with p
/// clamped to [1e-12, 1−1e-12]; DomainError when t ∉ [0,1]. The squared
/// error is (p − t)².
double distance(Distance d, double p, double target);

/// 1 − relu(1 − relu(x)): clips to [0, 1].
double cutoff(double x);

/// Target probability of the simplified rule:
/// C(1/|A| + (1−γ)(p⁰ − 1/|A|) + g·r).
double simplified_target(double p0, double gamma, double glow, double reward, std::size_t actions);

struct AnnealingSchedule {
  enum class Kind { constant, exponential };
  Kind kind = Kind::constant;
  double tau = 1.0;  ///< time constant of the exponential schedule

  /// f(t) with f(0) = 1, non-increasing.
  double operator()(double t) const;
};

struct TrainConfig {
  double gamma = 0.0;
  double eta = 1.0;
  double reward_scale = 1.0;  ///< r₀; the effective reward is f(t)·r₀·(raw reward)
  AnnealingSchedule annealing;
  Distance distance = Distance::kl_binary;
  std::size_t action_count = 2;
  double phase_penalty_weight = 0.0;
  double learning_rate = 0.01;
  std::size_t optimizer_steps = 10;
};

/// One observed transition kept for a batched update. Targets are computed
/// from p0 and h0, the agent's values when the entry was recorded.
struct ReplayEntry {
  std::size_t s = 0;
  std::size_t a = 0;
  double reward = 0.0;
  double glow = 1.0;
  double p0 = 0.0;
  double h0 = 0.0;  ///< previous normalizer, used by the exact loss only
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

  /// Returns true when the buffer is full after the push; throws
  /// DomainError when it was already full.
  bool push(const ReplayEntry& e);
  bool full() const noexcept { return entries_.size() >= capacity_; }
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  std::span<const ReplayEntry> entries() const noexcept { return entries_; }
  void clear() { entries_.clear(); }

 private:
  std::size_t capacity_;
  std::vector<ReplayEntry> entries_;
};

/// Σ over entries with glow > 0 of D[p_sa, target]. `policy(s, a)` is the
/// current post-selected probability. An empty batch gives 0.
double loss_simplified(const RealMatrix& policy, std::span<const ReplayEntry> batch, const TrainConfig& config,
                       double time = 0.0);

/// Σ over entries of D[p_sa·h_s − 1, (1−γ)(p⁰h⁰ − 1) + g·R] plus the weighted
/// ℓ¹ norm of the output phases (wrapped to (−π, π]). For kl_binary both
/// sides are divided by h_s so the comparison is between probabilities.
double loss_exact(const RealMatrix& policy, std::span<const double> h, std::span<const ReplayEntry> batch,
                  std::span<const double> output_phases, const TrainConfig& config);

/// Post-selected policy matrix (percepts × actions); rows whose acceptance
/// vanishes are uniform.
RealMatrix policy_matrix(const QuantumAgent& agent);

using Objective = std::function<double(std::span<const double>)>;

/// Central differences with step h; NumericalError carrying the index of the
/// probed parameter when the loss is not finite.
std::vector<double> gradient(const Objective& f, std::span<const double> x, double h = 1e-5);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::vector<double> m, v;
  std::size_t t = 0;
};

/// One descent step; with `wrap` every entry is reduced to [0, 2π).
void adam_step(std::vector<double>& x, std::span<const double> grad, AdamState& state, double lr, bool wrap = true);

/// Learning rate 0.01 that drops to 0.001 for good once the batch accuracy
/// reaches 0.95.
class StepDownSchedule {
 public:
  StepDownSchedule(double initial = 0.01, double reduced = 0.001, double threshold = 0.95)
      : lr_(initial), reduced_(reduced), threshold_(threshold) {}
  double observe(double batch_accuracy) {
    if (batch_accuracy >= threshold_) lr_ = reduced_;
    return lr_;
  }
  double rate() const noexcept { return lr_; }

 private:
  double lr_, reduced_, threshold_;
};

/// Variational parameters of the exact loss: mesh phases plus per-percept
/// normalizers h_s (initialized to |A|).
struct VariationalHandle {
  MeshParameters mesh;
  std::vector<double> h;

  static VariationalHandle for_agent(const QuantumAgent& agent);
};

struct FlushResult {
  double loss_before = 0.0;
  double loss_after = 0.0;
  std::size_t steps = 0;
};

/// Runs config.optimizer_steps Adam steps on the summed simplified loss of
/// the buffer (plus the output-phase penalty), installs the new mesh in the
/// agent and clears the buffer. The agent must have a mesh backend.
FlushResult replay_flush(ReplayBuffer& buffer, QuantumAgent& agent, AdamState& adam, const TrainConfig& config,
                         double lr, double time = 0.0);

/// Same for the exact loss; updates both the mesh and the handle's h_s.
FlushResult replay_flush_exact(ReplayBuffer& buffer, QuantumAgent& agent, VariationalHandle& handle,
                               AdamState& adam, const TrainConfig& config, double lr);

/// Direct update: U_as ← α·U_as, row a renormalized, the other rows
/// re-orthonormalized in ascending order against the rows already fixed.
/// DegenerateError when a row norm falls below 1e-14.
UnitaryMatrix gso_update(const UnitaryMatrix& u, std::size_t s, std::size_t a, double alpha);

/// gso_update followed by recompilation to mesh phases.
MeshParameters gso_update_mesh(const MeshParameters& mesh, std::size_t s, std::size_t a, double alpha);

}  // namespace qps
