#include "qps/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <future>
#include <numeric>
#include <thread>

#include "qps/ecm.hpp"
#include "qps/training.hpp"

namespace qps {

Rng derive_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

// ---------------------------------------------------------------------------

double GsoRecord::max_competitor() const {
  double m = 0.0;
  for (double p : row_competitors) m = std::max(m, p);
  for (double p : column_competitors) m = std::max(m, p);
  return m;
}

namespace {

GsoRecord gso_record(std::size_t step, const UnitaryMatrix& u, std::size_t s, std::size_t a) {
  GsoRecord r;
  r.step = step;
  const CMatrix& m = u.matrix();
  const auto n = static_cast<std::size_t>(m.rows());
  const auto at = [&](std::size_t i, std::size_t j) {
    return std::norm(m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
  };
  r.p_sa = at(a, s);
  for (std::size_t j = 0; j < n; ++j)
    if (j != s) r.row_competitors.push_back(at(a, j));
  for (std::size_t i = 0; i < n; ++i)
    if (i != a) r.column_competitors.push_back(at(i, s));
  r.defect = u.unitarity_defect();
  return r;
}

}  // namespace

GsoLog gso_curve(std::size_t dim, double alpha, std::size_t steps, std::uint64_t seed, std::size_t s,
                 std::size_t a) {
  if (dim < 2) throw DomainError("GSO curve needs dim >= 2");
  if (s >= dim || a >= dim) throw LookupError("GSO pair out of range");
  GsoLog log;
  log.dim = dim;
  log.s = s;
  log.a = a;
  log.alpha = alpha;
  log.seed = seed;
  Rng rng(seed);
  UnitaryMatrix u = UnitaryMatrix::assume_unitary(haar_unitary(dim, rng));
  for (std::size_t t = 0; t <= steps; ++t) {
    if (t > 0) u = gso_update(u, s, a, alpha);
    auto rec = gso_record(t, u, s, a);
    log.max_defect = std::max(log.max_defect, rec.defect);
    if (!log.converged_step && rec.p_sa > 0.99 && rec.max_competitor() < 0.01) log.converged_step = t;
    log.records.push_back(std::move(rec));
  }
  log.final_unitary = u.matrix();
  return log;
}

// ---------------------------------------------------------------------------

DiamondTrainResult train_causal_diamond(CircuitLayout start, const std::vector<ModePair>& pairs,
                                        const DiamondTrainConfig& config) {
  CircuitGraph g(std::move(start));
  const auto cells = tunable_cells(g, pairs, config.tunable);
  SequentialOptions opts;
  opts.merit = config.merit;
  opts.grid_points = config.grid_points;
  opts.wavelengths = config.wavelengths;

  DiamondTrainLog log;
  log.tuned_cells = cells.size();
  const auto probes = make_probes(g, pairs, config.wavelengths);
  std::vector<double> p0;
  for (const auto& pr : probes) p0.push_back(probe_probability(g, pr));
  log.probabilities.push_back(p0);
  log.merit.push_back(evaluate_merit(g, pairs, config.merit, config.wavelengths));

  const auto reached = [&](const std::vector<double>& p) {
    return std::all_of(p.begin(), p.end(), [&](double x) { return x > config.target; });
  };
  if (reached(p0)) log.converged_sweep = 0;
  for (std::size_t sweep = 1; sweep <= config.max_sweeps; ++sweep) {
    if (log.converged_sweep && config.stop_at_target) break;
    auto r = update_sequential(g, pairs, cells, opts);
    log.probabilities.push_back(r.probabilities);
    log.merit.push_back(r.merit_after);
    if (!log.converged_sweep && reached(r.probabilities)) log.converged_sweep = sweep;
  }
  return {g.layout(), std::move(log)};
}

std::vector<ModePair> four_pair_task() {
  return {ModePair::adjacent(0, 1), ModePair::adjacent(1, 3), ModePair::adjacent(3, 4), ModePair::adjacent(5, 0)};
}

// ---------------------------------------------------------------------------

std::vector<FidelityPoint> wavelength_fidelity_study(const std::vector<std::size_t>& dims,
                                                     const std::vector<double>& deltas, std::size_t samples,
                                                     std::uint64_t seed) {
  std::vector<FidelityPoint> out;
  for (std::size_t dim : dims) {
    Rng rng = derive_rng(seed, dim);
    std::vector<std::vector<double>> f(deltas.size());
    for (std::size_t k = 0; k < samples; ++k) {
      const auto mesh = random_square_mesh(dim, rng);
      const auto u0 = wavelength_unitary(mesh, WavelengthSpec{});
      for (std::size_t d = 0; d < deltas.size(); ++d) {
        const auto u1 = wavelength_unitary(mesh, WavelengthSpec{1.0 + deltas[d], 1.0});
        f[d].push_back(gate_fidelity(u0.matrix(), u1.matrix()));
      }
    }
    for (std::size_t d = 0; d < deltas.size(); ++d) {
      FidelityPoint pt;
      pt.dim = dim;
      pt.delta = deltas[d];
      const double n = static_cast<double>(f[d].size());
      pt.mean = std::accumulate(f[d].begin(), f[d].end(), 0.0) / n;
      double var = 0.0;
      for (double x : f[d]) var += (x - pt.mean) * (x - pt.mean);
      pt.stddev = n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
      out.push_back(pt);
    }
  }
  return out;
}

std::vector<WavelengthSpec> wavelength_triplet(double delta) {
  return {WavelengthSpec{1.0 - delta, 1.0}, WavelengthSpec{1.0, 1.0}, WavelengthSpec{1.0 + delta, 1.0}};
}

std::vector<ModePair> multiwavelength_pairs() {
  return {ModePair::adjacent(0, 1), ModePair::adjacent(1, 3), ModePair::adjacent(2, 4), ModePair::adjacent(4, 0)};
}

DiamondTrainResult multiwavelength_train(const MeshParameters& mesh, const std::vector<ModePair>& pairs,
                                         const std::vector<WavelengthSpec>& lambdas, DiamondTrainConfig config) {
  config.wavelengths = lambdas;
  config.merit = MeritMode::geometric_mean;
  return train_causal_diamond(CircuitLayout::from_mesh(mesh), pairs, config);
}

// ---------------------------------------------------------------------------
// Transfer scenario

std::size_t percept_index(const PerceptValues& v) {
  for (std::size_t x : v)
    if (x >= kValues) throw DomainError("observable value outside {0,1,2}");
  return 9 * v[0] + 3 * v[1] + v[2];
}

PerceptValues percept_values(std::size_t index) {
  if (index >= kPercepts) throw LookupError("percept index out of range");
  return {index / 9, (index / 3) % 3, index % 3};
}

CVector middle_target_state(const PerceptValues& v) {
  percept_index(v);
  CVector psi = CVector::Zero(kMiddleModes);
  for (std::size_t j = 0; j < kObservables; ++j)
    psi(static_cast<Eigen::Index>(middle_mode(j, v[j]))) = 1.0 / std::sqrt(3.0);
  return psi;
}

std::string TransferTask::name() const {
  return "O" + std::to_string(obs_a) + "=" + std::to_string(val_a) + ",O" + std::to_string(obs_b) + "=" +
         std::to_string(val_b);
}

std::vector<TransferTask> transfer_tasks() {
  std::vector<TransferTask> out;
  for (std::size_t a = 0; a < kObservables; ++a)
    for (std::size_t b = a + 1; b < kObservables; ++b)
      for (std::size_t va = 0; va < kValues; ++va)
        for (std::size_t vb = 0; vb < kValues; ++vb) out.push_back({a, b, va, vb});
  return out;
}

namespace {

double task_accuracy(const TransferTask& task, const std::vector<double>& p_yes, double yes_weight) {
  if (p_yes.size() != kPercepts) throw StructuralError("need one yes-probability per percept");
  double num = 0.0, den = 0.0;
  for (std::size_t s = 0; s < kPercepts; ++s) {
    const bool yes = task.answer(s);
    const double w = yes ? yes_weight : 1.0;
    num += w * (yes ? p_yes[s] : 1.0 - p_yes[s]);
    den += w;
  }
  return num / den;
}

}  // namespace

double weighted_accuracy(const TransferTask& task, const std::vector<double>& p_yes) {
  return task_accuracy(task, p_yes, kYesWeight);
}

double raw_accuracy(const TransferTask& task, const std::vector<double>& p_yes) {
  return task_accuracy(task, p_yes, 1.0);
}

// Binary tree ---------------------------------------------------------------

namespace {

struct TreeNode {
  std::size_t lo, hi;      // leaves covered
  int top = -1, bottom = -1;  // child node index, −1 for a leaf
};

std::vector<TreeNode> build_tree() {
  std::vector<TreeNode> nodes;
  std::function<int(std::size_t, std::size_t)> make = [&](std::size_t lo, std::size_t hi) -> int {
    if (hi - lo == 1) return -1;
    const int id = static_cast<int>(nodes.size());
    nodes.push_back({lo, hi});
    const std::size_t mid = lo + (hi - lo + 1) / 2;
    const int t = make(lo, mid);
    const int b = make(mid, hi);
    nodes[static_cast<std::size_t>(id)].top = t;
    nodes[static_cast<std::size_t>(id)].bottom = b;
    return id;
  };
  make(0, BinaryTree::kLeaves);
  return nodes;
}

const std::vector<TreeNode>& tree_nodes() {
  static const std::vector<TreeNode> nodes = build_tree();
  return nodes;
}

}  // namespace

BinaryTree::BinaryTree(double initial_phase) : phases_(kPhases, initial_phase) {}

CVector BinaryTree::amplitudes() const { return amplitudes(phases_); }

CVector BinaryTree::amplitudes(const std::vector<double>& phases) {
  if (phases.size() != kPhases) throw StructuralError("binary tree needs 16 phases");
  const auto& nodes = tree_nodes();
  CVector out = CVector::Zero(kLeaves);
  std::function<void(std::size_t, cplx)> go = [&](std::size_t id, cplx amp) {
    const auto& n = nodes[id];
    const auto m = mzi_block(phases[2 * id], phases[2 * id + 1]);
    const cplx top = m.m00 * amp, bottom = m.m10 * amp;
    const std::size_t mid = n.lo + (n.hi - n.lo + 1) / 2;
    if (n.top < 0) out(static_cast<Eigen::Index>(n.lo)) = top;
    else go(static_cast<std::size_t>(n.top), top);
    if (n.bottom < 0) out(static_cast<Eigen::Index>(mid)) = bottom;
    else go(static_cast<std::size_t>(n.bottom), bottom);
  };
  go(0, cplx(1.0, 0.0));
  return out;
}

std::size_t BinaryTree::depth() {
  const auto& nodes = tree_nodes();
  std::function<std::size_t(int)> d = [&](int id) -> std::size_t {
    if (id < 0) return 0;
    const auto& n = nodes[static_cast<std::size_t>(id)];
    return 1 + std::max(d(n.top), d(n.bottom));
  };
  return d(0);
}

// Stage 1 -------------------------------------------------------------------

std::array<double, kObservables> observable_marginals(const CVector& middle) {
  std::array<double, kObservables> p{};
  for (std::size_t j = 0; j < kObservables; ++j)
    for (std::size_t v = 0; v < kValues; ++v) p[j] += std::norm(middle(static_cast<Eigen::Index>(middle_mode(j, v))));
  return p;
}

double shannon_term(const CVector& middle) {
  double total = std::log(3.0);
  for (double p : observable_marginals(middle))
    if (p > 0.0) total += p * std::log(p);
  return total;
}

double phase_term(const CVector& middle) {
  double total = 0.0;
  for (Eigen::Index m = 0; m < middle.size(); ++m) total += std::abs(std::arg(middle(m)));
  return total;
}

double weighted_phase(const CVector& middle) {
  double total = 0.0;
  for (Eigen::Index m = 0; m < middle.size(); ++m) total += std::norm(middle(m)) * std::abs(std::arg(middle(m)));
  return total;
}

double target_overlap(std::size_t percept, const CVector& middle) {
  return std::norm(middle_target_state(percept_values(percept)).dot(middle));
}

namespace {

bool correct_middle(std::size_t s, std::size_t m) {
  const auto v = percept_values(s);
  return v[m / 3] == m % 3;
}

// Loss of one tree over its replayed entries: Σ KL + n·(w_S·L_Shannon + w_φ·L_phase).
double tree_loss(const std::vector<double>& phases, const std::vector<std::pair<std::size_t, double>>& targets,
                 const MiddleLayerConfig& cfg) {
  const CVector amp = BinaryTree::amplitudes(phases);
  double total = 0.0;
  for (const auto& [m, t] : targets)
    total += distance(Distance::kl_binary, std::norm(amp(static_cast<Eigen::Index>(m))), t);
  const double n = static_cast<double>(targets.size());
  total += n * (cfg.shannon_weight * shannon_term(amp) + cfg.phase_weight * (cfg.weighted_phase_penalty ? weighted_phase(amp) + cfg.phase_floor * phase_term(amp)
                                                                 : phase_term(amp)));
  return total;
}

}  // namespace

MiddleLayerResult train_middle_layer(std::vector<BinaryTree> trees, const MiddleLayerConfig& config, Rng& rng) {
  if (trees.size() != kPercepts) throw StructuralError("need one tree per percept");
  MiddleLayerResult res;
  StepDownSchedule schedule(config.learning_rate, config.reduced_learning_rate, config.step_down_accuracy);
  AdamState adam;
  std::size_t streak = 0;

  std::vector<CVector> amps(kPercepts);
  const auto refresh = [&] {
    for (std::size_t s = 0; s < kPercepts; ++s) amps[s] = trees[s].amplitudes();
  };
  refresh();

  for (std::size_t flush = 1; flush <= config.max_flushes; ++flush) {
    // Collect a batch with the current trees.
    std::vector<std::vector<std::pair<std::size_t, double>>> targets(kPercepts);
    std::size_t correct = 0;
    std::vector<double> w(kMiddleModes);
    for (std::size_t k = 0; k < config.batch; ++k) {
      const std::size_t s = uniform_index(rng, kPercepts);
      for (std::size_t m = 0; m < kMiddleModes; ++m) w[m] = std::norm(amps[s](static_cast<Eigen::Index>(m)));
      const std::size_t m = sample_discrete(rng, w);
      const bool ok = correct_middle(s, m);
      correct += ok ? 1 : 0;
      const double r = ok ? config.reward : -config.reward;
      targets[s].emplace_back(m, simplified_target(w[m], 0.0, 1.0, r, kMiddleModes));
    }
    const double batch_acc = static_cast<double>(correct) / static_cast<double>(config.batch);
    const double lr = schedule.observe(batch_acc);

    // Optimizer steps on the summed loss; trees are independent so the
    // gradient is assembled tree by tree.
    std::vector<double> x;
    x.reserve(kPercepts * BinaryTree::kPhases);
    for (const auto& t : trees) x.insert(x.end(), t.phases().begin(), t.phases().end());
    double loss = 0.0;
    for (std::size_t step = 0; step < config.optimizer_steps; ++step) {
      std::vector<double> grad(x.size(), 0.0);
      loss = 0.0;
      for (std::size_t s = 0; s < kPercepts; ++s) {
        if (targets[s].empty()) continue;
        std::vector<double> xs(x.begin() + static_cast<std::ptrdiff_t>(s * BinaryTree::kPhases),
                               x.begin() + static_cast<std::ptrdiff_t>((s + 1) * BinaryTree::kPhases));
        const Objective f = [&](std::span<const double> p) {
          return tree_loss(std::vector<double>(p.begin(), p.end()), targets[s], config);
        };
        const auto g = gradient(f, xs);
        std::copy(g.begin(), g.end(), grad.begin() + static_cast<std::ptrdiff_t>(s * BinaryTree::kPhases));
        loss += tree_loss(xs, targets[s], config);
      }
      adam_step(x, grad, adam, lr);
    }
    for (std::size_t s = 0; s < kPercepts; ++s)
      std::copy(x.begin() + static_cast<std::ptrdiff_t>(s * BinaryTree::kPhases),
                x.begin() + static_cast<std::ptrdiff_t>((s + 1) * BinaryTree::kPhases), trees[s].phases().begin());
    refresh();

    MiddleLayerRecord rec;
    rec.flush = flush;
    rec.batch_accuracy = batch_acc;
    rec.loss = loss;
    rec.learning_rate = lr;
    rec.worst_accuracy = 1.0;
    for (std::size_t s = 0; s < kPercepts; ++s) {
      double good = 0.0;
      for (std::size_t m = 0; m < kMiddleModes; ++m)
        if (correct_middle(s, m)) good += std::norm(amps[s](static_cast<Eigen::Index>(m)));
      rec.expected_accuracy += good / kPercepts;
      rec.worst_accuracy = std::min(rec.worst_accuracy, good);
      rec.weighted_phase = std::max(rec.weighted_phase, weighted_phase(amps[s]));
    }
    res.log.push_back(rec);

    streak = rec.worst_accuracy > config.stop_accuracy ? streak + 1 : 0;
    if (streak >= config.stop_rounds && rec.weighted_phase < config.stop_phase) {
      res.converged = true;
      break;
    }
  }
  res.trees = std::move(trees);
  return res;
}

// Stage 2 -------------------------------------------------------------------

namespace {

RealMatrix task_policy(const CMatrix& u, const std::vector<CVector>& middle, const TaskLayerConfig& cfg) {
  RealMatrix p(static_cast<Eigen::Index>(middle.size()), 2);
  const auto yes = static_cast<Eigen::Index>(cfg.yes_mode);
  const auto no = static_cast<Eigen::Index>(cfg.no_mode);
  for (std::size_t s = 0; s < middle.size(); ++s) {
    const double py = std::norm((u.row(yes) * middle[s]).value());
    const double pn = std::norm((u.row(no) * middle[s]).value());
    const double acc = py + pn;
    const auto row = static_cast<Eigen::Index>(s);
    if (acc < QuantumAgent::kMinAcceptance) {
      p(row, 0) = p(row, 1) = 0.5;
    } else {
      p(row, 0) = py / acc;
      p(row, 1) = pn / acc;
    }
  }
  return p;
}

std::vector<double> cell_phases(const MeshParameters& mesh) {
  std::vector<double> x;
  for (const auto& c : mesh.cells) {
    x.push_back(c.theta1);
    x.push_back(c.theta2);
  }
  return x;
}

void set_cell_phases(MeshParameters& mesh, std::span<const double> x) {
  for (std::size_t i = 0; i < mesh.cells.size(); ++i) {
    mesh.cells[i].theta1 = x[2 * i];
    mesh.cells[i].theta2 = x[2 * i + 1];
  }
}

}  // namespace

std::vector<double> yes_probabilities(const MeshParameters& mesh, const std::vector<CVector>& middle,
                                      const TaskLayerConfig& config) {
  const RealMatrix p = task_policy(build_unitary(mesh).matrix(), middle, config);
  return std::vector<double>(p.col(0).data(), p.col(0).data() + p.rows());
}

TaskLayerResult train_task_layer(const std::vector<CVector>& middle, const TransferTask& task,
                                 const TaskLayerConfig& config, Rng& rng) {
  if (middle.size() != kPercepts) throw StructuralError("need one middle state per percept");
  if (config.yes_mode == config.no_mode || config.yes_mode >= kMiddleModes || config.no_mode >= kMiddleModes)
    throw DomainError("yes/no modes must be distinct modes of the task mesh");
  TaskLayerResult res;
  res.task = task;
  MeshParameters mesh = config.initial_phase ? square_mesh(kMiddleModes, *config.initial_phase, *config.initial_phase)
                                             : random_square_mesh(kMiddleModes, rng);
  std::fill(mesh.output_phases.begin(), mesh.output_phases.end(), 0.0);

  TrainConfig tc;
  tc.gamma = 0.0;
  tc.eta = 1.0;
  tc.distance = Distance::kl_binary;
  tc.action_count = 2;

  StepDownSchedule schedule(config.learning_rate, config.reduced_learning_rate, config.step_down_accuracy);
  AdamState adam;
  ReplayBuffer buffer(config.batch);
  RealMatrix policy = task_policy(build_unitary(mesh).matrix(), middle, config);
  std::size_t correct = 0;

  const auto record = [&](std::size_t round, double loss) {
    std::vector<double> py(policy.col(0).data(), policy.col(0).data() + policy.rows());
    res.log.push_back({round, weighted_accuracy(task, py), raw_accuracy(task, py), loss});
  };
  record(0, 0.0);

  for (std::size_t round = 1; round <= config.rounds; ++round) {
    const std::size_t s = uniform_index(rng, kPercepts);
    const auto srow = static_cast<Eigen::Index>(s);
    const std::size_t a = uniform01(rng) < policy(srow, 0) ? 0 : 1;
    const bool truth = task.answer(s);
    const bool ok = (a == 0) == truth;
    correct += ok ? 1 : 0;
    double r = ok ? config.reward : -config.reward;
    if (truth) r *= config.yes_factor;
    ReplayEntry e;
    e.s = s;
    e.a = a;
    e.reward = r;
    e.glow = 1.0;
    e.p0 = policy(srow, static_cast<Eigen::Index>(a));
    if (!buffer.push(e)) continue;

    const double lr = schedule.observe(static_cast<double>(correct) / static_cast<double>(buffer.size()));
    correct = 0;
    std::vector<double> x = cell_phases(mesh);
    MeshParameters work = mesh;
    const Objective f = [&](std::span<const double> p) {
      set_cell_phases(work, p);
      return loss_simplified(task_policy(build_unitary(work).matrix(), middle, config), buffer.entries(), tc);
    };
    for (std::size_t step = 0; step < config.optimizer_steps; ++step) adam_step(x, gradient(f, x), adam, lr);
    const double loss = f(x);
    set_cell_phases(mesh, x);
    buffer.clear();
    policy = task_policy(build_unitary(mesh).matrix(), middle, config);
    record(round, loss);
  }
  res.mesh = mesh;
  const auto py = yes_probabilities(mesh, middle, config);
  res.weighted_accuracy = weighted_accuracy(task, py);
  res.raw_accuracy = raw_accuracy(task, py);
  res.passed = res.weighted_accuracy >= config.pass_threshold;
  return res;
}

// Classical baseline --------------------------------------------------------

namespace {

std::string percept_label(std::size_t s) {
  const auto v = percept_values(s);
  return "s" + std::to_string(v[0]) + std::to_string(v[1]) + std::to_string(v[2]);
}

std::string middle_label(std::size_t m) { return "O" + std::to_string(m / 3) + "=" + std::to_string(m % 3); }

}  // namespace

EcmGraph transfer_ecm() {
  EcmGraph g;
  for (std::size_t s = 0; s < kPercepts; ++s) g.add_vertex(percept_label(s), ClipTag::percept);
  for (std::size_t m = 0; m < kMiddleModes; ++m) g.add_vertex(middle_label(m), ClipTag::intermediate);
  g.add_vertex("yes", ClipTag::action);
  g.add_vertex("no", ClipTag::action);
  for (std::size_t s = 0; s < kPercepts; ++s) {
    const auto v = percept_values(s);
    for (std::size_t j = 0; j < kObservables; ++j) g.add_edge(percept_label(s), middle_label(middle_mode(j, v[j])));
  }
  for (std::size_t m = 0; m < kMiddleModes; ++m) {
    g.add_edge(middle_label(m), "yes");
    g.add_edge(middle_label(m), "no");
  }
  g.validate();
  return g;
}

ClassicalTransferResult classical_transfer_baseline(const TransferTask& task, const ClassicalTransferConfig& config,
                                                    Rng& rng) {
  ClassicalAgent agent(transfer_ecm(), config.gamma, config.eta);
  const auto& g = agent.graph();
  const std::size_t yes = g.index_of("yes");
  std::vector<std::size_t> percepts(kPercepts);
  for (std::size_t s = 0; s < kPercepts; ++s) percepts[s] = g.index_of(percept_label(s));

  for (std::size_t t = 0; t < config.training_rounds; ++t) {
    const std::size_t s = uniform_index(rng, kPercepts);
    const auto walk = agent.walk(percepts[s], rng);
    const bool ok = (walk.action == yes) == task.answer(s);
    // The middle layer stays frozen: only the middle → action edge learns.
    const std::vector<std::size_t> tail(walk.path.end() - 2, walk.path.end());
    agent.update(tail, ok ? config.reward : 0.0);
  }

  ClassicalTransferResult res;
  res.task = task;
  std::size_t hits = 0;
  for (std::size_t t = 0; t < config.evaluation_rounds; ++t) {
    const std::size_t s = uniform_index(rng, kPercepts);
    const auto walk = agent.walk(percepts[s], rng);
    hits += ((walk.action == yes) == task.answer(s)) ? 1 : 0;
  }
  const double n = static_cast<double>(config.evaluation_rounds);
  res.raw_accuracy = static_cast<double>(hits) / n;
  res.sigma = std::sqrt(res.raw_accuracy * (1.0 - res.raw_accuracy) / n);

  std::vector<double> p_yes(kPercepts, 0.0);
  for (std::size_t s = 0; s < kPercepts; ++s) {
    const auto first = agent.transition_probabilities(percepts[s]);
    const auto& mids = g.children(percepts[s]);
    for (std::size_t k = 0; k < mids.size(); ++k) {
      const auto second = agent.transition_probabilities(mids[k]);
      const auto& acts = g.children(mids[k]);
      for (std::size_t q = 0; q < acts.size(); ++q)
        if (acts[q] == yes) p_yes[s] += first[k] * second[q];
    }
  }
  res.exact_raw_accuracy = raw_accuracy(task, p_yes);
  res.exact_weighted_accuracy = weighted_accuracy(task, p_yes);
  return res;
}

// Full run ------------------------------------------------------------------

TransferConfig TransferConfig::desk_scale() { return {}; }

TransferConfig TransferConfig::paper_scale() {
  TransferConfig c;
  c.task.rounds = 40000;
  c.task.pass_threshold = 0.97;
  c.classical.training_rounds = 40000;
  return c;
}

TransferResult run_transfer(const TransferConfig& config, std::uint64_t seed) {
  TransferResult res;
  res.seed = seed;
  Rng stage1 = derive_rng(seed, 0);
  std::vector<BinaryTree> trees(kPercepts);
  res.middle = train_middle_layer(std::move(trees), config.middle, stage1);

  std::vector<CVector> middle;
  for (const auto& t : res.middle.trees) middle.push_back(t.amplitudes());

  const auto all = transfer_tasks();
  std::vector<std::size_t> idx = config.tasks;
  if (idx.empty()) {
    idx.resize(all.size());
    std::iota(idx.begin(), idx.end(), 0);
  }
  for (std::size_t i : idx)
    if (i >= all.size()) throw LookupError("task index out of range");

  res.tasks.resize(idx.size());
  res.classical.resize(idx.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t k = next++; k < idx.size(); k = next++) {
      const std::size_t i = idx[k];
      Rng q = derive_rng(seed, 1 + i);
      res.tasks[k] = train_task_layer(middle, all[i], config.task, q);
      Rng c = derive_rng(seed, 1001 + i);
      res.classical[k] = classical_transfer_baseline(all[i], config.classical, c);
    }
  };
  unsigned n = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  n = static_cast<unsigned>(std::min<std::size_t>(n, idx.size()));
  std::vector<std::future<void>> jobs;
  for (unsigned t = 0; t < n; ++t) jobs.push_back(std::async(std::launch::async, worker));
  for (auto& j : jobs) j.get();
  return res;
}

}  // namespace qps
