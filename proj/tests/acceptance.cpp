// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "qps/causal_diamond.hpp"
#include "qps/ecm.hpp"
#include "qps/experiments.hpp"
#include "qps/mesh.hpp"
#include "qps/quantum_agent.hpp"
#include "qps/training.hpp"

using namespace qps;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <class F>
double time_it(F&& f) {
  const auto t0 = Clock::now();
  f();
  return seconds_since(t0);
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::set<std::size_t> as_set(const std::vector<std::size_t>& v) { return {v.begin(), v.end()}; }

// ---------------------------------------------------------------------------

void ac1(Outcome& o) {
  Rng rng(101);
  double worst = 0.0;
  const double t = time_it([&] {
    for (int k = 0; k < 200; ++k) {
      const std::size_t n = 2 + static_cast<std::size_t>(k) % 15;
      const CMatrix u = haar_unitary(n, rng);
      worst = std::max(worst, (build_unitary(clements_decompose(u)).matrix() - u).norm());
    }
  });
  o.detail << "max roundtrip error " << worst << ", " << t << " s";
  o.require(worst < 1e-9, "roundtrip error");
  o.require(t < 10.0, "runtime");
}

void ac2(Outcome& o) {
  CMatrix bar(2, 2), cross(2, 2);
  bar << -1, 0, 0, 1;
  cross << 0, cplx(0, 1), cplx(0, 1), 0;
  const CMatrix ub = mzi_unitary(0, kPi).matrix(), uc = mzi_unitary(0, 0).matrix();
  const double eb = (ub - bar).cwiseAbs().maxCoeff(), ec = (uc - cross).cwiseAbs().maxCoeff();
  o.detail << "bar error " << eb << ", cross error " << ec;
  o.require(eb < 1e-14 && ec < 1e-14, "entrywise error");
}

void ac3(Outcome& o) {
  Rng rng(103);
  std::size_t ok = 0, largest = 0;
  for (int t = 0; t < 100; ++t) {
    const EcmGraph g = random_ecm_graph(2 + uniform_index(rng, 19), rng);
    largest = std::max(largest, g.size());
    const auto ord = topological_order(g);
    if (router_inverse(random_route(g, ord, rng)) == ordered_dag(g, ord)) ++ok;
  }
  o.detail << ok << "/100 graphs recovered, largest " << largest << " vertices";
  o.require(ok == 100, "recovery");
}

void ac4(Outcome& o) {
  Rng rng(104);
  CircuitGraph g = CircuitGraph::from_mesh(random_square_mesh(12, rng));
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const std::size_t s = uniform_index(rng, 12), a = uniform_index(rng, 12);
    const auto d = find_causal_diamond(g, s, a);
    const Probe probe = Probe::from_pair(12, ModePair::single(s, a));
    const double p0 = probe_probability(g, probe);
    for (int r = 0; r < 100; ++r) {
      for (std::size_t v = 0; v < g.vertex_count(); ++v) {
        if (std::binary_search(d.diamond.begin(), d.diamond.end(), v)) continue;
        g.set_phase(2 * v, uniform(rng, 0, kTwoPi));
        g.set_phase(2 * v + 1, uniform(rng, 0, kTwoPi));
      }
      worst = std::max(worst, std::abs(probe_probability(g, probe) - p0));
    }
  }
  o.detail << "max |dp_sa| " << worst << " over 2000 re-randomizations";
  o.require(worst < 1e-12, "locality");
}

void ac5(Outcome& o) {
  Rng rng(105);
  std::size_t circuits = 0, mismatches = 0;
  auto check = [&](const CircuitLayout& layout) {
    if (layout.cells.size() > 30) return;
    ++circuits;
    CircuitGraph g(layout);
    for (std::size_t s = 0; s < layout.dim; ++s)
      for (std::size_t a = 0; a < layout.dim; ++a) {
        const auto d = find_causal_diamond(g, s, a);
        const auto ref = oracle::path_enumeration(g.layout(), {s}, {a});
        if (as_set(d.diamond) != ref.diamond || as_set(d.leaking) != ref.leaking) ++mismatches;
      }
  };
  for (std::size_t n = 2; n <= 8; ++n) check(CircuitLayout::from_mesh(square_mesh(n)));
  for (std::size_t n = 2; n <= 8; ++n) check(triangular_layout(n));
  for (int k = 0; k < 40; ++k) check(random_layout(3 + uniform_index(rng, 6), 5 + uniform_index(rng, 26), rng));

  // Timing on the 8-mode square mesh, every (s, a) pair.
  CircuitGraph g8 = CircuitGraph::from_mesh(square_mesh(8));
  std::size_t sink = 0;
  const double fast = time_it([&] {
    for (int rep = 0; rep < 20; ++rep)
      for (std::size_t s = 0; s < 8; ++s)
        for (std::size_t a = 0; a < 8; ++a) sink += find_causal_diamond(g8, s, a).leaking.size();
  }) / 20.0;
  const double brute = time_it([&] {
    for (std::size_t s = 0; s < 8; ++s)
      for (std::size_t a = 0; a < 8; ++a) sink += oracle::path_enumeration(g8.layout(), {s}, {a}).leaking.size();
  });
  o.detail << circuits << " circuits, " << mismatches << " mismatching pairs, speedup at 8x8 " << brute / fast
           << "x (" << sink % 2 << ")";
  o.require(mismatches == 0, "set equality");
  o.require(brute / fast >= 10.0, "speedup");
}

void ac6(Outcome& o) {
  Rng rng(106);
  // Equivalence on randomized single-layer edits.
  CircuitGraph g = CircuitGraph::from_mesh(random_square_mesh(10, rng));
  std::vector<Probe> probes{Probe::from_pair(10, ModePair::single(1, 7)),
                            Probe::from_pair(10, ModePair::adjacent(2, 0)),
                            Probe::from_pair(10, ModePair::single(4, 4), {1.05, 1.0})};
  double worst = 0.0;
  std::size_t edits = 0;
  while (edits < 1000) {
    FastLayerEvaluator ev(g, probes);
    for (; !ev.done() && edits < 1000; ev.advance()) {
      for (int e = 0; e < 3 && edits < 1000; ++e, ++edits) {
        const auto& cells = ev.current_cells();
        const std::size_t v = cells[uniform_index(rng, cells.size())];
        ev.set_phase(2 * v + uniform_index(rng, 2), uniform(rng, 0, kTwoPi));
        for (std::size_t p = 0; p < probes.size(); ++p)
          worst = std::max(worst, std::abs(ev.probability(p) - probe_probability(g, probes[p])));
      }
    }
  }
  // Speed on a 16-mode sweep: 8 trial values per phase, fast versus rebuild.
  CircuitGraph g16 = CircuitGraph::from_mesh(random_square_mesh(16, rng));
  const std::vector<Probe> p16{Probe::from_pair(16, ModePair::single(3, 12))};
  double acc = 0.0;
  const double fast = time_it([&] {
    FastLayerEvaluator ev(g16, p16);
    for (; !ev.done(); ev.advance())
      for (std::size_t v : ev.current_cells())
        for (std::size_t k = 0; k < 2; ++k)
          for (int trial = 0; trial < 8; ++trial) {
            ev.set_phase(2 * v + k, trial * kTwoPi / 8);
            acc += ev.probability(0);
          }
  });
  const double slow = time_it([&] {
    for (const auto& layer : g16.layers())
      for (std::size_t v : layer)
        for (std::size_t k = 0; k < 2; ++k)
          for (int trial = 0; trial < 8; ++trial) {
            g16.set_phase(2 * v + k, trial * kTwoPi / 8);
            acc += probe_probability(g16, p16[0]);
          }
  });
  o.detail << edits << " edits, max deviation " << worst << ", 16-mode sweep speedup " << slow / fast << "x";
  o.require(worst < 1e-10, "equivalence");
  o.require(slow / fast >= 10.0 && std::isfinite(acc), "speedup");
}

void ac7(Outcome& o) {
  GsoLog log;
  const double t = time_it([&] { log = gso_curve(10, 1.1, 500, 107); });
  const auto& last = log.records.back();
  o.detail << "converged at step " << (log.converged_step ? static_cast<long>(*log.converged_step) : -1L)
           << ", final p_sa " << last.p_sa << ", max competitor " << last.max_competitor() << ", max defect "
           << log.max_defect << ", " << t << " s";
  o.require(log.converged_step.has_value() && *log.converged_step <= 500, "convergence");
  o.require(last.p_sa > 0.99 && last.max_competitor() < 0.01, "final state");
  o.require(log.max_defect < 1e-9, "unitarity");
  o.require(t < 5.0, "runtime");
}

void ac8(Outcome& o) {
  Rng rng(108);
  DiamondTrainConfig cfg;
  cfg.tunable = TunableSet::leaking;
  cfg.merit = MeritMode::geometric_mean;
  cfg.max_sweeps = 200;
  cfg.target = 0.9;
  DiamondTrainResult res;
  const double t = time_it(
      [&] { res = train_causal_diamond(CircuitLayout::from_mesh(random_square_mesh(12, rng)), four_pair_task(), cfg); });
  const auto& p = res.log.probabilities.back();
  o.detail << "sweeps " << res.log.probabilities.size() - 1 << ", tuned cells " << res.log.tuned_cells << ", p_sa [";
  for (std::size_t k = 0; k < p.size(); ++k) o.detail << (k ? ", " : "") << p[k];
  o.detail << "], " << t << " s";
  o.require(res.log.converged_sweep.has_value() && *res.log.converged_sweep <= 200, "every p_sa > 0.9");
  o.require(t < 60.0, "runtime");
}

void ac9(Outcome& o) {
  TransferResult res;
  const double t = time_it([&] { res = run_transfer(TransferConfig::desk_scale(), 109); });
  double min_overlap = 1.0, max_marginal = 0.0;
  for (std::size_t s = 0; s < kPercepts; ++s) {
    const CVector a = res.middle.trees[s].amplitudes();
    min_overlap = std::min(min_overlap, target_overlap(s, a));
    for (double m : observable_marginals(a)) max_marginal = std::max(max_marginal, std::abs(m - 1.0 / 3.0));
  }
  std::size_t passed = 0;
  double best = 0.0, classical_worst_excess = -1.0, classical_max = 0.0;
  for (std::size_t k = 0; k < res.tasks.size(); ++k) {
    const auto& q = res.tasks[k];
    if (q.weighted_accuracy >= 0.95 && q.weighted_accuracy > 8.0 / 9.0) ++passed;
    best = std::max(best, q.weighted_accuracy);
    const auto& c = res.classical[k];
    classical_max = std::max(classical_max, c.raw_accuracy);
    classical_worst_excess = std::max(classical_worst_excess, c.raw_accuracy - (8.0 / 9.0 + 3.0 * c.sigma));
  }
  o.detail << "stage 1 " << res.middle.log.size() << " flushes, min overlap " << min_overlap
           << ", max marginal deviation " << max_marginal << "; stage 2 " << passed << "/" << res.tasks.size()
           << " tasks >= 0.95 (best " << best << "); classical max raw " << classical_max << "; " << t << " s";
  o.require(min_overlap > 0.98, "stage-1 overlap");
  o.require(max_marginal < 0.05, "stage-1 marginals");
  o.require(passed >= 5, "stage-2 tasks");
  o.require(classical_worst_excess <= 0.0, "classical bound");
  o.require(t < 900.0, "runtime");
}

void ac10(Outcome& o) {
  const std::vector<double> deltas{0.01, 0.05, 0.1};
  const auto pts = wavelength_fidelity_study({4, 8, 12}, deltas, 100, 110);
  bool monotone = true;
  o.detail << "fidelity";
  for (double d : deltas) {
    std::vector<double> f;
    for (const auto& p : pts)
      if (p.delta == d) f.push_back(p.mean);
    o.detail << " d=" << d << ":";
    for (double x : f) o.detail << " " << x;
    for (std::size_t k = 1; k < f.size(); ++k) monotone = monotone && f[k] < f[k - 1];
  }
  Rng rng(1010);
  DiamondTrainConfig cfg;
  cfg.tunable = TunableSet::diamond;
  cfg.target = 0.8;
  cfg.max_sweeps = 200;
  const auto res =
      multiwavelength_train(random_square_mesh(10, rng), multiwavelength_pairs(), wavelength_triplet(0.05), cfg);
  const auto& p = res.log.probabilities.back();
  const double lowest = *std::min_element(p.begin(), p.end());
  o.detail << "; three-wavelength training: " << res.log.probabilities.size() - 1 << " sweeps, min p_sa " << lowest;
  o.require(monotone, "fidelity trend");
  o.require(lowest > 0.8, "every p_sa(lambda) > 0.8");
}

void ac11(Outcome& o) {
  Rng rng(111);
  double worst = 0.0;
  std::size_t checks = 0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + uniform_index(rng, 15);
    const QuantumAgent agent = QuantumAgent::one_to_one(random_square_mesh(n, rng));
    const std::size_t s = uniform_index(rng, n);
    worst = std::max(worst, std::abs(agent.forward(s).squaredNorm() - 1.0));
    const RealMatrix lp = agent.layer_probabilities(s);
    for (Eigen::Index c = 0; c < lp.cols(); ++c) worst = std::max(worst, std::abs(lp.col(c).sum() - 1.0));
    checks += 1 + static_cast<std::size_t>(lp.cols());
  }
  for (int t = 0; t < 100; ++t) {
    const EcmGraph g = random_ecm_graph(3 + uniform_index(rng, 18), rng);
    const UnitaryMatrix u = ecm_unitary(random_route(g, topological_order(g), rng));
    for (Eigen::Index c = 0; c < u.matrix().cols(); ++c)
      worst = std::max(worst, std::abs(u.matrix().col(c).squaredNorm() - 1.0));
    checks += u.dim();
  }
  for (int t = 0; t < 100; ++t) {
    std::vector<double> ph(BinaryTree::kPhases);
    for (auto& x : ph) x = uniform(rng, 0, kTwoPi);
    worst = std::max(worst, std::abs(BinaryTree::amplitudes(ph).squaredNorm() - 1.0));
    ++checks;
  }
  o.detail << checks << " distributions, max |sum - 1| " << worst;
  o.require(worst < 1e-12, "conservation");
}

void ac12(Outcome& o) {
  Rng rng(112);
  std::size_t outside = 0;
  for (int k = 0; k < 10000; ++k) {
    const double t = simplified_target(uniform01(rng), uniform01(rng), uniform(rng, 0, 1), uniform(rng, -10, 10),
                                       1 + uniform_index(rng, 12));
    if (!(t >= 0.0 && t <= 1.0)) ++outside;
  }
  // Step-halving: central differences at h and h/2 agree on the simplified
  // loss of a random replay batch.
  double worst_rel = 0.0;
  TrainConfig cfg;
  cfg.action_count = 4;
  for (int k = 0; k < 50; ++k) {
    QuantumAgent agent = QuantumAgent::one_to_one(random_square_mesh(4, rng));
    std::vector<ReplayEntry> batch;
    for (int e = 0; e < 8; ++e) {
      const std::size_t s = uniform_index(rng, 4), a = uniform_index(rng, 4);
      batch.push_back({s, a, uniform(rng, -1, 1), uniform01(rng), uniform(rng, 0.05, 0.95), 0.0});
    }
    const MeshParameters mesh = *agent.mesh();
    const Objective f = [&](std::span<const double> th) {
      MeshParameters m = mesh;
      assign_phases(m, th);
      QuantumAgent w = agent;
      w.set_mesh(m);
      return loss_simplified(policy_matrix(w), batch, cfg);
    };
    const auto x = flatten_phases(mesh);
    const auto g1 = gradient(f, x, 1e-4), g2 = gradient(f, x, 5e-5);
    double num = 0, den = 0;
    for (std::size_t i = 0; i < g1.size(); ++i) {
      num += (g1[i] - g2[i]) * (g1[i] - g2[i]);
      den += g2[i] * g2[i];
    }
    worst_rel = std::max(worst_rel, std::sqrt(num) / std::max(std::sqrt(den), 1e-12));
  }
  o.detail << outside << " targets outside [0,1] of 10000, worst step-halving relative error " << worst_rel;
  o.require(outside == 0, "target range");
  o.require(worst_rel < 1e-4, "gradient self-check");
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria{
      {"AC1 decomposition roundtrip", ac1}, {"AC2 bar and cross states", ac2},
      {"AC3 router bijectivity", ac3},     {"AC4 causal-diamond locality", ac4},
      {"AC5 leaking-node oracle", ac5},    {"AC6 fast layer evaluation", ac6},
      {"AC7 GSO convergence", ac7},        {"AC8 causal-diamond training", ac8},
      {"AC9 transfer learning", ac9},      {"AC10 multi-wavelength", ac10},
      {"AC11 conservation", ac11},         {"AC12 loss self-consistency", ac12},
  };
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      fn(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    std::printf("%s %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", name, o.detail.str().c_str(), seconds_since(t0));
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
