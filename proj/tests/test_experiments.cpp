#include <doctest.h>

#include <cmath>
#include <set>

#include "qps/experiments.hpp"

using namespace qps;

TEST_CASE("derived generators are independent streams") {
  Rng a = derive_rng(5, 0), b = derive_rng(5, 1), c = derive_rng(5, 0);
  const auto x = a();
  CHECK(x != b());
  CHECK(x == c());
}

TEST_CASE("gso curve reaches the rewarded transition") {
  const GsoLog log = gso_curve(10, 1.1, 500, 7);
  REQUIRE(log.converged_step.has_value());
  CHECK(*log.converged_step < 500);
  CHECK(log.max_defect < 1e-9);
  CHECK(log.records.size() == 501);
  CHECK(log.records.front().row_competitors.size() == 9);
  CHECK(log.records.front().column_competitors.size() == 9);
  CHECK(std::abs(std::norm(log.final_unitary(0, 0)) - log.records.back().p_sa) < 1e-12);
  CHECK_THROWS_AS(gso_curve(4, 1.1, 10, 1, 4, 0), LookupError);
}

TEST_CASE("causal-diamond training raises every pair") {
  Rng rng(11);
  const auto pairs = std::vector<ModePair>{ModePair::single(0, 3), ModePair::single(2, 1)};
  DiamondTrainConfig cfg;
  cfg.target = 0.95;
  cfg.max_sweeps = 40;
  cfg.tunable = TunableSet::diamond;
  const auto res = train_causal_diamond(CircuitLayout::from_mesh(random_square_mesh(6, rng)), pairs, cfg);
  REQUIRE(res.log.converged_sweep.has_value());
  for (double p : res.log.probabilities.back()) CHECK(p > 0.95);
  CHECK(res.log.merit.size() == res.log.probabilities.size());
  // The layout returned is the one the final probabilities describe.
  CircuitGraph g(res.layout);
  CHECK(evaluate_merit(g, pairs, MeritMode::geometric_mean) == doctest::Approx(res.log.merit.back()));
}

TEST_CASE("four-pair and multi-wavelength tasks") {
  const auto four = four_pair_task();
  CHECK(four.size() == 4);
  for (const auto& p : four) {
    CHECK(p.inputs.size() == 2);
    CHECK(p.outputs.back() < 12);
  }
  const auto mw = multiwavelength_pairs();
  CHECK(mw.size() == 4);
  for (const auto& p : mw) CHECK(p.outputs.back() < 10);
  const auto l = wavelength_triplet(0.05);
  REQUIRE(l.size() == 3);
  CHECK(l[0].lambda == doctest::Approx(0.95));
  CHECK(l[1].lambda == doctest::Approx(1.0));
  CHECK(l[2].lambda == doctest::Approx(1.05));
}

TEST_CASE("fidelity study trends") {
  const auto pts = wavelength_fidelity_study({4, 8}, {0.0, 0.1}, 20, 3);
  REQUIRE(pts.size() == 4);
  for (const auto& p : pts)
    if (p.delta == 0.0) CHECK(p.mean == doctest::Approx(1.0));
  double f4 = 0, f8 = 0;
  for (const auto& p : pts)
    if (p.delta == 0.1) (p.dim == 4 ? f4 : f8) = p.mean;
  CHECK(f8 < f4);
  CHECK(f4 < 1.0);
}

TEST_CASE("percept encoding") {
  std::set<std::size_t> seen;
  for (std::size_t s = 0; s < kPercepts; ++s) {
    const auto v = percept_values(s);
    CHECK(percept_index(v) == s);
    seen.insert(s);
    const CVector t = middle_target_state(v);
    CHECK(t.norm() == doctest::Approx(1.0));
    for (std::size_t j = 0; j < kObservables; ++j)
      CHECK(std::norm(t(static_cast<Eigen::Index>(middle_mode(j, v[j])))) == doctest::Approx(1.0 / 3.0));
    CHECK(target_overlap(s, t) == doctest::Approx(1.0));
    CHECK(shannon_term(t) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(phase_term(t) == doctest::Approx(0.0));
  }
  CHECK(seen.size() == 27);
  CHECK_THROWS_AS(percept_index({0, 3, 0}), DomainError);
  CHECK_THROWS_AS(percept_values(27), LookupError);
}

TEST_CASE("middle-layer metrics on a hand-built state") {
  CVector a = CVector::Zero(9);
  a(0) = 1.0;  // everything on observable 0
  const auto m = observable_marginals(a);
  CHECK(m[0] == doctest::Approx(1.0));
  CHECK(shannon_term(a) == doctest::Approx(std::log(3.0)));
  CVector b = CVector::Zero(9);
  b(0) = std::polar(std::sqrt(0.5), 1.0);
  b(4) = std::polar(std::sqrt(0.5), -0.5);
  CHECK(phase_term(b) == doctest::Approx(1.5));
  CHECK(weighted_phase(b) == doctest::Approx(0.75));
}

TEST_CASE("transfer tasks and accuracies") {
  const auto tasks = transfer_tasks();
  REQUIRE(tasks.size() == 27);
  std::set<std::string> names;
  for (const auto& t : tasks) {
    names.insert(t.name());
    std::size_t yes = 0;
    for (std::size_t s = 0; s < kPercepts; ++s) yes += t.answer(s) ? 1 : 0;
    CHECK(yes == 3);
    std::vector<double> perfect(kPercepts), never(kPercepts, 0.0), coin(kPercepts, 0.5);
    for (std::size_t s = 0; s < kPercepts; ++s) perfect[s] = t.answer(s) ? 1.0 : 0.0;
    CHECK(raw_accuracy(t, perfect) == doctest::Approx(1.0));
    CHECK(weighted_accuracy(t, perfect) == doctest::Approx(1.0));
    CHECK(raw_accuracy(t, never) == doctest::Approx(24.0 / 27.0));
    CHECK(weighted_accuracy(t, never) == doctest::Approx(0.5));
    CHECK(weighted_accuracy(t, coin) == doctest::Approx(0.5));
  }
  CHECK(names.size() == 27);
}

TEST_CASE("binary tree routing") {
  CHECK(BinaryTree::depth() == 4);
  BinaryTree tree;
  CHECK(tree.phases().size() == BinaryTree::kPhases);
  CHECK(tree.amplitudes().norm() == doctest::Approx(1.0));
  // Bar state keeps the photon on the top port, cross state sends it down.
  std::vector<double> bar(BinaryTree::kPhases, 0.0), cross(BinaryTree::kPhases, 0.0);
  for (std::size_t k = 1; k < bar.size(); k += 2) bar[k] = kPi;
  CHECK(std::norm(BinaryTree::amplitudes(bar)(0)) == doctest::Approx(1.0));
  CHECK(std::norm(BinaryTree::amplitudes(cross)(8)) == doctest::Approx(1.0));
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> ph(BinaryTree::kPhases);
    for (auto& x : ph) x = uniform(rng, 0, kTwoPi);
    CHECK(BinaryTree::amplitudes(ph).norm() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("yes probabilities through a bar-state task mesh") {
  // A diagonal task mesh leaves each middle mode in place: yes on mode 0 is
  // observable 0 at value 0, no on mode 1 is value 1, value 2 is rejected.
  std::vector<CVector> middle;
  for (std::size_t s = 0; s < kPercepts; ++s) middle.push_back(middle_target_state(percept_values(s)));
  TaskLayerConfig cfg;
  const auto p = yes_probabilities(square_mesh(9, 0.0, kPi), middle, cfg);
  for (std::size_t s = 0; s < kPercepts; ++s) {
    const auto v = percept_values(s);
    const double expect = v[0] == 0 ? 1.0 : v[0] == 1 ? 0.0 : 0.5;
    CHECK(p[s] == doctest::Approx(expect));
  }
}

TEST_CASE("task layer training is seeded") {
  std::vector<CVector> middle;
  for (std::size_t s = 0; s < kPercepts; ++s) middle.push_back(middle_target_state(percept_values(s)));
  TaskLayerConfig cfg;
  cfg.rounds = 1500;
  const auto task = transfer_tasks()[4];
  Rng r1(9), r2(9);
  const auto a = train_task_layer(middle, task, cfg, r1);
  const auto b = train_task_layer(middle, task, cfg, r2);
  CHECK(a.weighted_accuracy == b.weighted_accuracy);
  CHECK(a.log.size() == 4);
  CHECK(a.log.front().round == 0);
  CHECK(a.log.back().round == 1500);
  CHECK(a.weighted_accuracy == a.log.back().weighted_accuracy);
}

TEST_CASE("middle layer training runs and logs") {
  MiddleLayerConfig cfg;
  cfg.max_flushes = 5;
  cfg.batch = 100;
  Rng rng(1);
  const auto res = train_middle_layer(std::vector<BinaryTree>(kPercepts), cfg, rng);
  CHECK(res.trees.size() == kPercepts);
  CHECK(res.log.size() == 5);
  CHECK_FALSE(res.converged);
  for (const auto& r : res.log) {
    CHECK(r.worst_accuracy <= r.expected_accuracy + 1e-12);
    CHECK(r.learning_rate == doctest::Approx(0.01));
  }
  CHECK_THROWS(train_middle_layer(std::vector<BinaryTree>(3), cfg, rng));
}

TEST_CASE("classical baseline stays at the frozen-middle bound") {
  const EcmGraph g = transfer_ecm();
  CHECK(g.size() == 27 + 9 + 2);
  CHECK(g.edges().size() == 27 * 3 + 9 * 2);
  CHECK_NOTHROW(g.validate());
  ClassicalTransferConfig cfg;
  cfg.training_rounds = 3000;
  cfg.evaluation_rounds = 3000;
  Rng rng(4);
  const auto r = classical_transfer_baseline(transfer_tasks()[0], cfg, rng);
  CHECK(r.exact_raw_accuracy <= 8.0 / 9.0 + 1e-9);
  CHECK(r.exact_raw_accuracy > 0.8);
  CHECK(r.sigma > 0.0);
  CHECK(std::abs(r.raw_accuracy - r.exact_raw_accuracy) < 5 * r.sigma + 0.02);
}
