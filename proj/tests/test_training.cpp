#include <doctest.h>

#include <cmath>

#include "qps/training.hpp"

using namespace qps;

TEST_CASE("simplified targets") {
  CHECK(simplified_target(0.5, 0.0, 1.0, 0.1, 2) == doctest::Approx(0.6));
  CHECK(simplified_target(0.95, 0.0, 1.0, 0.1, 2) == doctest::Approx(1.0));
  CHECK(simplified_target(0.05, 0.0, 1.0, -0.1, 2) == doctest::Approx(0.0));
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double t = simplified_target(uniform01(rng), uniform01(rng), uniform01(rng), uniform(rng, -5, 5),
                                       1 + uniform_index(rng, 9));
    CHECK(t >= 0.0);
    CHECK(t <= 1.0);
  }
}

TEST_CASE("distances") {
  CHECK(distance(Distance::kl_binary, 0.3, 0.3) == doctest::Approx(0.0));
  CHECK(distance(Distance::kl_binary, 0.5, 1.0) == doctest::Approx(std::log(2.0)));
  CHECK(distance(Distance::squared_error, 0.2, 0.5) == doctest::Approx(0.09));
  CHECK_THROWS_AS(distance(Distance::kl_binary, 0.5, 1.2), DomainError);
  CHECK(std::isfinite(distance(Distance::kl_binary, 0.0, 1.0)));
}

TEST_CASE("annealing") {
  AnnealingSchedule c;
  CHECK(c(0) == 1.0);
  CHECK(c(100) == 1.0);
  AnnealingSchedule e{AnnealingSchedule::Kind::exponential, 10.0};
  CHECK(e(0) == 1.0);
  CHECK(e(5) > e(10));
  // Vanishing reward makes the target the current probability (γ = 0).
  CHECK(simplified_target(0.37, 0.0, 1.0, e(1e4) * 0.1, 2) == doctest::Approx(0.37).epsilon(1e-12));
}

TEST_CASE("loss_simplified sums over glowing entries") {
  RealMatrix p(2, 2);
  p << 0.5, 0.5, 0.2, 0.8;
  TrainConfig cfg;
  CHECK(loss_simplified(p, {}, cfg) == 0.0);
  std::vector<ReplayEntry> one{{0, 0, 0.1, 1.0, 0.5, 0}};
  const double l1 = loss_simplified(p, one, cfg);
  CHECK(l1 == doctest::Approx(distance(Distance::kl_binary, 0.5, 0.6)));
  std::vector<ReplayEntry> two{one[0], one[0]};
  CHECK(loss_simplified(p, two, cfg) == doctest::Approx(2 * l1));
  std::vector<ReplayEntry> dark{{1, 1, 0.1, 0.0, 0.5, 0}};
  CHECK(loss_simplified(p, dark, cfg) == 0.0);
}

TEST_CASE("loss_exact") {
  RealMatrix p(1, 2);
  p << 0.25, 0.75;
  TrainConfig cfg;
  cfg.distance = Distance::squared_error;
  const std::vector<double> h{4.0};
  // p·h − 1 = 0 and the target is (1−γ)(p⁰h⁰ − 1) + gR = 0.
  std::vector<ReplayEntry> e{{0, 0, 0.0, 1.0, 0.25, 4.0}};
  const std::vector<double> phases{0.0, 0.3};
  cfg.phase_penalty_weight = 2.0;
  CHECK(loss_exact(p, h, e, phases, cfg) == doctest::Approx(0.6));
  // Full forgetting: target 0 regardless of history.
  cfg.gamma = 1.0;
  cfg.phase_penalty_weight = 0.0;
  std::vector<ReplayEntry> f{{0, 0, 0.0, 1.0, 0.9, 7.0}};
  CHECK(loss_exact(p, h, f, phases, cfg) == doctest::Approx(0.0));
  cfg.distance = Distance::kl_binary;
  cfg.gamma = 0.0;
  std::vector<ReplayEntry> bad{{0, 0, 10.0, 1.0, 0.25, 4.0}};
  CHECK_THROWS_AS(loss_exact(p, h, bad, phases, cfg), DomainError);
}

TEST_CASE("finite-difference gradient") {
  auto quad = [](std::span<const double> x) { return 3 * x[0] * x[0] - 2 * x[0] * x[1] + 0.5 * x[1]; };
  const std::vector<double> x{0.7, -1.3};
  const auto g = gradient(quad, x);
  CHECK(std::abs(g[0] - (6 * 0.7 + 2 * 1.3)) < 1e-9);
  CHECK(std::abs(g[1] - (-2 * 0.7 + 0.5)) < 1e-9);
  auto bad = [](std::span<const double> x) { return x[1] > 1.0 ? std::nan("") : 0.0; };
  try {
    gradient(bad, std::vector<double>{0.0, 1.0});
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(e.index() == 1);
  }
}

TEST_CASE("output phases do not affect policy gradients") {
  Rng rng(3);
  QuantumAgent agent = QuantumAgent::one_to_one(random_square_mesh(6, rng));
  MeshParameters mesh = *agent.mesh();
  auto f = [&](std::span<const double> th) {
    MeshParameters m = mesh;
    assign_phases(m, th);
    QuantumAgent w = agent;
    w.set_mesh(m);
    return policy_matrix(w)(0, 0);
  };
  const auto g = gradient(f, flatten_phases(mesh));
  for (std::size_t k = 2 * mesh.cells.size(); k < g.size(); ++k) CHECK(std::abs(g[k]) < 1e-7);
}

TEST_CASE("descent on a target overlap decreases the loss") {
  Rng rng(4);
  MeshParameters mesh = random_square_mesh(4, rng);
  auto f = [&](std::span<const double> th) {
    MeshParameters m = mesh;
    assign_phases(m, th);
    const CMatrix u = build_unitary(m).matrix();
    return (u.col(0) - CVector::Unit(4, 2)).squaredNorm();
  };
  std::vector<double> x = flatten_phases(mesh);
  double last = f(x);
  for (int i = 0; i < 50; ++i) {
    const auto g = gradient(f, x);
    for (std::size_t k = 0; k < x.size(); ++k) x[k] -= 0.02 * g[k];
    const double now = f(x);
    CHECK(now <= last + 1e-12);
    last = now;
  }
}

TEST_CASE("adam") {
  std::vector<double> x{1.0, 2.0};
  AdamState st;
  adam_step(x, std::vector<double>{0.0, 0.0}, st, 0.01);
  CHECK(x[0] == doctest::Approx(1.0));
  CHECK(x[1] == doctest::Approx(2.0));
  AdamState s2;
  std::vector<double> y{1.0, 2.0};
  adam_step(y, std::vector<double>{3.0, -0.5}, s2, 0.01);
  CHECK(y[0] == doctest::Approx(0.99).epsilon(1e-6));
  CHECK(y[1] == doctest::Approx(2.01).epsilon(1e-6));
  std::vector<double> z{0.001};
  AdamState s3;
  adam_step(z, std::vector<double>{1.0}, s3, 0.01);
  CHECK(z[0] >= 0.0);
  CHECK(z[0] < kTwoPi);
}

TEST_CASE("learning-rate step-down is sticky") {
  StepDownSchedule s;
  CHECK(s.observe(0.5) == 0.01);
  CHECK(s.observe(0.96) == 0.001);
  CHECK(s.observe(0.2) == 0.001);
}

TEST_CASE("replay buffer") {
  ReplayBuffer b(2);
  CHECK(!b.push({}));
  CHECK(b.push({}));
  CHECK_THROWS_AS(b.push({}), DomainError);
  b.clear();
  CHECK(b.empty());
}

TEST_CASE("replay flush raises a rewarded probability") {
  Rng rng(5);
  QuantumAgent agent = QuantumAgent::one_to_one(random_square_mesh(3, rng));
  TrainConfig cfg;
  cfg.action_count = 3;
  AdamState adam;
  const double before = policy_matrix(agent)(0, 2);
  for (int round = 0; round < 10; ++round) {
    ReplayBuffer buf(4);
    const double p0 = policy_matrix(agent)(0, 2);
    for (int k = 0; k < 4; ++k) buf.push({0, 2, 0.1, 1.0, p0, 0});
    const auto r = replay_flush(buf, agent, adam, cfg, 0.05);
    CHECK(r.steps == 10);
    CHECK(buf.empty());
  }
  CHECK(policy_matrix(agent)(0, 2) > before + 0.05);
}

TEST_CASE("exact-loss flush") {
  Rng rng(6);
  QuantumAgent agent = QuantumAgent::one_to_one(random_square_mesh(3, rng));
  VariationalHandle handle = VariationalHandle::for_agent(agent);
  CHECK(handle.h == std::vector<double>{3.0, 3.0, 3.0});
  TrainConfig cfg;
  cfg.distance = Distance::squared_error;
  AdamState adam;
  ReplayBuffer buf(1);
  const double p0 = policy_matrix(agent)(1, 1);
  buf.push({1, 1, 1.0, 1.0, p0, handle.h[1]});
  const auto r = replay_flush_exact(buf, agent, handle, adam, cfg, 0.05);
  CHECK(r.loss_after < r.loss_before);
}

TEST_CASE("GSO fixed point and unitarity") {
  Rng rng(7);
  const auto u = UnitaryMatrix::from_matrix(haar_unitary(6, rng));
  CHECK((gso_update(u, 2, 3, 1.0).matrix() - u.matrix()).norm() < 1e-12);
  for (double alpha : {0.1, 0.9, 1.5, 10.0}) CHECK(gso_update(u, 1, 4, alpha).unitarity_defect() < 1e-10);
  CHECK_THROWS_AS(gso_update(u, 0, 0, 0.0), DomainError);
}

TEST_CASE("GSO perturbs other rows less as alpha approaches one") {
  Rng rng(8);
  const auto u = UnitaryMatrix::from_matrix(haar_unitary(10, rng));
  double last = 1e9;
  for (double alpha : {1.2, 1.05, 1.01}) {
    const CMatrix v = gso_update(u, 3, 5, alpha).matrix();
    double change = 0;
    for (Eigen::Index r = 0; r < 10; ++r) {
      if (r != 5) change += (v.row(r) - u.matrix().row(r)).squaredNorm();
    }
    change = std::sqrt(change);
    CHECK(change < last);
    last = change;
  }
}

TEST_CASE("GSO with recompilation") {
  Rng rng(9);
  MeshParameters mesh = random_square_mesh(5, rng);
  MeshParameters next = gso_update_mesh(mesh, 0, 1, 1.3);
  const CMatrix direct = gso_update(build_unitary(mesh), 0, 1, 1.3).matrix();
  CHECK((build_unitary(next).matrix() - direct).norm() < 1e-9);
}
