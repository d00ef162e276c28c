#include "qps/training.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qps/kernels.hpp"

namespace qps {

namespace {

double xlogy_ratio(double x, double y) { return x > 0.0 ? x * std::log(x / y) : 0.0; }

}  // namespace

double distance(Distance d, double p, double target) {
  if (d == Distance::squared_error) return (p - target) * (p - target);
  if (!(target >= 0.0 && target <= 1.0)) {
    std::ostringstream os;
    os << "binary KL target outside [0,1]: " << target;
    throw DomainError(os.str());
  }
  const double q = std::clamp(p, 1e-12, 1.0 - 1e-12);
  return xlogy_ratio(target, q) + xlogy_ratio(1.0 - target, 1.0 - q);
}

double cutoff(double x) {
  const auto relu = [](double v) { return v > 0.0 ? v : 0.0; };
  return 1.0 - relu(1.0 - relu(x));
}

double simplified_target(double p0, double gamma, double glow, double reward, std::size_t actions) {
  const double u = 1.0 / static_cast<double>(actions);
  return cutoff(u + (1.0 - gamma) * (p0 - u) + glow * reward);
}

double AnnealingSchedule::operator()(double t) const {
  if (kind == Kind::constant) return 1.0;
  return std::exp(-std::max(t, 0.0) / tau);
}

bool ReplayBuffer::push(const ReplayEntry& e) {
  if (full()) throw DomainError("replay buffer is full");
  entries_.push_back(e);
  return full();
}

double loss_simplified(const RealMatrix& policy, std::span<const ReplayEntry> batch, const TrainConfig& config,
                       double time) {
  const double scale = config.annealing(time) * config.reward_scale;
  double total = 0.0;
  for (const auto& e : batch) {
    if (!(e.glow > 0.0)) continue;
    const double target = simplified_target(e.p0, config.gamma, e.glow, scale * e.reward, config.action_count);
    total += distance(config.distance, policy(static_cast<Eigen::Index>(e.s), static_cast<Eigen::Index>(e.a)), target);
  }
  return total;
}

double loss_exact(const RealMatrix& policy, std::span<const double> h, std::span<const ReplayEntry> batch,
                  std::span<const double> output_phases, const TrainConfig& config) {
  double total = 0.0;
  for (const auto& e : batch) {
    const double p = policy(static_cast<Eigen::Index>(e.s), static_cast<Eigen::Index>(e.a));
    const double hs = h[e.s];
    const double rhs = (1.0 - config.gamma) * (e.p0 * e.h0 - 1.0) + e.glow * config.reward_scale * e.reward;
    if (config.distance == Distance::squared_error) {
      total += distance(Distance::squared_error, p * hs - 1.0, rhs);
    } else {
      if (!(hs > 0.0)) throw DomainError("normalizer h_s must be positive");
      total += distance(Distance::kl_binary, p, (1.0 + rhs) / hs);
    }
  }
  double l1 = 0.0;
  for (double phi : output_phases) l1 += std::abs(wrap_signed(phi));
  return total + config.phase_penalty_weight * l1;
}

RealMatrix policy_matrix(const QuantumAgent& agent) {
  RealMatrix p(static_cast<Eigen::Index>(agent.percept_count()), static_cast<Eigen::Index>(agent.action_count()));
  for (std::size_t s = 0; s < agent.percept_count(); ++s) {
    const auto raw = agent.action_probabilities(s);
    double acc = 0;
    for (double x : raw) acc += x;
    for (std::size_t a = 0; a < raw.size(); ++a) {
      p(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) =
          acc > QuantumAgent::kMinAcceptance ? raw[a] / acc : 1.0 / static_cast<double>(raw.size());
    }
  }
  return p;
}

std::vector<double> gradient(const Objective& f, std::span<const double> x, double h) {
  std::vector<double> probe(x.begin(), x.end()), g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericalError("loss is not finite when probing parameter " + std::to_string(i), i);
    }
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

void adam_step(std::vector<double>& x, std::span<const double> grad, AdamState& st, double lr, bool wrap) {
  if (grad.size() != x.size()) throw StructuralError("gradient size does not match the parameters");
  if (st.m.size() != x.size()) {
    st.m.assign(x.size(), 0.0);
    st.v.assign(x.size(), 0.0);
    st.t = 0;
  }
  ++st.t;
  const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.t));
  const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.t));
  for (std::size_t i = 0; i < x.size(); ++i) {
    st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * grad[i];
    st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * grad[i] * grad[i];
    const double mh = st.m[i] / c1, vh = st.v[i] / c2;
    x[i] -= lr * mh / (std::sqrt(vh) + st.epsilon);
    if (wrap) x[i] = wrap_phase(x[i]);
  }
}

VariationalHandle VariationalHandle::for_agent(const QuantumAgent& agent) {
  if (!agent.mesh()) throw StructuralError("variational training needs a mesh backend");
  return {*agent.mesh(), std::vector<double>(agent.percept_count(), static_cast<double>(agent.action_count()))};
}

FlushResult replay_flush(ReplayBuffer& buffer, QuantumAgent& agent, AdamState& adam, const TrainConfig& config,
                         double lr, double time) {
  if (!agent.mesh()) throw StructuralError("variational training needs a mesh backend");
  MeshParameters mesh = *agent.mesh();
  QuantumAgent work = agent;
  const auto batch = buffer.entries();
  auto objective = [&](std::span<const double> theta) {
    assign_phases(mesh, theta);
    work.set_mesh(mesh);
    double l = loss_simplified(policy_matrix(work), batch, config, time);
    if (config.phase_penalty_weight > 0) {
      double l1 = 0;
      for (double phi : mesh.output_phases) l1 += std::abs(wrap_signed(phi));
      l += config.phase_penalty_weight * l1;
    }
    return l;
  };
  std::vector<double> theta = flatten_phases(*agent.mesh());
  FlushResult res;
  res.loss_before = objective(theta);
  for (std::size_t k = 0; k < config.optimizer_steps; ++k) {
    const auto g = gradient(objective, theta);
    adam_step(theta, g, adam, lr);
    ++res.steps;
  }
  res.loss_after = objective(theta);
  assign_phases(mesh, theta);
  agent.set_mesh(mesh);
  buffer.clear();
  return res;
}

FlushResult replay_flush_exact(ReplayBuffer& buffer, QuantumAgent& agent, VariationalHandle& handle,
                               AdamState& adam, const TrainConfig& config, double lr) {
  MeshParameters mesh = handle.mesh;
  QuantumAgent work = agent;
  const std::size_t nphase = mesh.phase_count();
  const auto batch = buffer.entries();
  auto objective = [&](std::span<const double> x) {
    assign_phases(mesh, x.first(nphase));
    work.set_mesh(mesh);
    return loss_exact(policy_matrix(work), x.subspan(nphase), batch, mesh.output_phases, config);
  };
  std::vector<double> x = flatten_phases(handle.mesh);
  x.insert(x.end(), handle.h.begin(), handle.h.end());
  FlushResult res;
  res.loss_before = objective(x);
  for (std::size_t k = 0; k < config.optimizer_steps; ++k) {
    const auto g = gradient(objective, x);
    adam_step(x, g, adam, lr, false);
    for (std::size_t i = 0; i < nphase; ++i) x[i] = wrap_phase(x[i]);
    for (std::size_t i = nphase; i < x.size(); ++i) x[i] = std::max(x[i], 1e-6);
    ++res.steps;
  }
  res.loss_after = objective(x);
  assign_phases(handle.mesh, std::span<const double>(x).first(nphase));
  handle.h.assign(x.begin() + static_cast<long>(nphase), x.end());
  agent.set_mesh(handle.mesh);
  buffer.clear();
  return res;
}

UnitaryMatrix gso_update(const UnitaryMatrix& u, std::size_t s, std::size_t a, double alpha) {
  const std::size_t n = u.dim();
  if (s >= n || a >= n) throw LookupError("GSO indices out of range");
  if (!(alpha > 0.0)) throw DomainError("GSO rescaling factor must be positive");
  const CMatrix& old = u.matrix();
  CMatrix out(old.rows(), old.cols());
  auto row = [n](CMatrix& m, std::size_t r) { return std::span<cplx>(m.data() + r * n, n); };
  auto crow = [n](const CMatrix& m, std::size_t r) { return std::span<const cplx>(m.data() + r * n, n); };
  auto normalize = [&](std::size_t r) {
    const double nrm = std::sqrt(kernels::norm_sq(crow(out, r)));
    if (!(nrm >= 1e-14)) throw DegenerateError("row " + std::to_string(r) + " vanished during orthonormalization");
    for (cplx& z : row(out, r)) z /= nrm;
  };

  out.row(static_cast<Eigen::Index>(a)) = old.row(static_cast<Eigen::Index>(a));
  out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(s)) *= alpha;
  normalize(a);

  std::vector<std::size_t> done{a};
  std::vector<cplx> coef;
  for (std::size_t r = 0; r < n; ++r) {
    if (r == a) continue;
    // Projections of the old row onto the finalized rows.
    coef.clear();
    for (std::size_t f : done) coef.push_back(kernels::dot(crow(out, f), crow(old, r)));
    out.row(static_cast<Eigen::Index>(r)) = old.row(static_cast<Eigen::Index>(r));
    for (std::size_t k = 0; k < done.size(); ++k) kernels::axpy(-coef[k], crow(out, done[k]), row(out, r));
    normalize(r);
    done.push_back(r);
  }
  return UnitaryMatrix::assume_unitary(std::move(out));
}

MeshParameters gso_update_mesh(const MeshParameters& mesh, std::size_t s, std::size_t a, double alpha) {
  return clements_decompose(gso_update(build_unitary(mesh), s, a, alpha));
}

}  // namespace qps
