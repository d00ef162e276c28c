#include "qps/causal_diamond.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace qps {

namespace {

std::vector<char> reach(const CircuitGraph& g, const std::vector<std::size_t>& seeds, bool forward) {
  std::vector<char> seen(g.vertex_count(), 0);
  std::deque<std::size_t> queue;
  for (std::size_t v : seeds) {
    if (!seen[v]) {
      seen[v] = 1;
      queue.push_back(v);
    }
  }
  while (!queue.empty()) {
    const std::size_t v = queue.front();
    queue.pop_front();
    for (std::size_t w : forward ? g.successors(v) : g.predecessors(v)) {
      if (!seen[w]) {
        seen[w] = 1;
        queue.push_back(w);
      }
    }
  }
  return seen;
}

bool contains(const std::vector<std::size_t>& v, std::size_t x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

}  // namespace

CausalDiamond find_causal_diamond(const CircuitGraph& g, const ModePair& pair) {
  std::vector<std::size_t> starts, ends;
  for (std::size_t s : pair.inputs) {
    if (auto v = g.entry_cell(s)) starts.push_back(*v);
  }
  for (std::size_t a : pair.outputs) {
    if (auto v = g.exit_cell(a)) ends.push_back(*v);
  }
  const auto fwd = reach(g, starts, true);
  const auto bwd = reach(g, ends, false);

  CausalDiamond d;
  d.pair = pair;
  std::vector<char> in(g.vertex_count(), 0);
  for (std::size_t v = 0; v < g.vertex_count(); ++v) {
    if (fwd[v] && bwd[v]) {
      in[v] = 1;
      d.diamond.push_back(v);
    }
  }
  for (std::size_t v : d.diamond) {
    bool leaks = false;
    for (std::size_t w : g.successors(v)) leaks = leaks || !in[w];
    for (std::size_t m : g.sink_modes(v)) leaks = leaks || !contains(pair.outputs, m);
    bool enters = false;
    for (std::size_t w : g.predecessors(v)) enters = enters || !in[w];
    for (std::size_t m : g.source_modes(v)) enters = enters || !contains(pair.inputs, m);
    if (leaks) d.leaking.push_back(v);
    if (leaks || enters) d.surface.push_back(v);
  }
  return d;
}

CausalDiamond find_causal_diamond(const CircuitGraph& g, std::size_t s, std::size_t a) {
  if (s >= g.dim() || a >= g.dim()) throw LookupError("mode out of range");
  return find_causal_diamond(g, ModePair::single(s, a));
}

std::vector<std::size_t> tunable_cells(const CircuitGraph& g, const std::vector<ModePair>& pairs,
                                       TunableSet set) {
  std::vector<std::size_t> out;
  if (set == TunableSet::all) {
    for (std::size_t v = 0; v < g.vertex_count(); ++v) out.push_back(v);
    return out;
  }
  for (const auto& p : pairs) {
    const CausalDiamond d = find_causal_diamond(g, p);
    const auto& src = set == TunableSet::leaking ? d.leaking : set == TunableSet::surface ? d.surface : d.diamond;
    out.insert(out.end(), src.begin(), src.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double multi_pair_figure_of_merit(std::span<const double> p, MeritMode mode) {
  if (p.empty()) throw DomainError("figure of merit needs at least one probability");
  switch (mode) {
    case MeritMode::mean: {
      double s = 0;
      for (double x : p) s += x;
      return s / static_cast<double>(p.size());
    }
    case MeritMode::geometric_mean: {
      double s = 0;
      for (double x : p) {
        if (x <= 0.0) return 0.0;
        s += std::log(x);
      }
      return std::exp(s / static_cast<double>(p.size()));
    }
    case MeritMode::min:
      return *std::min_element(p.begin(), p.end());
  }
  return 0.0;
}

Probe Probe::from_pair(std::size_t dim, const ModePair& pair, const WavelengthSpec& wl) {
  if (pair.inputs.empty() || pair.outputs.empty()) throw DomainError("mode pair needs inputs and outputs");
  Probe p;
  p.input = CVector::Zero(static_cast<Eigen::Index>(dim));
  const double amp = 1.0 / std::sqrt(static_cast<double>(pair.inputs.size()));
  for (std::size_t s : pair.inputs) {
    if (s >= dim) throw LookupError("input mode out of range");
    p.input(static_cast<Eigen::Index>(s)) = amp;
  }
  for (std::size_t a : pair.outputs) {
    if (a >= dim) throw LookupError("output mode out of range");
  }
  p.outputs = pair.outputs;
  p.wavelength = wl;
  return p;
}

double probe_probability(const CircuitGraph& g, const Probe& probe) {
  const CMatrix u = g.unitary(probe.wavelength).matrix();
  const CVector out = u * probe.input;
  double s = 0;
  for (std::size_t a : probe.outputs) s += std::norm(out(static_cast<Eigen::Index>(a)));
  return s;
}

std::vector<Probe> make_probes(const CircuitGraph& g, const std::vector<ModePair>& pairs,
                               const std::vector<WavelengthSpec>& wavelengths) {
  std::vector<Probe> out;
  for (const auto& p : pairs) {
    for (const auto& wl : wavelengths) out.push_back(Probe::from_pair(g.dim(), p, wl));
  }
  return out;
}

FastLayerEvaluator::FastLayerEvaluator(CircuitGraph& g, std::vector<Probe> probes)
    : g_(&g), probes_(std::move(probes)) {
  for (const auto& p : probes_) {
    if (static_cast<std::size_t>(p.input.size()) != g.dim()) throw StructuralError("probe dimension mismatch");
  }
  reset();
}

kernels::Mat2 FastLayerEvaluator::block(std::size_t v, const WavelengthSpec& wl) const {
  const auto& c = g_->cell(v);
  return wl.lambda == wl.lambda_nominal ? mzi_block(c.theta1, c.theta2) : mzi_block(c.theta1, c.theta2, wl);
}

namespace {

void rotate_pair(CVector& x, std::size_t a, std::size_t b, const kernels::Mat2& m) {
  const cplx u = x(static_cast<Eigen::Index>(a)), w = x(static_cast<Eigen::Index>(b));
  x(static_cast<Eigen::Index>(a)) = m.m00 * u + m.m01 * w;
  x(static_cast<Eigen::Index>(b)) = m.m10 * u + m.m11 * w;
}

kernels::Mat2 transposed(const kernels::Mat2& m) { return {m.m00, m.m10, m.m01, m.m11}; }
kernels::Mat2 conjugated(const kernels::Mat2& m) {
  return {std::conj(m.m00), std::conj(m.m01), std::conj(m.m10), std::conj(m.m11)};
}

}  // namespace

void FastLayerEvaluator::reset() {
  layer_ = 0;
  const auto& layers = g_->layers();
  const std::size_t n = g_->dim();
  states_.assign(probes_.size(), {});
  for (std::size_t p = 0; p < probes_.size(); ++p) {
    const Probe& pr = probes_[p];
    State& st = states_[p];
    st.before = pr.input;
    st.after_t = CMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(pr.outputs.size()));
    for (std::size_t j = 0; j < pr.outputs.size(); ++j) {
      const std::size_t a = pr.outputs[j];
      st.after_t(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(j)) =
          std::polar(1.0, phase_at_wavelength(g_->layout().output_phases[a], pr.wavelength));
    }
    // R ← R·L for L = last layer … layer 1; in transposed form rows mix with Bᵀ.
    for (std::size_t l = layers.size(); l-- > 1;) {
      for (std::size_t v : layers[l]) {
        const auto& c = g_->cell(v);
        apply_block_rows(st.after_t, c.mode_a, c.mode_b, transposed(block(v, pr.wavelength)));
      }
    }
    st.current = st.before;
    if (!layers.empty()) {
      for (std::size_t v : layers[0]) {
        const auto& c = g_->cell(v);
        rotate_pair(st.current, c.mode_a, c.mode_b, block(v, pr.wavelength));
      }
    }
  }
}

void FastLayerEvaluator::refresh_current(std::size_t p, std::size_t v) {
  State& st = states_[p];
  const auto& c = g_->cell(v);
  const auto a = static_cast<Eigen::Index>(c.mode_a), b = static_cast<Eigen::Index>(c.mode_b);
  st.current(a) = st.before(a);
  st.current(b) = st.before(b);
  rotate_pair(st.current, c.mode_a, c.mode_b, block(v, probes_[p].wavelength));
}

void FastLayerEvaluator::set_phase(std::size_t index, double value) {
  if (done()) throw DomainError("evaluator has passed the last layer");
  const std::size_t v = index / 2;
  const auto& cells = current_cells();
  if (std::find(cells.begin(), cells.end(), v) == cells.end()) {
    throw DomainError("phase does not belong to the current layer");
  }
  g_->set_phase(index, value);
  for (std::size_t p = 0; p < probes_.size(); ++p) refresh_current(p, v);
}

double FastLayerEvaluator::probability(std::size_t p) const {
  const State& st = states_.at(p);
  const auto n = static_cast<std::size_t>(st.current.size());
  const auto k = static_cast<std::size_t>(st.after_t.cols());
  // amplitudes_j = Σ_i after_t(i, j)·current_i
  double s = 0;
  for (std::size_t j = 0; j < k; ++j) {
    cplx amp = 0;
    for (std::size_t i = 0; i < n; ++i) {
      amp += st.after_t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *
             st.current(static_cast<Eigen::Index>(i));
    }
    s += std::norm(amp);
  }
  return s;
}

std::vector<double> FastLayerEvaluator::probabilities() const {
  std::vector<double> out(probes_.size());
  for (std::size_t p = 0; p < probes_.size(); ++p) out[p] = probability(p);
  return out;
}

void FastLayerEvaluator::advance() {
  if (done()) return;
  const auto& layers = g_->layers();
  ++layer_;
  for (std::size_t p = 0; p < probes_.size(); ++p) {
    State& st = states_[p];
    st.before = st.current;
    if (layer_ >= layers.size()) continue;
    for (std::size_t v : layers[layer_]) {
      const auto& c = g_->cell(v);
      const kernels::Mat2 b = block(v, probes_[p].wavelength);
      // R ← R·L⁻¹ with L⁻¹ = L†; transposed rows mix with conj(B).
      apply_block_rows(st.after_t, c.mode_a, c.mode_b, conjugated(b));
      rotate_pair(st.current, c.mode_a, c.mode_b, b);
    }
  }
}

namespace {

// Maximizes f on [lo, hi] by golden-section search.
template <class F>
std::pair<double, double> golden_max(F&& f, double lo, double hi, int iters, std::size_t& evals) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  evals += 2;
  for (int i = 0; i < iters; ++i) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + r * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - r * (hi - lo);
      f1 = f(x1);
    }
    ++evals;
  }
  return f1 >= f2 ? std::pair{x1, f1} : std::pair{x2, f2};
}

}  // namespace

SweepResult update_sequential(CircuitGraph& g, const std::vector<ModePair>& pairs,
                              std::span<const std::size_t> cells, const SequentialOptions& options) {
  if (options.grid_points == 0) throw DomainError("phase grid needs at least one point");
  FastLayerEvaluator ev(g, make_probes(g, pairs, options.wavelengths));
  std::vector<char> tunable(g.vertex_count(), 0);
  for (std::size_t v : cells) tunable.at(v) = 1;

  SweepResult res;
  auto merit = [&] {
    ++res.evaluations;
    const auto p = ev.probabilities();
    return multi_pair_figure_of_merit(p, options.merit);
  };
  double current = merit();
  res.merit_before = current;

  const double step = kTwoPi / static_cast<double>(options.grid_points);
  for (; !ev.done(); ev.advance()) {
    for (std::size_t v : ev.current_cells()) {
      if (!tunable[v]) continue;
      for (std::size_t idx : {2 * v, 2 * v + 1}) {
        double best_val = g.phase(idx), best = current;
        for (std::size_t k = 0; k < options.grid_points; ++k) {
          const double t = step * static_cast<double>(k);
          ev.set_phase(idx, t);
          const double m = merit();
          if (m > best) {
            best = m;
            best_val = t;
          }
        }
        if (options.golden_refine) {
          auto f = [&](double t) {
            ev.set_phase(idx, t);
            return merit();
          };
          const auto [t, m] = golden_max(f, best_val - step, best_val + step, 24, res.evaluations);
          if (m > best) {
            best = m;
            best_val = t;
          }
        }
        ev.set_phase(idx, wrap_phase(best_val));
        current = merit();
        ++res.phases_tuned;
      }
    }
  }
  res.probabilities = ev.probabilities();
  res.merit_after = multi_pair_figure_of_merit(res.probabilities, options.merit);
  return res;
}

double evaluate_merit(const CircuitGraph& g, const std::vector<ModePair>& pairs, MeritMode mode,
                      const std::vector<WavelengthSpec>& wavelengths) {
  std::vector<double> p;
  for (const auto& probe : make_probes(g, pairs, wavelengths)) p.push_back(probe_probability(g, probe));
  return multi_pair_figure_of_merit(p, mode);
}

SweepResult update_gradient(CircuitGraph& g, const std::vector<ModePair>& pairs,
                            std::span<const std::size_t> cells, const GradientOptions& options) {
  const auto probes = make_probes(g, pairs, options.wavelengths);
  SweepResult res;
  auto merit = [&] {
    ++res.evaluations;
    std::vector<double> p;
    for (const auto& pr : probes) p.push_back(probe_probability(g, pr));
    return multi_pair_figure_of_merit(p, options.merit);
  };
  res.merit_before = merit();
  std::vector<std::pair<std::size_t, double>> grad;
  for (std::size_t v : cells) {
    for (std::size_t idx : {2 * v, 2 * v + 1}) {
      const double t = g.phase(idx);
      g.set_phase(idx, t + options.step);
      const double up = merit();
      g.set_phase(idx, t - options.step);
      const double down = merit();
      g.set_phase(idx, t);
      grad.emplace_back(idx, (up - down) / (2 * options.step));
    }
  }
  for (const auto& [idx, d] : grad) g.set_phase(idx, wrap_phase(g.phase(idx) + options.learning_rate * d));
  res.phases_tuned = grad.size();
  for (const auto& pr : probes) res.probabilities.push_back(probe_probability(g, pr));
  res.merit_after = multi_pair_figure_of_merit(res.probabilities, options.merit);
  return res;
}

}  // namespace qps
