#include "qps/classical_ps.hpp"

#include <algorithm>

namespace qps {

ClassicalAgent::ClassicalAgent(EcmGraph graph, double gamma, double eta)
    : graph_(std::move(graph)), gamma_(gamma), eta_(eta) {
  if (gamma < 0 || gamma > 1) throw DomainError("gamma must lie in [0,1]");
  if (eta < 0 || eta > 1) throw DomainError("eta must lie in [0,1]");
  graph_.validate();
  h_.resize(graph_.size());
  g_.resize(graph_.size());
  for (std::size_t v = 0; v < graph_.size(); ++v) {
    h_[v].assign(graph_.children(v).size(), 1.0);
    g_[v].assign(graph_.children(v).size(), 0.0);
  }
}

void ClassicalAgent::set_h(std::size_t clip, std::size_t child_pos, double value) {
  if (!(value > 0)) throw DomainError("h-values must be positive");
  h_.at(clip).at(child_pos) = value;
}

std::vector<double> ClassicalAgent::transition_probabilities(std::size_t clip) const {
  const auto& h = h_.at(clip);
  if (h.empty()) throw StructuralError("clip " + graph_.label(clip) + " has no children");
  double total = 0;
  for (double x : h) total += x;
  std::vector<double> p(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) p[i] = h[i] / total;
  return p;
}

ClassicalAgent::Walk ClassicalAgent::walk(std::size_t percept, Rng& rng) const {
  if (percept >= graph_.size()) throw LookupError("unknown percept");
  Walk w;
  std::size_t v = percept;
  w.path.push_back(v);
  while (!graph_.children(v).empty()) {
    v = graph_.children(v)[sample_discrete(rng, h_[v])];
    w.path.push_back(v);
  }
  w.action = v;
  return w;
}

void ClassicalAgent::update(const std::vector<std::size_t>& path, double reward) {
  for (auto& row : g_) {
    for (double& x : row) x *= (1.0 - eta_);
  }
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const auto& ch = graph_.children(path[i]);
    auto it = std::find(ch.begin(), ch.end(), path[i + 1]);
    if (it == ch.end()) throw StructuralError("path uses a missing edge");
    g_[path[i]][static_cast<std::size_t>(it - ch.begin())] = 1.0;
  }
  for (std::size_t v = 0; v < h_.size(); ++v) {
    for (std::size_t i = 0; i < h_[v].size(); ++i) {
      const double h = 1.0 + (1.0 - gamma_) * (h_[v][i] - 1.0) + g_[v][i] * reward;
      h_[v][i] = std::max(h, h_floor);
    }
  }
}

Rational classical_transfer_bound() { return {8, 9}; }

}  // namespace qps
