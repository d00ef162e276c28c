#include "qps/ecm.hpp"

#include <algorithm>
#include <queue>
#include <sstream>

namespace qps {

std::string_view tag_name(ClipTag tag) {
  switch (tag) {
    case ClipTag::percept:
      return "percept";
    case ClipTag::intermediate:
      return "intermediate";
    case ClipTag::action:
      return "action";
  }
  return "?";
}

ClipTag parse_tag(std::string_view name) {
  if (name == "percept") return ClipTag::percept;
  if (name == "intermediate") return ClipTag::intermediate;
  if (name == "action") return ClipTag::action;
  throw ParseError("unknown vertex tag: " + std::string(name));
}

std::size_t EcmGraph::add_vertex(std::string label, ClipTag tag) {
  if (std::find(labels_.begin(), labels_.end(), label) != labels_.end()) {
    throw StructuralError("duplicate vertex label: " + label);
  }
  labels_.push_back(std::move(label));
  tags_.push_back(tag);
  children_.emplace_back();
  parents_.emplace_back();
  return labels_.size() - 1;
}

void EcmGraph::add_edge(std::size_t from, std::size_t to) {
  if (from >= size() || to >= size()) throw LookupError("edge endpoint out of range");
  if (from == to) throw StructuralError("self-loop on " + labels_[from]);
  if (std::find(children_[from].begin(), children_[from].end(), to) != children_[from].end()) return;
  children_[from].push_back(to);
  parents_[to].push_back(from);
}

void EcmGraph::add_edge(const std::string& from, const std::string& to) { add_edge(index_of(from), index_of(to)); }

std::size_t EcmGraph::index_of(const std::string& label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw LookupError("unknown vertex: " + label);
  return static_cast<std::size_t>(it - labels_.begin());
}

std::vector<std::pair<std::size_t, std::size_t>> EcmGraph::edges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t v = 0; v < size(); ++v) {
    for (std::size_t c : children_[v]) out.emplace_back(v, c);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> EcmGraph::vertices_with(ClipTag tag) const {
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < size(); ++v) {
    if (tags_[v] == tag) out.push_back(v);
  }
  return out;
}

void EcmGraph::validate() const {
  if (size() == 0) throw StructuralError("empty graph");
  topological_order(*this);  // throws CycleError
  // Weak connectivity.
  std::vector<char> seen(size(), 0);
  std::vector<std::size_t> stack{0};
  seen[0] = 1;
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    for (const auto* nb : {&children_[v], &parents_[v]}) {
      for (std::size_t w : *nb) {
        if (!seen[w]) {
          seen[w] = 1;
          stack.push_back(w);
        }
      }
    }
  }
  for (std::size_t v = 0; v < size(); ++v) {
    if (!seen[v]) throw StructuralError("graph is not connected: " + labels_[v] + " is unreachable");
  }
  for (std::size_t v = 0; v < size(); ++v) {
    const bool no_parents = parents_[v].empty(), no_children = children_[v].empty();
    const ClipTag expected = no_parents ? ClipTag::percept : no_children ? ClipTag::action : ClipTag::intermediate;
    if (size() > 1 && no_parents && no_children) throw StructuralError("isolated vertex " + labels_[v]);
    if (tags_[v] != expected) {
      throw StructuralError("vertex " + labels_[v] + " is tagged " + std::string(tag_name(tags_[v])) +
                            " but its edges make it " + std::string(tag_name(expected)));
    }
  }
}

bool natural_less(const std::string& a, const std::string& b) {
  auto numeric = [](const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
  };
  if (numeric(a) && numeric(b)) {
    const auto strip = [](const std::string& s) {
      const auto p = s.find_first_not_of('0');
      return p == std::string::npos ? std::string("0") : s.substr(p);
    };
    const std::string x = strip(a), y = strip(b);
    if (x.size() != y.size()) return x.size() < y.size();
    if (x != y) return x < y;
  }
  return a < b;
}

TopologicalOrdering topological_order(const EcmGraph& g) {
  const std::size_t n = g.size();
  std::vector<std::size_t> indeg(n);
  for (std::size_t v = 0; v < n; ++v) indeg[v] = g.parents(v).size();
  auto cmp = [&](std::size_t a, std::size_t b) { return natural_less(g.label(b), g.label(a)); };
  std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(cmp)> ready(cmp);
  for (std::size_t v = 0; v < n; ++v) {
    if (indeg[v] == 0) ready.push(v);
  }
  TopologicalOrdering o;
  while (!ready.empty()) {
    const std::size_t v = ready.top();
    ready.pop();
    o.order.push_back(v);
    for (std::size_t c : g.children(v)) {
      if (--indeg[c] == 0) ready.push(c);
    }
  }
  if (o.order.size() != n) {
    // Walk parent links among the unfinished vertices until one repeats.
    std::size_t v = 0;
    while (indeg[v] == 0) ++v;
    std::vector<std::size_t> trail;
    std::vector<long> pos(n, -1);
    while (pos[v] < 0) {
      pos[v] = static_cast<long>(trail.size());
      trail.push_back(v);
      for (std::size_t p : g.parents(v)) {
        if (indeg[p] > 0) {
          v = p;
          break;
        }
      }
    }
    std::vector<std::string> cycle;
    for (auto it = trail.begin() + pos[v]; it != trail.end(); ++it) cycle.push_back(g.label(*it));
    std::reverse(cycle.begin(), cycle.end());
    std::ostringstream os;
    os << "graph has a cycle:";
    for (const auto& l : cycle) os << ' ' << l;
    throw CycleError(os.str(), cycle);
  }
  o.rank.resize(n);
  for (std::size_t r = 0; r < n; ++r) o.rank[o.order[r]] = r;
  return o;
}

TopologicalOrdering make_ordering(const EcmGraph& g, std::vector<std::size_t> order) {
  const std::size_t n = g.size();
  if (order.size() != n) throw StructuralError("ordering size does not match the graph");
  TopologicalOrdering o;
  o.rank.assign(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    if (order[r] >= n || o.rank[order[r]] != n) throw StructuralError("ordering is not a permutation");
    o.rank[order[r]] = r;
  }
  for (const auto& [a, b] : g.edges()) {
    if (o.rank[a] >= o.rank[b]) throw StructuralError("ordering violates edge " + g.label(a) + "->" + g.label(b));
  }
  o.order = std::move(order);
  return o;
}

OrderedDag ordered_dag(const EcmGraph& g, const TopologicalOrdering& o) {
  OrderedDag d;
  d.size = g.size();
  for (const auto& [a, b] : g.edges()) d.edges.emplace_back(o.rank[a], o.rank[b]);
  std::sort(d.edges.begin(), d.edges.end());
  return d;
}

UnitaryRoute route(const EcmGraph& g, const TopologicalOrdering& o, std::span<const CMatrix> blocks) {
  const std::size_t n = g.size();
  if (blocks.size() != n) throw StructuralError("expected one coefficient block per vertex");
  UnitaryRoute r;
  r.size = n;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t v = o.order[k];
    if (g.parents(v).empty()) continue;
    RouteStep step;
    step.vertex = k;
    step.support.push_back(k);
    for (std::size_t p : g.parents(v)) step.support.push_back(o.rank[p]);
    std::sort(step.support.begin(), step.support.end());
    const CMatrix& b = blocks[v];
    const auto m = static_cast<Eigen::Index>(step.support.size());
    if (b.rows() != m || b.cols() != m) {
      std::ostringstream os;
      os << "block for vertex " << g.label(v) << " is " << b.rows() << "x" << b.cols() << ", expected " << m
         << "x" << m << " (itself plus " << m - 1 << " parents)";
      throw StructuralError(os.str());
    }
    step.matrix = CMatrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) {
        step.matrix(static_cast<Eigen::Index>(step.support[static_cast<std::size_t>(i)]),
                    static_cast<Eigen::Index>(step.support[static_cast<std::size_t>(j)])) = b(i, j);
      }
    }
    r.steps.push_back(std::move(step));
  }
  return r;
}

UnitaryRoute random_route(const EcmGraph& g, const TopologicalOrdering& o, Rng& rng) {
  std::vector<CMatrix> blocks(g.size());
  for (std::size_t v = 0; v < g.size(); ++v) {
    if (!g.parents(v).empty()) blocks[v] = haar_unitary(g.parents(v).size() + 1, rng);
  }
  return route(g, o, blocks);
}

OrderedDag router_inverse(const UnitaryRoute& r) {
  OrderedDag d;
  d.size = r.size;
  for (const auto& step : r.steps) {
    const auto k = static_cast<Eigen::Index>(step.vertex);
    if (step.matrix.rows() != static_cast<Eigen::Index>(r.size) || step.matrix.cols() != step.matrix.rows()) {
      throw StructuralError("route step has the wrong size");
    }
    for (Eigen::Index j = 0; j < step.matrix.rows(); ++j) {
      if (j != k && step.matrix(j, k) != cplx(0.0, 0.0)) d.edges.emplace_back(static_cast<std::size_t>(j), step.vertex);
    }
  }
  std::sort(d.edges.begin(), d.edges.end());
  return d;
}

UnitaryMatrix ecm_unitary(const UnitaryRoute& r) {
  CMatrix u = CMatrix::Identity(static_cast<Eigen::Index>(r.size), static_cast<Eigen::Index>(r.size));
  for (const auto& step : r.steps) u = step.matrix * u;
  return UnitaryMatrix::assume_unitary(std::move(u));
}

std::vector<std::vector<std::size_t>> layer_grouping(const UnitaryRoute& r) {
  std::vector<std::vector<std::size_t>> layers;
  std::vector<char> used(r.size, 0);
  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    const auto& sup = r.steps[i].support;
    const bool clash = layers.empty() || std::any_of(sup.begin(), sup.end(), [&](std::size_t x) { return used[x]; });
    if (clash) {
      layers.emplace_back();
      std::fill(used.begin(), used.end(), 0);
    }
    layers.back().push_back(i);
    for (std::size_t x : sup) used[x] = 1;
  }
  return layers;
}

EcmGraph reachable_subgraph(const EcmGraph& g, const std::string& percept) {
  const std::size_t s = g.index_of(percept);
  if (g.tag(s) != ClipTag::percept) throw LookupError(percept + " is not a percept");
  std::vector<char> seen(g.size(), 0);
  std::vector<std::size_t> stack{s};
  seen[s] = 1;
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    for (std::size_t c : g.children(v)) {
      if (!seen[c]) {
        seen[c] = 1;
        stack.push_back(c);
      }
    }
  }
  EcmGraph out;
  for (std::size_t v = 0; v < g.size(); ++v) {
    if (!seen[v]) continue;
    const bool has_parent = std::any_of(g.parents(v).begin(), g.parents(v).end(), [&](std::size_t p) { return seen[p]; });
    const ClipTag tag = !has_parent ? ClipTag::percept : g.children(v).empty() ? ClipTag::action : g.tag(v);
    out.add_vertex(g.label(v), tag);
  }
  for (const auto& [a, b] : g.edges()) {
    if (seen[a] && seen[b]) out.add_edge(g.label(a), g.label(b));
  }
  return out;
}

EcmGraph example_ecm_graph() {
  EcmGraph g;
  const ClipTag tags[9] = {ClipTag::percept,      ClipTag::percept,      ClipTag::intermediate,
                           ClipTag::intermediate, ClipTag::intermediate, ClipTag::intermediate,
                           ClipTag::intermediate, ClipTag::action,       ClipTag::action};
  for (int i = 0; i < 9; ++i) g.add_vertex(std::to_string(i + 1), tags[i]);
  const std::pair<int, int> edges[] = {{1, 3}, {1, 4}, {2, 4}, {2, 5}, {3, 6}, {4, 6},
                                       {4, 7}, {5, 7}, {6, 8}, {6, 9}, {7, 9}};
  for (const auto& [a, b] : edges) g.add_edge(std::to_string(a), std::to_string(b));
  return g;
}

EcmGraph random_ecm_graph(std::size_t n, Rng& rng) {
  if (n < 2) throw DomainError("an ECM graph needs at least two vertices");
  std::vector<std::vector<std::size_t>> parents(n);
  for (std::size_t v = 1; v < n; ++v) {
    const std::size_t k = std::min<std::size_t>(v, 1 + uniform_index(rng, 3));
    while (parents[v].size() < k) {
      const std::size_t p = uniform_index(rng, v);
      if (std::find(parents[v].begin(), parents[v].end(), p) == parents[v].end()) parents[v].push_back(p);
    }
  }
  std::vector<char> has_child(n, 0);
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t p : parents[v]) has_child[p] = 1;
  }
  EcmGraph g;
  for (std::size_t v = 0; v < n; ++v) {
    const ClipTag tag = parents[v].empty() ? ClipTag::percept : !has_child[v] ? ClipTag::action : ClipTag::intermediate;
    g.add_vertex(std::to_string(v + 1), tag);
  }
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t p : parents[v]) g.add_edge(p, v);
  }
  return g;
}

}  // namespace qps
