#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qps/mesh.hpp"
#include "qps/random.hpp"

namespace qps {

enum class ClipTag { percept, intermediate, action };

std::string_view tag_name(ClipTag tag);
/// Throws ParseError for unknown names.
ClipTag parse_tag(std::string_view name);

/// Episodic and compositional memory: a connected DAG whose parentless
/// vertices are percepts and childless vertices are actions.
class EcmGraph {
 public:
  /// Returns the new vertex index; throws StructuralError on duplicate labels.
  std::size_t add_vertex(std::string label, ClipTag tag);
  void add_edge(std::size_t from, std::size_t to);
  void add_edge(const std::string& from, const std::string& to);

  std::size_t size() const noexcept { return labels_.size(); }
  const std::string& label(std::size_t v) const { return labels_.at(v); }
  ClipTag tag(std::size_t v) const { return tags_.at(v); }
  const std::vector<std::size_t>& children(std::size_t v) const { return children_.at(v); }
  const std::vector<std::size_t>& parents(std::size_t v) const { return parents_.at(v); }
  /// Throws LookupError for unknown labels.
  std::size_t index_of(const std::string& label) const;
  std::vector<std::pair<std::size_t, std::size_t>> edges() const;
  std::vector<std::size_t> vertices_with(ClipTag tag) const;

  /// Checks acyclicity (CycleError), connectivity and that tags agree with
  /// the parent/child structure (StructuralError).
  void validate() const;

 private:
  std::vector<std::string> labels_;
  std::vector<ClipTag> tags_;
  std::vector<std::vector<std::size_t>> children_, parents_;
};

/// Label comparison used for deterministic tie-breaking: numeric when both
/// labels are decimal integers, lexicographic otherwise.
bool natural_less(const std::string& a, const std::string& b);

/// order[r] is the vertex placed at rank r (0-based); rank[v] the inverse.
struct TopologicalOrdering {
  std::vector<std::size_t> order;
  std::vector<std::size_t> rank;
};

/// Kahn's algorithm, always taking the smallest available label.
TopologicalOrdering topological_order(const EcmGraph& g);
/// Checks that `order` is a permutation respecting every edge.
TopologicalOrdering make_ordering(const EcmGraph& g, std::vector<std::size_t> order);

/// DAG on ranks 0..n−1 whose edges all go from lower to higher rank.
struct OrderedDag {
  std::size_t size = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  ///< sorted

  bool operator==(const OrderedDag&) const = default;
};

OrderedDag ordered_dag(const EcmGraph& g, const TopologicalOrdering& o);

/// One mode-mixing transformation U^k of a route. Indices are ranks.
struct RouteStep {
  std::size_t vertex = 0;             ///< rank k
  std::vector<std::size_t> support;   ///< sorted ranks of {k} ∪ parents(k)
  CMatrix matrix;                     ///< full n×n unitary, identity off-support
};

/// Steps in ascending rank; percepts contribute no step.
struct UnitaryRoute {
  std::size_t size = 0;
  std::vector<RouteStep> steps;
};

/// Builds a route. blocks[v] (indexed by vertex, ignored for percepts) is
/// the unitary on the support of v, rows and columns in ascending rank.
UnitaryRoute route(const EcmGraph& g, const TopologicalOrdering& o, std::span<const CMatrix> blocks);
/// Same with Haar-random blocks.
UnitaryRoute random_route(const EcmGraph& g, const TopologicalOrdering& o, Rng& rng);

/// Recovers the ordered DAG: vertices from the matrix size and an edge (j,k)
/// for every nonzero U^k_{jk}, j ≠ k.
OrderedDag router_inverse(const UnitaryRoute& r);

/// U^{last} ⋯ U^{first}.
UnitaryMatrix ecm_unitary(const UnitaryRoute& r);

/// Greedy grouping of consecutive steps with pairwise disjoint supports;
/// returns step indices per layer.
std::vector<std::vector<std::size_t>> layer_grouping(const UnitaryRoute& r);

/// Subgraph induced on the percept and all its descendants.
EcmGraph reachable_subgraph(const EcmGraph& g, const std::string& percept);

/// The nine-clip example graph with two percepts, five intermediate clips
/// and two actions, labeled "1".."9" in topological order.
EcmGraph example_ecm_graph();

/// Random connected ECM graph on `n` vertices whose labels follow a
/// topological order; each vertex after the first gets 1–3 parents among
/// earlier ones.
EcmGraph random_ecm_graph(std::size_t n, Rng& rng);

}  // namespace qps
