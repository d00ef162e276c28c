#include <doctest.h>

#include <set>

#include "qps/ecm.hpp"

using namespace qps;

namespace {

CMatrix layered_product(const UnitaryRoute& r) {
  const auto n = static_cast<Eigen::Index>(r.size);
  CMatrix u = CMatrix::Identity(n, n);
  for (const auto& layer : layer_grouping(r)) {
    CMatrix l = CMatrix::Identity(n, n);
    // Steps within a layer commute; apply them in reverse to exercise that.
    for (auto it = layer.rbegin(); it != layer.rend(); ++it) l = r.steps[*it].matrix * l;
    u = l * u;
  }
  return u;
}

}  // namespace

TEST_CASE("example graph orders to the identity") {
  EcmGraph g = example_ecm_graph();
  CHECK_NOTHROW(g.validate());
  const auto o = topological_order(g);
  for (std::size_t r = 0; r < 9; ++r) CHECK(g.label(o.order[r]) == std::to_string(r + 1));
}

TEST_CASE("single edge ordering") {
  EcmGraph g;
  g.add_vertex("s", ClipTag::percept);
  g.add_vertex("a", ClipTag::action);
  g.add_edge("s", "a");
  const auto o = topological_order(g);
  CHECK(o.rank[g.index_of("s")] == 0);
  CHECK(o.rank[g.index_of("a")] == 1);
}

TEST_CASE("random DAG orderings respect every edge") {
  Rng rng(2);
  EcmGraph g = random_ecm_graph(50, rng);
  const auto o = topological_order(g);
  for (const auto& [a, b] : g.edges()) CHECK(o.rank[a] < o.rank[b]);
}

TEST_CASE("cycle is reported with its vertices") {
  EcmGraph g;
  for (auto l : {"p", "x", "y", "z", "a"}) g.add_vertex(l, ClipTag::intermediate);
  g.add_edge("p", "x");
  g.add_edge("x", "y");
  g.add_edge("y", "z");
  g.add_edge("z", "x");
  g.add_edge("z", "a");
  try {
    topological_order(g);
    FAIL("expected a cycle");
  } catch (const CycleError& e) {
    std::set<std::string> c(e.cycle().begin(), e.cycle().end());
    CHECK(c == std::set<std::string>{"x", "y", "z"});
  }
}

TEST_CASE("tags must agree with structure") {
  EcmGraph g;
  g.add_vertex("s", ClipTag::percept);
  g.add_vertex("a", ClipTag::intermediate);
  g.add_edge("s", "a");
  CHECK_THROWS_AS(g.validate(), StructuralError);
}

TEST_CASE("route step support of the merged clip") {
  Rng rng(3);
  EcmGraph g = example_ecm_graph();
  const auto o = topological_order(g);
  const auto r = random_route(g, o, rng);
  CHECK(r.steps.size() == 7);
  const auto& s4 = r.steps[1];
  CHECK(s4.vertex == 3);
  CHECK(s4.support == std::vector<std::size_t>{0, 1, 3});
  for (Eigen::Index i = 0; i < 9; ++i) {
    for (Eigen::Index j = 0; j < 9; ++j) {
      const bool on = (i == 0 || i == 1 || i == 3) && (j == 0 || j == 1 || j == 3);
      if (!on) CHECK(s4.matrix(i, j) == (i == j ? cplx(1) : cplx(0)));
    }
  }
  CHECK(ecm_unitary(r).unitarity_defect() < 1e-10);
}

TEST_CASE("block size mismatch") {
  EcmGraph g = example_ecm_graph();
  std::vector<CMatrix> blocks(9, CMatrix::Identity(2, 2));
  CHECK_THROWS_AS(route(g, topological_order(g), blocks), StructuralError);
}

TEST_CASE("identity blocks give the identity") {
  EcmGraph g = example_ecm_graph();
  std::vector<CMatrix> blocks(9);
  for (std::size_t v = 0; v < 9; ++v) {
    const auto m = static_cast<Eigen::Index>(g.parents(v).size() + 1);
    blocks[v] = CMatrix::Identity(m, m);
  }
  const auto r = route(g, topological_order(g), blocks);
  CHECK((ecm_unitary(r).matrix() - CMatrix::Identity(9, 9)).norm() < 1e-15);
}

TEST_CASE("router inverse recovers the ordered graph") {
  Rng rng(5);
  EcmGraph g = example_ecm_graph();
  const auto o = topological_order(g);
  CHECK(router_inverse(random_route(g, o, rng)) == ordered_dag(g, o));
  for (int t = 0; t < 100; ++t) {
    EcmGraph h = random_ecm_graph(2 + uniform_index(rng, 19), rng);
    const auto oh = topological_order(h);
    CHECK(router_inverse(random_route(h, oh, rng)) == ordered_dag(h, oh));
  }
}

TEST_CASE("layer grouping preserves the product") {
  Rng rng(6);
  for (int t = 0; t < 20; ++t) {
    EcmGraph g = random_ecm_graph(3 + uniform_index(rng, 15), rng);
    const auto r = random_route(g, topological_order(g), rng);
    CHECK((layered_product(r) - ecm_unitary(r).matrix()).norm() < 1e-12);
  }
  const auto ex = random_route(example_ecm_graph(), topological_order(example_ecm_graph()), rng);
  CHECK(layer_grouping(ex).size() < ex.steps.size());
}

TEST_CASE("swapping steps with disjoint supports commutes, overlapping does not") {
  Rng rng(9);
  EcmGraph g = example_ecm_graph();
  auto r = random_route(g, topological_order(g), rng);
  // Clips 5 and 6 have supports {1,4} and {2,3,5} in 0-based ranks.
  auto swapped = r;
  std::swap(swapped.steps[2], swapped.steps[3]);
  CHECK((ecm_unitary(swapped).matrix() - ecm_unitary(r).matrix()).norm() < 1e-12);
  auto clash = r;
  std::swap(clash.steps[0], clash.steps[1]);
  CHECK((ecm_unitary(clash).matrix() - ecm_unitary(r).matrix()).norm() > 1e-6);
}

TEST_CASE("different orderings can give different unitaries") {
  EcmGraph g = example_ecm_graph();
  Rng rng(10);
  std::vector<CMatrix> blocks(9);
  for (std::size_t v = 0; v < 9; ++v) {
    if (!g.parents(v).empty()) blocks[v] = haar_unitary(g.parents(v).size() + 1, rng);
  }
  const auto o1 = topological_order(g);
  // Vertex 5 before 4: both orderings are valid.
  const auto o2 = make_ordering(g, {0, 1, 2, 4, 3, 5, 6, 7, 8});
  const CMatrix u1 = ecm_unitary(route(g, o1, blocks)).matrix();
  const CMatrix u2 = ecm_unitary(route(g, o2, blocks)).matrix();
  // Compare in label space.
  CMatrix u2l = CMatrix::Zero(9, 9), u1l = CMatrix::Zero(9, 9);
  for (std::size_t a = 0; a < 9; ++a) {
    for (std::size_t b = 0; b < 9; ++b) {
      u1l(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          u1(static_cast<Eigen::Index>(o1.rank[a]), static_cast<Eigen::Index>(o1.rank[b]));
      u2l(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          u2(static_cast<Eigen::Index>(o2.rank[a]), static_cast<Eigen::Index>(o2.rank[b]));
    }
  }
  CHECK((u1l - u2l).norm() > 0.1);
}

TEST_CASE("reachable subgraph") {
  EcmGraph g = example_ecm_graph();
  EcmGraph s1 = reachable_subgraph(g, "1");
  std::set<std::string> got;
  for (std::size_t v = 0; v < s1.size(); ++v) got.insert(s1.label(v));
  CHECK(got == std::set<std::string>{"1", "3", "4", "6", "7", "8", "9"});
  CHECK_NOTHROW(s1.validate());
  CHECK_THROWS_AS(reachable_subgraph(g, "nope"), LookupError);

  EcmGraph lone;
  lone.add_vertex("s", ClipTag::percept);
  CHECK(reachable_subgraph(lone, "s").size() == 1);
}
