#include <doctest.h>

#include <algorithm>
#include <set>

#include "msm/graph.hpp"
#include "msm/rng.hpp"
#include "../helpers.hpp"

using msm::DataError;
using msm::HeterogeneousGraph;
using msm::NodeId;

TEST_CASE("graph: dense ids in insertion order") {
  HeterogeneousGraph g;
  CHECK(g.add_node("u1", "U") == 0);
  CHECK(g.add_node("i1", "I") == 1);
}

TEST_CASE("graph: re-adding a node is idempotent") {
  HeterogeneousGraph g;
  const NodeId a = g.add_node("u1", "U");
  CHECK(g.add_node("u1", "U") == a);
  CHECK(g.num_nodes() == 1);
}

TEST_CASE("graph: node type conflict is an error") {
  HeterogeneousGraph g;
  g.add_node("u1", "U");
  CHECK_THROWS_AS(g.add_node("u1", "I"), DataError);
}

TEST_CASE("graph: add_edge basics") {
  HeterogeneousGraph g;
  g.add_node("u1", "U");
  g.add_node("i1", "I");
  g.add_edge(0, 1, "click_item");
  g.freeze();
  const msm::EdgeTypeId r = *g.edge_type_registry().find("click_item");
  CHECK(g.neighbors(0, r) == std::vector<NodeId>{1});
  CHECK(g.neighbors(1, r) == std::vector<NodeId>{0});
}

TEST_CASE("graph: duplicate edges collapse") {
  HeterogeneousGraph g;
  g.add_node("u1", "U");
  g.add_node("i1", "I");
  g.add_edge(0, 1, "r");
  g.add_edge(0, 1, "r");
  g.add_edge(1, 0, "r");
  g.freeze();
  CHECK(g.neighbors(0, 0).size() == 1);
  CHECK(g.edge_count(0) == 1);
}

TEST_CASE("graph: self-loops and unknown nodes rejected") {
  HeterogeneousGraph g;
  g.add_node("u1", "U");
  CHECK_THROWS_AS(g.add_edge(0, 0, "r"), DataError);
  CHECK_THROWS_AS(g.add_edge(0, 5, "r"), DataError);
}

TEST_CASE("graph: neighbors sorted, isolated node empty") {
  HeterogeneousGraph g;
  for (int i = 0; i < 4; ++i) g.add_node("n" + std::to_string(i), "U");
  g.add_edge(0, 2, "r");
  g.add_edge(0, 1, "r");
  g.freeze();
  CHECK(g.neighbors(0, 0) == std::vector<NodeId>{1, 2});
  CHECK(g.neighbors(3, 0).empty());
}

TEST_CASE("graph: degree sum equals twice the edge count") {
  const auto g = testutil::random_graph(2, 25, 3, 0.15, 77);
  for (msm::EdgeTypeId r = 0; r < g.num_edge_types(); ++r) {
    std::size_t degree_sum = 0;
    for (NodeId v = 0; v < g.num_nodes(); ++v)
      degree_sum += g.neighbors(v, r).size();
    CHECK(degree_sum == 2 * g.edge_count(r));
  }
}

TEST_CASE("graph: typed_neighbors filters by node type") {
  HeterogeneousGraph g;
  const NodeId u = g.add_node("u", "U");
  const NodeId i = g.add_node("i", "I");
  const NodeId v = g.add_node("v", "V");
  g.add_edge(u, i, "r");
  g.add_edge(u, v, "r");
  g.freeze();
  const auto type_i = *g.node_type_registry().find("I");
  const auto type_u = *g.node_type_registry().find("U");
  CHECK(g.typed_neighbors(u, 0, type_i) == std::vector<NodeId>{i});
  CHECK(g.typed_neighbors(u, 0, type_u).empty());
}

TEST_CASE("graph: typed_neighbors partitions neighbors") {
  const auto g = testutil::random_graph(3, 12, 2, 0.2, 13);
  for (msm::EdgeTypeId r = 0; r < g.num_edge_types(); ++r)
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
      std::vector<NodeId> merged;
      for (msm::NodeTypeId t = 0; t < g.num_node_types(); ++t) {
        const auto part = g.typed_neighbors(v, r, t);
        merged.insert(merged.end(), part.begin(), part.end());
      }
      std::sort(merged.begin(), merged.end());
      CHECK(merged == g.neighbors(v, r));
    }
}

TEST_CASE("graph: symmetry over random insert sequences") {
  msm::Rng rng(123);
  HeterogeneousGraph g;
  for (int i = 0; i < 30; ++i)
    g.add_node("n" + std::to_string(i), i % 2 ? "A" : "B");
  g.register_edge_type("r0");
  g.register_edge_type("r1");
  for (int e = 0; e < 200; ++e) {
    const NodeId u = static_cast<NodeId>(rng.index(30));
    const NodeId v = static_cast<NodeId>(rng.index(30));
    if (u == v) continue;
    g.add_edge(u, v, static_cast<msm::EdgeTypeId>(rng.index(2)));
  }
  g.freeze();
  for (msm::EdgeTypeId r = 0; r < 2; ++r)
    for (NodeId u = 0; u < g.num_nodes(); ++u)
      for (NodeId v : g.neighbors(u, r)) {
        const auto& back = g.neighbors(v, r);
        CHECK(std::binary_search(back.begin(), back.end(), u));
      }
}

TEST_CASE("graph: empty graph stats are all zeros") {
  HeterogeneousGraph g;
  g.freeze();
  const auto stats = g.stats();
  CHECK(stats.total_nodes == 0);
  CHECK(stats.total_edges == 0);
  CHECK(stats.nodes_per_type.empty());
  CHECK(stats.edges_per_type.empty());
}

TEST_CASE("graph: freeze gates mutation and reads") {
  HeterogeneousGraph g;
  g.add_node("a", "U");
  g.add_node("b", "U");
  g.add_edge(0, 1, "r");
  CHECK_THROWS_AS(g.neighbors(0, 0), DataError);  // not frozen yet
  g.freeze();
  CHECK_THROWS_AS(g.add_node("c", "U"), DataError);
  CHECK_THROWS_AS(g.add_edge(0, 1, "r"), DataError);
  CHECK(g.neighbors(0, 0).size() == 1);
}

TEST_CASE("graph: attribute dimension consistent per type") {
  HeterogeneousGraph g;
  g.add_node("a", "U");
  g.add_node("b", "U");
  g.set_attributes(0, {1.0, 2.0});
  CHECK_THROWS_AS(g.set_attributes(1, {1.0, 2.0, 3.0}), DataError);
  g.set_attributes(1, {3.0, 4.0});
  g.freeze();
  CHECK(g.attr_dim(0) == 2);
  CHECK(g.has_attributes(0));
  CHECK(g.attributes(1) == std::vector<double>{3.0, 4.0});
}
