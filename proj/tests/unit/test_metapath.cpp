#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "msm/metapath.hpp"
#include "msm/rng.hpp"
#include "../helpers.hpp"
#include "../oracles.hpp"

using msm::DataError;
using msm::HeterogeneousGraph;
using msm::MetapathSchema;
using msm::NodeId;
using msm::TrainingSample;
using msm::Walk;
using msm::WalkCorpus;

namespace {

HeterogeneousGraph alibaba_style_graph() {
  HeterogeneousGraph g;
  g.add_node("u0", "U");
  g.add_node("v0", "V");
  g.add_node("i0", "I");
  g.add_edge(0, 1, "watched_video");
  g.add_edge(1, 2, "conversion");
  g.register_edge_type("click_item");
  g.freeze();
  return g;
}

bool same_corpus(const WalkCorpus& a, const WalkCorpus& b) {
  if (a.walks.size() != b.walks.size()) return false;
  for (std::size_t i = 0; i < a.walks.size(); ++i)
    if (a.walks[i].nodes != b.walks[i].nodes ||
        a.walks[i].target_edge_type != b.walks[i].target_edge_type)
      return false;
  return true;
}

}  // namespace

TEST_CASE("metapath: parse full schema with target clause") {
  const auto g = alibaba_style_graph();
  const auto s = msm::parse_schema(
      "U -watched_video-> V -conversion-> I @ click_item", g);
  REQUIRE(s.node_types.size() == 3);
  CHECK(s.node_types[0] == *g.node_type_registry().find("U"));
  CHECK(s.node_types[1] == *g.node_type_registry().find("V"));
  CHECK(s.node_types[2] == *g.node_type_registry().find("I"));
  REQUIRE(s.edge_types.size() == 2);
  CHECK(s.edge_types[0] == *g.edge_type_registry().find("watched_video"));
  CHECK(s.edge_types[1] == *g.edge_type_registry().find("conversion"));
  CHECK(s.target_edge_type == *g.edge_type_registry().find("click_item"));
  CHECK_FALSE(s.cyclic);
}

TEST_CASE("metapath: homogeneous two-step schema is cyclic, default target") {
  HeterogeneousGraph g;
  g.add_node("a", "U");
  g.add_node("b", "U");
  g.add_edge(0, 1, "r");
  g.freeze();
  const auto s = msm::parse_schema("U -r-> U", g);
  CHECK(s.cyclic);
  CHECK(s.target_edge_type == *g.edge_type_registry().find("r"));
}

TEST_CASE("metapath: unknown types are named in errors") {
  const auto g = alibaba_style_graph();
  CHECK_THROWS_WITH_AS(msm::parse_schema("U -bogus-> I", g),
                       doctest::Contains("bogus"), DataError);
  CHECK_THROWS_AS(msm::parse_schema("U -watched_video->", g), DataError);
  CHECK_THROWS_AS(msm::parse_schema("U", g), DataError);
}

TEST_CASE("metapath: parsing is whitespace-insensitive") {
  const auto g = alibaba_style_graph();
  const auto a = msm::parse_schema("U -watched_video-> V", g);
  const auto b = msm::parse_schema("  U-watched_video->V  ", g);
  CHECK(a.node_types == b.node_types);
  CHECK(a.edge_types == b.edge_types);
  CHECK(a.target_edge_type == b.target_edge_type);
}

TEST_CASE("metapath: format_schema round-trips") {
  const auto g = alibaba_style_graph();
  const auto s = msm::parse_schema(
      "U -watched_video-> V -conversion-> I @ click_item", g);
  const auto again = msm::parse_schema(msm::format_schema(s, g), g);
  CHECK(again.node_types == s.node_types);
  CHECK(again.edge_types == s.edge_types);
  CHECK(again.target_edge_type == s.target_edge_type);
}

TEST_CASE("metapath: forced single-edge walks") {
  HeterogeneousGraph g;
  g.add_node("u", "U");
  g.add_node("i", "I");
  g.add_edge(0, 1, "r");
  g.freeze();
  const auto s = msm::parse_schema("U -r-> I", g);
  const auto corpus = msm::generate_walks(g, s, 4, 10, 1);
  REQUIRE(corpus.walks.size() == 4);  // only the U node starts walks
  for (const auto& w : corpus.walks) {
    CHECK(w.nodes == std::vector<NodeId>({0, 1}));
    CHECK(w.target_edge_type == s.target_edge_type);
  }
}

TEST_CASE("metapath: cyclic schema alternates types to max_length") {
  HeterogeneousGraph g;
  const NodeId u0 = g.add_node("u0", "U"), u1 = g.add_node("u1", "U");
  const NodeId i0 = g.add_node("i0", "I"), i1 = g.add_node("i1", "I");
  for (NodeId u : {u0, u1})
    for (NodeId i : {i0, i1}) {
      g.add_edge(u, i, "r");
      g.add_edge(u, i, "s");
    }
  g.freeze();
  const auto s = msm::parse_schema("U -r-> I -s-> U", g);
  const auto corpus = msm::generate_walks(g, s, 5, 7, 3);
  REQUIRE(corpus.walks.size() == 10);
  const auto type_u = *g.node_type_registry().find("U");
  const auto type_i = *g.node_type_registry().find("I");
  const auto r = *g.edge_type_registry().find("r");
  const auto sx = *g.edge_type_registry().find("s");
  for (const auto& w : corpus.walks) {
    REQUIRE(w.nodes.size() == 7);
    for (std::size_t t = 0; t < 7; ++t)
      CHECK(g.node_type(w.nodes[t]) == (t % 2 == 0 ? type_u : type_i));
    for (std::size_t t = 0; t + 1 < 7; ++t)
      CHECK(g.has_edge(w.nodes[t], w.nodes[t + 1], t % 2 == 0 ? r : sx));
  }
}

TEST_CASE("metapath: next hop is uniform over typed neighbors") {
  HeterogeneousGraph g;
  g.add_node("u", "U");
  const std::size_t fanout = 5;
  for (std::size_t i = 0; i < fanout; ++i)
    g.add_node("i" + std::to_string(i), "I");
  for (std::size_t i = 0; i < fanout; ++i)
    g.add_edge(0, static_cast<NodeId>(1 + i), "r");
  g.freeze();
  const auto s = msm::parse_schema("U -r-> I", g);
  const std::size_t n = 10000;
  const auto corpus = msm::generate_walks(g, s, n, 4, 17);
  REQUIRE(corpus.walks.size() == n);
  std::vector<std::size_t> counts(fanout, 0);
  for (const auto& w : corpus.walks) ++counts[w.nodes[1] - 1];
  std::vector<double> expected(fanout, static_cast<double>(n) / fanout);
  CHECK(oracle::chi2_stat(counts, expected) <
        oracle::chi2_crit99(fanout - 1));
}

TEST_CASE("metapath: all transitions conform to the schema") {
  msm::Rng pick(99);
  for (int trial = 0; trial < 8; ++trial) {
    const auto g = testutil::random_graph(2, 15, 2, 0.25, 1000 + trial);
    // Random 3-position schema over existing registries; walks may die,
    // but whatever is emitted must conform.
    const auto& nreg = g.node_type_registry();
    const auto& ereg = g.edge_type_registry();
    MetapathSchema s;
    s.node_types = {static_cast<msm::NodeTypeId>(pick.index(nreg.size())),
                    static_cast<msm::NodeTypeId>(pick.index(nreg.size())),
                    static_cast<msm::NodeTypeId>(pick.index(nreg.size()))};
    s.edge_types = {static_cast<msm::EdgeTypeId>(pick.index(ereg.size())),
                    static_cast<msm::EdgeTypeId>(pick.index(ereg.size()))};
    s.target_edge_type = s.edge_types[0];
    s.cyclic = s.node_types.front() == s.node_types.back();
    const auto corpus = msm::generate_walks(g, s, 3, 9, 55 + trial);
    for (const auto& w : corpus.walks) {
      REQUIRE(w.nodes.size() >= 2);
      for (std::size_t t = 0; t + 1 < w.nodes.size(); ++t) {
        const std::size_t pos = t % (s.node_types.size() - 1);
        CHECK(g.node_type(w.nodes[t]) == s.node_types[pos]);
        CHECK(g.node_type(w.nodes[t + 1]) == s.node_types[pos + 1]);
        CHECK(g.has_edge(w.nodes[t], w.nodes[t + 1], s.edge_types[pos]));
      }
    }
  }
}

TEST_CASE("metapath: walk generation is deterministic under seed") {
  const auto g = testutil::random_graph(1, 25, 2, 0.2, 5);
  const auto s = msm::parse_schema("t0 -e0-> t0", g);
  const auto a = msm::generate_walks(g, s, 5, 9, 123);
  const auto b = msm::generate_walks(g, s, 5, 9, 123);
  const auto c = msm::generate_walks(g, s, 5, 9, 124);
  CHECK(same_corpus(a, b));
  CHECK_FALSE(same_corpus(a, c));
}

TEST_CASE("metapath: context pairs enumerate the window") {
  WalkCorpus corpus;
  corpus.walks.push_back({{10, 11, 12}, 3});
  const auto pairs = msm::context_pairs(corpus, 1);
  const std::vector<TrainingSample> expected = {
      {10, 11, 3}, {11, 10, 3}, {11, 12, 3}, {12, 11, 3}};
  CHECK(pairs == expected);
}

TEST_CASE("metapath: window clips at walk ends") {
  WalkCorpus corpus;
  corpus.walks.push_back({{1, 2}, 0});
  CHECK(msm::context_pairs(corpus, 10).size() == 2);
}

TEST_CASE("metapath: pair count matches the window formula") {
  // Walks with all-distinct nodes, so the self-pair rule cannot fire and
  // the brute-force window count applies exactly.
  msm::Rng rng(31);
  WalkCorpus corpus;
  for (int w = 0; w < 50; ++w) {
    Walk walk;
    walk.target_edge_type = 0;
    const std::size_t len = 2 + rng.index(9);
    for (std::size_t t = 0; t < len; ++t)
      walk.nodes.push_back(static_cast<NodeId>(w * 16 + t));  // distinct
    corpus.walks.push_back(std::move(walk));
  }
  const std::size_t p = 4;
  std::size_t expected = 0;
  for (const auto& w : corpus.walks) {
    const std::ptrdiff_t len = static_cast<std::ptrdiff_t>(w.nodes.size());
    for (std::ptrdiff_t t = 0; t < len; ++t)
      for (std::ptrdiff_t off = -static_cast<std::ptrdiff_t>(p);
           off <= static_cast<std::ptrdiff_t>(p); ++off) {
        if (off == 0) continue;
        if (t + off >= 0 && t + off < len) ++expected;
      }
  }
  CHECK(msm::context_pairs(corpus, p).size() == expected);
}

TEST_CASE("metapath: center never equals context") {
  WalkCorpus corpus;
  corpus.walks.push_back({{7, 8, 7}, 0});  // cyclic revisit
  const auto pairs = msm::context_pairs(corpus, 2);
  for (const auto& s : pairs) CHECK(s.center != s.context);
  // (7,8),(8,7),(8,7),(7,8): the two (7,7) window pairs are dropped.
  CHECK(pairs.size() == 4);
}

TEST_CASE("metapath: context pairs are symmetric") {
  const auto g = testutil::random_graph(1, 15, 2, 0.3, 21);
  const auto s = msm::parse_schema("t0 -e0-> t0", g);
  const auto corpus = msm::generate_walks(g, s, 3, 8, 9);
  const auto pairs = msm::context_pairs(corpus, 3);
  std::multiset<std::tuple<NodeId, NodeId, msm::EdgeTypeId>> bag;
  for (const auto& p : pairs) bag.insert({p.center, p.context, p.edge_type});
  for (const auto& p : pairs)
    CHECK(bag.count({p.context, p.center, p.edge_type}) ==
          bag.count({p.center, p.context, p.edge_type}));
}
