#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "msm/eval.hpp"
#include "msm/rng.hpp"
#include "../helpers.hpp"
#include "../oracles.hpp"

using msm::EdgePair;
using msm::EvalSplit;
using msm::HeterogeneousGraph;
using msm::NodeId;

namespace {

// 100 distinct edges of one type: a 25-node cycle plus chords.
HeterogeneousGraph hundred_edge_graph() {
  HeterogeneousGraph g;
  const int n = 25;
  for (int i = 0; i < n; ++i) g.add_node("n" + std::to_string(i), "U");
  std::size_t added = 0;
  for (int i = 0; i < n && added < 100; ++i) {
    g.add_edge(i, (i + 1) % n, "r");
    ++added;
  }
  for (int step = 2; added < 100; ++step)
    for (int i = 0; i < n && added < 100; ++i) {
      g.add_edge(i, (i + step) % n, "r");
      ++added;
    }
  g.freeze();
  return g;
}

std::set<std::pair<NodeId, NodeId>> pair_set(const std::vector<EdgePair>& v) {
  std::set<std::pair<NodeId, NodeId>> out;
  for (const auto& e : v)
    out.insert({std::min(e.u, e.v), std::max(e.u, e.v)});
  return out;
}

}  // namespace

TEST_CASE("eval: split sizes follow the requested fractions") {
  const auto g = hundred_edge_graph();
  REQUIRE(g.edge_count(0) == 100);
  const auto result = msm::split_edges(g, 0.05, 0.10, 5);
  CHECK(result.split.validation[0].positives.size() == 5);
  CHECK(result.split.test[0].positives.size() == 10);
  CHECK(result.split.train_edges[0].size() == 85);
  CHECK(result.split.validation[0].negatives.size() == 5);
  CHECK(result.split.test[0].negatives.size() == 10);
  CHECK(result.train_graph.edge_count(0) == 85);
  CHECK(result.train_graph.num_nodes() == g.num_nodes());
}

TEST_CASE("eval: split partitions the edges without overlap or loss") {
  const auto g = hundred_edge_graph();
  const auto result = msm::split_edges(g, 0.2, 0.2, 11);
  const auto train = pair_set(result.split.train_edges[0]);
  const auto valid = pair_set(result.split.validation[0].positives);
  const auto test = pair_set(result.split.test[0].positives);
  CHECK(train.size() + valid.size() + test.size() == 100);
  for (const auto& e : valid) CHECK(train.count(e) == 0);
  for (const auto& e : test) {
    CHECK(train.count(e) == 0);
    CHECK(valid.count(e) == 0);
  }
  // Every positive is a real edge of the original graph.
  auto all_edges = pair_set([&] {
    std::vector<EdgePair> v;
    for (auto [a, b] : g.edges(0)) v.push_back({a, b});
    return v;
  }());
  for (const auto& e : valid) CHECK(all_edges.count(e) == 1);
  for (const auto& e : test) CHECK(all_edges.count(e) == 1);
}

TEST_CASE("eval: sampled negatives are genuine non-edges of matching types") {
  const auto g = testutil::random_graph(2, 15, 2, 0.25, 77);
  const auto result = msm::split_edges(g, 0.15, 0.15, 13);
  for (msm::EdgeTypeId r = 0; r < g.num_edge_types(); ++r) {
    std::set<std::pair<msm::NodeTypeId, msm::NodeTypeId>> type_pairs;
    for (auto [a, b] : g.edges(r)) {
      type_pairs.insert({std::min(g.node_type(a), g.node_type(b)),
                         std::max(g.node_type(a), g.node_type(b))});
    }
    for (const auto* set :
         {&result.split.validation[r], &result.split.test[r]}) {
      for (const auto& e : set->negatives) {
        CHECK(!g.has_edge(e.u, e.v, r));  // against the original graph
        CHECK(e.u != e.v);
        CHECK(type_pairs.count({std::min(g.node_type(e.u), g.node_type(e.v)),
                                std::max(g.node_type(e.u),
                                         g.node_type(e.v))}) == 1);
      }
    }
  }
}

TEST_CASE("eval: the same seed reproduces the same split") {
  const auto g = hundred_edge_graph();
  const auto a = msm::split_edges(g, 0.1, 0.1, 21);
  const auto b = msm::split_edges(g, 0.1, 0.1, 21);
  CHECK(a.split.test[0].positives == b.split.test[0].positives);
  CHECK(a.split.test[0].negatives == b.split.test[0].negatives);
  CHECK(a.split.validation[0].positives == b.split.validation[0].positives);
  const auto c = msm::split_edges(g, 0.1, 0.1, 22);
  CHECK(pair_set(c.split.test[0].positives) !=
        pair_set(a.split.test[0].positives));
}

TEST_CASE("eval: splitting refuses edge types with too few edges") {
  HeterogeneousGraph g;
  for (int i = 0; i < 12; ++i) g.add_node("n" + std::to_string(i), "U");
  for (NodeId v = 0; v + 1 < 12; ++v) g.add_edge(v, v + 1, "frequent");
  g.add_edge(0, 5, "rare_link");
  g.freeze();
  CHECK_THROWS_WITH_AS(msm::split_edges(g, 0.1, 0.1, 1),
                       doctest::Contains("rare_link"), msm::DataError);
}

TEST_CASE("eval: split fractions are range-checked") {
  const auto g = hundred_edge_graph();
  CHECK_THROWS_AS(msm::split_edges(g, 0.0, 0.1, 1), msm::DataError);
  CHECK_THROWS_AS(msm::split_edges(g, 0.1, 0.6, 1), msm::DataError);
}

TEST_CASE("eval: cosine handles aligned, orthogonal, and zero vectors") {
  Eigen::VectorXd a(3), b(3), z(3);
  a << 1, 2, 3;
  b << -2, 1, 0;  // orthogonal to a
  z.setZero();
  CHECK(msm::cosine(a, 2.5 * a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(msm::cosine(a, -a) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(msm::cosine(a, b) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(msm::cosine(a, z) == 0.0);
  msm::Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    Eigen::VectorXd x(5), y(5);
    oracle::Vec xv(5), yv(5);
    for (int i = 0; i < 5; ++i) {
      x[i] = xv[i] = rng.uniform(-2, 2);
      y[i] = yv[i] = rng.uniform(-2, 2);
    }
    const double want = oracle::dot(xv, yv) /
                        (std::sqrt(oracle::dot(xv, xv)) *
                         std::sqrt(oracle::dot(yv, yv)));
    CHECK(msm::cosine(x, y) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("eval: a perfect ranker scores 1 on both curve areas") {
  const std::vector<double> scores = {0.9, 0.8, 0.7, 0.3, 0.2, 0.1};
  const std::vector<int> labels = {1, 1, 1, 0, 0, 0};
  CHECK(msm::roc_auc(scores, labels) == 1.0);
  CHECK(msm::pr_auc(scores, labels) == 1.0);
  const std::vector<double> inverted = {0.1, 0.2, 0.3, 0.7, 0.8, 0.9};
  CHECK(msm::roc_auc(inverted, labels) == 0.0);
}

TEST_CASE("eval: a random ranker hovers near one half") {
  msm::Rng rng(17);
  std::vector<double> scores(4000);
  std::vector<int> labels(4000);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i] = rng.uniform01();
    labels[i] = i % 2;
  }
  // std error of the U statistic is ~ sqrt((P+Q+1)/(12 P Q)) ~ 0.0091
  CHECK(std::abs(msm::roc_auc(scores, labels) - 0.5) < 0.03);
}

TEST_CASE("eval: pr_auc of a random ranker approaches the prevalence") {
  msm::Rng rng(19);
  std::vector<double> scores(6000);
  std::vector<int> labels(6000);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i] = rng.uniform01();
    labels[i] = i % 4 == 0;  // prevalence 0.25
  }
  CHECK(std::abs(msm::pr_auc(scores, labels) - 0.25) < 0.03);
}

TEST_CASE("eval: curve areas agree with quadratic-time oracles exactly") {
  msm::Rng rng(23);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng.index(11);  // 2..12
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    bool has0 = false, has1 = false;
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse grid forces frequent score ties.
      scores[i] = rng.index(5) * 0.25;
      labels[i] = static_cast<int>(rng.index(2));
      (labels[i] ? has1 : has0) = true;
    }
    if (!has0 || !has1) {
      labels[0] = 0;
      labels[n - 1] = 1;
    }
    const double roc = msm::roc_auc(scores, labels);
    const double pr = msm::pr_auc(scores, labels);
    CHECK(roc == oracle::roc_auc(scores, labels));
    CHECK(pr == oracle::pr_auc(scores, labels));
  }
}

TEST_CASE("eval: roc_auc is invariant under monotone score transforms") {
  msm::Rng rng(29);
  std::vector<double> scores(60);
  std::vector<int> labels(60);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i] = rng.uniform(-1, 1);
    labels[i] = static_cast<int>(rng.index(2));
  }
  labels[0] = 0;
  labels[1] = 1;
  std::vector<double> warped(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i)
    warped[i] = std::exp(3.0 * scores[i]) + 2.0;
  CHECK(msm::roc_auc(warped, labels) == msm::roc_auc(scores, labels));
}

TEST_CASE("eval: negating scores and labels mirrors roc_auc") {
  msm::Rng rng(31);
  std::vector<double> scores(40);
  std::vector<int> labels(40);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i] = rng.uniform(-1, 1);  // continuous, ties have measure zero
    labels[i] = static_cast<int>(rng.index(2));
  }
  labels[0] = 0;
  labels[1] = 1;
  std::vector<double> neg_scores(scores.size());
  std::vector<int> flipped(labels.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    neg_scores[i] = -scores[i];
    flipped[i] = 1 - labels[i];
  }
  CHECK(msm::roc_auc(neg_scores, flipped) ==
        doctest::Approx(msm::roc_auc(scores, labels)).epsilon(1e-12));
}

TEST_CASE("eval: metrics require both label values") {
  const std::vector<double> s = {0.1, 0.2, 0.3};
  CHECK_THROWS_AS(msm::roc_auc(s, {1, 1, 1}), msm::DataError);
  CHECK_THROWS_AS(msm::roc_auc(s, {0, 0, 0}), msm::DataError);
  CHECK_THROWS_AS(msm::pr_auc(s, {1, 1, 1}), msm::DataError);
  CHECK_THROWS_AS(msm::roc_auc({}, {}), msm::DataError);
  CHECK_THROWS_AS(msm::roc_auc({0.5}, {1, 0}), msm::DataError);
}

TEST_CASE("eval: threshold selection maximizes validation F1") {
  // Validation: threshold 0.4 classifies perfectly.
  const std::vector<double> sv = {0.9, 0.8, 0.4, 0.3, 0.1};
  const std::vector<int> lv = {1, 1, 1, 0, 0};
  const std::vector<double> st = {0.85, 0.45, 0.35, 0.05};
  const std::vector<int> lt = {1, 0, 1, 0};
  const auto out = msm::f1_at_best_threshold(sv, lv, st, lt);
  CHECK(out.threshold == 0.4);
  // At 0.4 the test set has tp=1 (0.85), fp=1 (0.45), fn=1 (0.35).
  CHECK(out.f1 == doctest::Approx(oracle::f1_at(st, lt, 0.4)).epsilon(1e-12));
  CHECK(out.f1 == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("eval: equal-F1 thresholds resolve to the smaller one") {
  // Thresholds 0.2 (tp=2 fp=2) and 0.8 (tp=1 fn=1) both reach F1 = 2/3,
  // beating 0.4 (2/5) and 0.6 (1/2); the tie resolves downward.
  const std::vector<double> sv = {0.2, 0.4, 0.6, 0.8};
  const std::vector<int> lv = {1, 0, 0, 1};
  const auto out = msm::f1_at_best_threshold(sv, lv, sv, lv);
  CHECK(out.threshold == 0.2);
  CHECK(out.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("eval: f1 oracle cross-check on random score sets") {
  msm::Rng rng(37);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> sv(12), st(12);
    std::vector<int> lv(12), lt(12);
    for (int i = 0; i < 12; ++i) {
      sv[i] = rng.index(4) * (1.0 / 3);
      st[i] = rng.index(4) * (1.0 / 3);
      lv[i] = static_cast<int>(rng.index(2));
      lt[i] = static_cast<int>(rng.index(2));
    }
    lv[0] = 1;  // at least one positive so F1 is meaningful
    lt[0] = 1;
    const auto out = msm::f1_at_best_threshold(sv, lv, st, lt);
    // The chosen threshold must (a) be one of the validation scores,
    // (b) beat or match every other candidate on validation F1.
    CHECK(std::count(sv.begin(), sv.end(), out.threshold) > 0);
    const double chosen = oracle::f1_at(sv, lv, out.threshold);
    for (double cand : sv) {
      CHECK(chosen >= oracle::f1_at(sv, lv, cand) - 1e-12);
      if (oracle::f1_at(sv, lv, cand) == chosen)
        CHECK(out.threshold <= cand);
    }
    CHECK(out.f1 == doctest::Approx(oracle::f1_at(st, lt, out.threshold))
                        .epsilon(1e-12));
  }
}

TEST_CASE("eval: report rows score separable embeddings highly") {
  // Two clusters; edges only inside clusters. Embeddings equal to a cluster
  // indicator make every positive pair cosine 1 and every cross pair 0.
  HeterogeneousGraph g;
  const int n = 16;
  for (int i = 0; i < n; ++i) g.add_node("n" + std::to_string(i), "U");
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if ((i < n / 2) == (j < n / 2)) g.add_edge(i, j, "r");
  g.freeze();
  const auto result = msm::split_edges(g, 0.1, 0.2, 41);

  Eigen::MatrixXd emb(2, n);
  for (int i = 0; i < n; ++i) emb.col(i) = i < n / 2
                                               ? Eigen::Vector2d(1, 0)
                                               : Eigen::Vector2d(0, 1);
  const auto report = msm::evaluate(g, {emb}, result.split);
  REQUIRE(report.rows.size() == 1);
  CHECK(report.rows[0].edge_type == "r");
  CHECK(report.rows[0].roc_auc == 1.0);
  CHECK(report.rows[0].pr_auc == 1.0);
  CHECK(report.rows[0].f1 == 1.0);
  // A single edge type means the average row repeats it.
  CHECK(report.average.roc_auc == report.rows[0].roc_auc);
  CHECK(report.average.pr_auc == report.rows[0].pr_auc);
  CHECK(report.average.f1 == report.rows[0].f1);
}

TEST_CASE("eval: the average row is the unweighted mean over edge types") {
  const auto g = testutil::random_graph(1, 14, 2, 0.45, 43);
  REQUIRE(g.edge_count(0) >= 10);
  REQUIRE(g.edge_count(1) >= 10);
  const auto result = msm::split_edges(g, 0.2, 0.2, 47);
  std::vector<Eigen::MatrixXd> embs;
  msm::Rng rng(49);
  for (int r = 0; r < 2; ++r) {
    Eigen::MatrixXd e(4, g.num_nodes());
    for (Eigen::Index i = 0; i < e.size(); ++i)
      e.data()[i] = rng.uniform(-1, 1);
    embs.push_back(e);
  }
  const auto report = msm::evaluate(g, embs, result.split);
  REQUIRE(report.rows.size() == 2);
  CHECK(report.average.roc_auc ==
        doctest::Approx((report.rows[0].roc_auc + report.rows[1].roc_auc) / 2)
            .epsilon(1e-12));
  CHECK(report.average.f1 ==
        doctest::Approx((report.rows[0].f1 + report.rows[1].f1) / 2)
            .epsilon(1e-12));
  for (const auto& row : report.rows) {
    CHECK(row.roc_auc >= 0.0);
    CHECK(row.roc_auc <= 1.0);
    CHECK(row.pr_auc >= 0.0);
    CHECK(row.pr_auc <= 1.0);
    CHECK(row.f1 >= 0.0);
    CHECK(row.f1 <= 1.0);
  }
}
