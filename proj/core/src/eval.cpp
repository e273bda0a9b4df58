#include "msm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "msm/rng.hpp"

namespace msm {

namespace {

std::uint64_t pair_key(NodeId a, NodeId b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

struct TypePairWeights {
  std::vector<std::pair<NodeTypeId, NodeTypeId>> pairs;  // za <= zb
  std::vector<double> cumulative;
  double total = 0.0;
};

TypePairWeights observed_type_pairs(const HeterogeneousGraph& graph,
                                    const std::vector<EdgePair>& edges) {
  std::vector<std::pair<NodeTypeId, NodeTypeId>> seen;
  for (const auto& e : edges) {
    NodeTypeId za = graph.node_type(e.u);
    NodeTypeId zb = graph.node_type(e.v);
    if (za > zb) std::swap(za, zb);
    seen.emplace_back(za, zb);
  }
  std::sort(seen.begin(), seen.end());
  seen.erase(std::unique(seen.begin(), seen.end()), seen.end());

  TypePairWeights w;
  w.pairs = std::move(seen);
  for (const auto& [za, zb] : w.pairs) {
    const double na = static_cast<double>(graph.nodes_of_type(za).size());
    const double nb = static_cast<double>(graph.nodes_of_type(zb).size());
    const double count = (za == zb) ? na * (na - 1.0) / 2.0 : na * nb;
    w.total += count;
    w.cumulative.push_back(w.total);
  }
  return w;
}

std::vector<EdgePair> sample_non_edges(const HeterogeneousGraph& graph,
                                       EdgeTypeId r,
                                       const TypePairWeights& weights,
                                       std::size_t count, Rng& rng) {
  std::vector<EdgePair> out;
  std::unordered_set<std::uint64_t> used;
  const std::size_t max_attempts = 200 * count + 10000;
  std::size_t attempts = 0;
  while (out.size() < count) {
    if (++attempts > max_attempts)
      throw DataError("split: unable to sample " + std::to_string(count) +
                      " type-compatible non-edges for edge type '" +
                      graph.edge_type_registry().name(r) + "'");
    const double x = rng.uniform01() * weights.total;
    const std::size_t p =
        std::lower_bound(weights.cumulative.begin(), weights.cumulative.end(),
                         x) -
        weights.cumulative.begin();
    const auto [za, zb] = weights.pairs[std::min(p, weights.pairs.size() - 1)];
    const auto& as = graph.nodes_of_type(za);
    const auto& bs = graph.nodes_of_type(zb);
    NodeId a = as[rng.index(as.size())];
    NodeId b = bs[rng.index(bs.size())];
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    if (graph.has_edge(a, b, r)) continue;
    if (!used.insert(pair_key(a, b)).second) continue;
    out.push_back({a, b});
  }
  return out;
}

HeterogeneousGraph rebuild_with_edges(
    const HeterogeneousGraph& graph,
    const std::vector<std::vector<EdgePair>>& edges_per_type) {
  HeterogeneousGraph out;
  const auto& ntypes = graph.node_type_registry();
  const auto& etypes = graph.edge_type_registry();
  for (NodeId i = 0; i < graph.num_nodes(); ++i)
    out.add_node(graph.node_name(i), ntypes.name(graph.node_type(i)));
  for (EdgeTypeId r = 0; r < graph.num_edge_types(); ++r)
    out.register_edge_type(etypes.name(r));
  for (EdgeTypeId r = 0; r < graph.num_edge_types(); ++r)
    for (const auto& e : edges_per_type[r]) out.add_edge(e.u, e.v, r);
  for (NodeId i = 0; i < graph.num_nodes(); ++i)
    if (graph.has_attributes(i)) out.set_attributes(i, graph.attributes(i));
  out.freeze();
  return out;
}

}  // namespace

SplitResult split_edges(const HeterogeneousGraph& graph, double valid_frac,
                        double test_frac, std::uint64_t seed) {
  if (!(valid_frac > 0.0) || valid_frac > 0.5 || !(test_frac > 0.0) ||
      test_frac > 0.5)
    throw DataError("split: fractions must lie in (0, 0.5]");
  if (!graph.frozen()) throw DataError("split: graph must be frozen");

  const std::size_t m = graph.num_edge_types();
  SplitResult result;
  result.split.train_edges.resize(m);
  result.split.validation.resize(m);
  result.split.test.resize(m);

  for (EdgeTypeId r = 0; r < m; ++r) {
    auto edge_list = graph.edges(r);
    std::vector<EdgePair> edges;
    edges.reserve(edge_list.size());
    for (const auto& [u, v] : edge_list) edges.push_back({u, v});
    if (edges.size() < 10)
      throw DataError("split: edge type '" +
                      graph.edge_type_registry().name(r) + "' has only " +
                      std::to_string(edges.size()) +
                      " edges; at least 10 are required");

    const auto total = static_cast<double>(edges.size());
    auto n_test = static_cast<std::size_t>(
        std::max<long long>(1, std::llround(test_frac * total)));
    auto n_valid = static_cast<std::size_t>(
        std::max<long long>(1, std::llround(valid_frac * total)));
    while (n_test + n_valid > edges.size())
      (n_test >= n_valid ? n_test : n_valid) -= 1;

    Rng rng(derive_seed(seed, 0x5ea, r));
    rng.shuffle(edges);
    auto& test = result.split.test[r];
    auto& valid = result.split.validation[r];
    test.positives.assign(edges.begin(), edges.begin() + n_test);
    valid.positives.assign(edges.begin() + n_test,
                           edges.begin() + n_test + n_valid);
    result.split.train_edges[r].assign(edges.begin() + n_test + n_valid,
                                       edges.end());

    const TypePairWeights weights = observed_type_pairs(graph, edges);
    std::vector<EdgePair> negs =
        sample_non_edges(graph, r, weights, n_test + n_valid, rng);
    test.negatives.assign(negs.begin(), negs.begin() + n_test);
    valid.negatives.assign(negs.begin() + n_test, negs.end());
  }

  result.train_graph = rebuild_with_edges(graph, result.split.train_edges);
  return result;
}

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

namespace {

void check_two_classes(const std::vector<double>& scores,
                       const std::vector<int>& labels, const char* what) {
  if (scores.size() != labels.size() || scores.empty())
    throw DataError(std::string(what) + ": scores/labels size mismatch");
  bool pos = false, neg = false;
  for (int l : labels) (l ? pos : neg) = true;
  if (!pos || !neg)
    throw DataError(std::string(what) +
                    ": degenerate label set (need both classes)");
}

std::vector<std::size_t> order_by_score(const std::vector<double>& scores,
                                        bool descending) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return descending ? scores[a] > scores[b] : scores[a] < scores[b];
  });
  return idx;
}

double f1_score(const std::vector<double>& scores,
                const std::vector<int>& labels, double threshold) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (predicted && labels[i]) ++tp;
    else if (predicted) ++fp;
    else if (labels[i]) ++fn;
  }
  const double denom = static_cast<double>(2 * tp + fp + fn);
  if (denom == 0.0) return 0.0;
  return 2.0 * static_cast<double>(tp) / denom;
}

}  // namespace

double roc_auc(const std::vector<double>& scores,
               const std::vector<int>& labels) {
  check_two_classes(scores, labels, "roc_auc");
  const auto idx = order_by_score(scores, /*descending=*/false);
  const std::size_t n = idx.size();
  double rank_sum_pos = 0.0;
  std::size_t positives = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) +
                                   static_cast<double>(j));  // 1-based
    for (std::size_t k = i; k < j; ++k) {
      if (labels[idx[k]]) {
        rank_sum_pos += avg_rank;
        ++positives;
      }
    }
    i = j;
  }
  const double p = static_cast<double>(positives);
  const double q = static_cast<double>(n - positives);
  return (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * q);
}

double pr_auc(const std::vector<double>& scores,
              const std::vector<int>& labels) {
  check_two_classes(scores, labels, "pr_auc");
  const auto idx = order_by_score(scores, /*descending=*/true);
  const std::size_t n = idx.size();
  std::size_t total_pos = 0;
  for (int l : labels) total_pos += (l != 0);

  double auc = 0.0;
  double prev_recall = 0.0;
  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
    for (std::size_t k = i; k < j; ++k) (labels[idx[k]] ? tp : fp) += 1;
    const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
    const double precision =
        static_cast<double>(tp) / static_cast<double>(tp + fp);
    auc += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  return auc;
}

ThresholdedF1 f1_at_best_threshold(const std::vector<double>& scores_valid,
                                   const std::vector<int>& labels_valid,
                                   const std::vector<double>& scores_test,
                                   const std::vector<int>& labels_test) {
  check_two_classes(scores_valid, labels_valid, "f1");
  check_two_classes(scores_test, labels_test, "f1");
  std::vector<double> candidates = scores_valid;
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());
  double best_threshold = candidates.front();
  double best_f1 = -1.0;
  for (double t : candidates) {  // ascending: ties keep the smaller threshold
    const double f1 = f1_score(scores_valid, labels_valid, t);
    if (f1 > best_f1) {
      best_f1 = f1;
      best_threshold = t;
    }
  }
  return {best_threshold, f1_score(scores_test, labels_test, best_threshold)};
}

EvalReport evaluate(const HeterogeneousGraph& graph,
                    const std::vector<Eigen::MatrixXd>& embeddings,
                    const EvalSplit& split) {
  const std::size_t m = graph.num_edge_types();
  if (embeddings.size() != m || split.test.size() != m ||
      split.validation.size() != m)
    throw DataError("evaluate: embeddings/split do not match the graph");
  for (const auto& e : embeddings)
    if (static_cast<std::size_t>(e.cols()) != graph.num_nodes())
      throw DataError("evaluate: embedding column count != node count");

  auto score_set = [&](const std::vector<EdgePair>& pairs, EdgeTypeId r,
                       int label, std::vector<double>& scores,
                       std::vector<int>& labels) {
    for (const auto& e : pairs) {
      scores.push_back(cosine(embeddings[r].col(e.u), embeddings[r].col(e.v)));
      labels.push_back(label);
    }
  };

  EvalReport report;
  for (EdgeTypeId r = 0; r < m; ++r) {
    std::vector<double> sv, st;
    std::vector<int> lv, lt;
    score_set(split.validation[r].positives, r, 1, sv, lv);
    score_set(split.validation[r].negatives, r, 0, sv, lv);
    score_set(split.test[r].positives, r, 1, st, lt);
    score_set(split.test[r].negatives, r, 0, st, lt);
    EvalReport::Row row;
    row.edge_type = graph.edge_type_registry().name(r);
    row.roc_auc = roc_auc(st, lt);
    row.pr_auc = pr_auc(st, lt);
    const ThresholdedF1 f1 = f1_at_best_threshold(sv, lv, st, lt);
    row.f1 = f1.f1;
    row.threshold = f1.threshold;
    report.rows.push_back(std::move(row));
  }

  report.average.edge_type = "average";
  for (const auto& row : report.rows) {
    report.average.roc_auc += row.roc_auc;
    report.average.pr_auc += row.pr_auc;
    report.average.f1 += row.f1;
    report.average.threshold += row.threshold;
  }
  const auto denom = static_cast<double>(report.rows.size());
  report.average.roc_auc /= denom;
  report.average.pr_auc /= denom;
  report.average.f1 /= denom;
  report.average.threshold /= denom;
  return report;
}

}  // namespace msm
