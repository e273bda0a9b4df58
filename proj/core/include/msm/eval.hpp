#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "msm/graph.hpp"

namespace msm {

struct EdgePair {
  NodeId u = kInvalidNode;
  NodeId v = kInvalidNode;
  friend bool operator==(const EdgePair&, const EdgePair&) = default;
};

struct LabeledEdgeSet {
  std::vector<EdgePair> positives;
  std::vector<EdgePair> negatives;  // verified non-edges, type-compatible
};

// Per-edge-type link-prediction split. Negatives are sampled uniformly over
// node pairs whose type pair occurs among that edge type's real edges, and
// verified against the ORIGINAL graph; positive and negative sets are
// equal-sized per split.
struct EvalSplit {
  std::vector<std::vector<EdgePair>> train_edges;  // per edge type
  std::vector<LabeledEdgeSet> validation;
  std::vector<LabeledEdgeSet> test;
};

struct SplitResult {
  EvalSplit split;
  HeterogeneousGraph train_graph;  // positives of validation/test removed
};

// Removes valid_frac/test_frac of each edge type's edges (at least one
// each) into the split. Fractions must lie in (0, 0.5]. An edge type with
// fewer than 10 edges aborts with an error naming it.
SplitResult split_edges(const HeterogeneousGraph& graph, double valid_frac,
                        double test_frac, std::uint64_t seed);

// Cosine similarity; zero vectors score 0 by convention.
double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Mann-Whitney ROC-AUC; ties count 0.5. Labels are 0/1, at least one of
// each required.
double roc_auc(const std::vector<double>& scores,
               const std::vector<int>& labels);

// Precision-recall step integration over descending distinct thresholds.
double pr_auc(const std::vector<double>& scores, const std::vector<int>& labels);

struct ThresholdedF1 {
  double threshold = 0.0;
  double f1 = 0.0;
};

// Chooses the threshold maximizing F1 on the validation set (ties break to
// the smaller threshold), then reports F1 on the test set at that threshold.
ThresholdedF1 f1_at_best_threshold(const std::vector<double>& scores_valid,
                                   const std::vector<int>& labels_valid,
                                   const std::vector<double>& scores_test,
                                   const std::vector<int>& labels_test);

struct EvalReport {
  struct Row {
    std::string edge_type;
    double roc_auc = 0.0;
    double pr_auc = 0.0;
    double f1 = 0.0;
    double threshold = 0.0;
  };
  std::vector<Row> rows;   // one per edge type, in edge-type id order
  Row average;             // uniform (unweighted) mean over edge types
};

// Scores every validation/test pair of each edge type by cosine of the
// r-specific embeddings (one d x N matrix per edge type, nodes as columns).
EvalReport evaluate(const HeterogeneousGraph& graph,
                    const std::vector<Eigen::MatrixXd>& embeddings,
                    const EvalSplit& split);

}  // namespace msm
