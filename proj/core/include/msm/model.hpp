#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "msm/graph.hpp"
#include "msm/types.hpp"

namespace msm {

enum class Activation { kTanh, kIdentity };

inline double apply_activation(Activation act, double x) {
  return act == Activation::kTanh ? std::tanh(x) : x;
}

struct ModelDims {
  std::size_t num_nodes = 0;      // N
  std::size_t dim = 200;          // d: overall embedding size
  std::size_t edge_dim = 10;      // s: edge embedding size
  std::size_t attn_dim = 20;      // d_a: attention hidden size
  std::size_t num_edge_types = 0; // m
  std::size_t levels = 2;         // K: aggregation depth
};

// All trainable tensors of the transductive model. Nodes are columns, so
// per-node vectors are contiguous. alpha is a hyperparameter stored here
// for checkpointing; it receives no gradient.
struct TransductiveParams {
  ModelDims dims;
  Activation activation = Activation::kTanh;

  Eigen::MatrixXd base;                      // d x N
  std::vector<Eigen::MatrixXd> edge0;        // m entries, s x N
  std::vector<Eigen::MatrixXd> agg_weights;  // K entries, s x s
  std::vector<Eigen::VectorXd> attn_vec;     // m entries, d_a
  std::vector<Eigen::MatrixXd> attn_mat;     // m entries, d_a x s
  std::vector<Eigen::MatrixXd> transform;    // m entries, s x d
  Eigen::VectorXd alpha;                     // m
  Eigen::MatrixXd context;                   // d x N

  // base and edge0 start uniform in (-0.5/dim, 0.5/dim) and
  // (-0.5/edge_dim, 0.5/edge_dim); weight matrices are Xavier-uniform;
  // attention vectors uniform in (-0.1, 0.1); context starts at zero.
  static TransductiveParams init(const ModelDims& dims, Activation activation,
                                 double alpha_value, std::uint64_t seed);
};

// Affine map, or a one-hidden-layer tanh perceptron when w2 is non-empty:
// y = w1 x + b1, or y = w2 tanh(w1 x + b1) + b2.
struct Transform {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::VectorXd b2;

  bool is_mlp() const { return w2.size() > 0; }
  std::size_t in_dim() const { return static_cast<std::size_t>(w1.cols()); }
  std::size_t out_dim() const {
    return is_mlp() ? static_cast<std::size_t>(w2.rows())
                    : static_cast<std::size_t>(w1.rows());
  }
  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const;
};

enum class TransformKind { kAffine, kMlp };

// Inductive parameters: no free per-node embedding tables. Base and initial
// edge embeddings are functions of node attributes; the context table exists
// only for training and is never read by the forward computation.
struct InductiveParams {
  ModelDims dims;
  Activation activation = Activation::kTanh;

  std::vector<std::size_t> attr_dims;        // per node type
  std::vector<Transform> h;                  // per node type: attrs -> d
  std::vector<std::vector<Transform>> g;     // [z][r]: attrs -> s
  std::vector<Eigen::MatrixXd> attr_out;     // per node type: attr_dim x d
  Eigen::VectorXd beta;                      // m

  std::vector<Eigen::MatrixXd> agg_weights;  // K entries, s x s
  std::vector<Eigen::VectorXd> attn_vec;     // m entries, d_a
  std::vector<Eigen::MatrixXd> attn_mat;     // m entries, d_a x s
  std::vector<Eigen::MatrixXd> transform;    // m entries, s x d
  Eigen::VectorXd alpha;                     // m
  Eigen::MatrixXd context;                   // d x N (training only)

  std::size_t num_node_types() const { return attr_dims.size(); }

  static InductiveParams init(const ModelDims& dims,
                              const std::vector<std::size_t>& attr_dims,
                              Activation activation, TransformKind kind,
                              std::size_t mlp_hidden, double alpha_value,
                              double beta_value, std::uint64_t seed);
};

// --- Transductive forward -------------------------------------------------

// k-th level edge embedding of `node` on edge type r: level 0 is the stored
// initial embedding, level k applies the shared weight matrix to the mean of
// the neighbors' level (k-1) embeddings and the activation. A node with no
// r-neighbors uses its own previous-level embedding as the mean.
Eigen::VectorXd aggregate_edge_embedding(const HeterogeneousGraph& graph,
                                         const TransductiveParams& params,
                                         NodeId node, EdgeTypeId r,
                                         std::size_t level);

// Softmax over edge types of w_r . tanh(W_r U) where U stacks the top-level
// edge embeddings of one node as columns.
Eigen::VectorXd attention_coefficients(const Eigen::VectorXd& attn_vec,
                                       const Eigen::MatrixXd& attn_mat,
                                       const Eigen::MatrixXd& U);

// Overall embedding: base plus the attention-weighted, transformed
// combination of the top-level edge embeddings across all edge types.
Eigen::VectorXd overall_embedding_t(const HeterogeneousGraph& graph,
                                    const TransductiveParams& params,
                                    NodeId node, EdgeTypeId r);

// --- Inductive forward ----------------------------------------------------

Eigen::VectorXd inductive_base(const InductiveParams& params,
                               const HeterogeneousGraph& graph, NodeId node);
Eigen::VectorXd inductive_edge0(const InductiveParams& params,
                                const HeterogeneousGraph& graph, NodeId node,
                                EdgeTypeId r);
Eigen::VectorXd aggregate_edge_embedding(const HeterogeneousGraph& graph,
                                         const InductiveParams& params,
                                         NodeId node, EdgeTypeId r,
                                         std::size_t level);

// Overall embedding with the extra attribute term.
Eigen::VectorXd overall_embedding_i(const HeterogeneousGraph& graph,
                                    const InductiveParams& params, NodeId node,
                                    EdgeTypeId r);

// A node outside the frozen graph: its type, attributes, and edges into
// snapshot nodes.
struct UnseenNode {
  NodeTypeId node_type = 0;
  Eigen::VectorXd attributes;
  std::vector<std::pair<NodeId, EdgeTypeId>> edges;
};

// Embeds a node that was never trained on. The new node sees the snapshot
// plus its own edges; snapshot nodes keep their snapshot neighborhoods, so a
// node duplicating an existing node's attributes and edges reproduces that
// node's embedding exactly.
Eigen::VectorXd embed_unseen(const HeterogeneousGraph& graph,
                             const InductiveParams& params,
                             const UnseenNode& node, EdgeTypeId r);

// --- Whole-graph forward (for evaluation and export) -----------------------

// One d x N matrix per edge type; column i is the overall embedding of
// node i for that edge type. Computed level-wise over the whole graph,
// which matches the per-node recursion exactly.
std::vector<Eigen::MatrixXd> all_overall_embeddings(
    const HeterogeneousGraph& graph, const TransductiveParams& params);
std::vector<Eigen::MatrixXd> all_overall_embeddings(
    const HeterogeneousGraph& graph, const InductiveParams& params);

}  // namespace msm
