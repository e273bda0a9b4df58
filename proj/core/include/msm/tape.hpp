#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "msm/graph.hpp"
#include "msm/model.hpp"
#include "msm/rng.hpp"

namespace msm {

// Gradient mirrors of every trainable tensor, with dirty tracking so that
// clearing and applying touch only the entries a sample actually reached.
// alpha and beta are hyperparameters and have no mirror.
struct GradientSet {
  // Transductive per-node tables.
  Eigen::MatrixXd base;                    // d x N
  std::vector<Eigen::MatrixXd> edge0;      // m of s x N
  // Shared tensors.
  std::vector<Eigen::MatrixXd> agg_weights;
  std::vector<Eigen::VectorXd> attn_vec;
  std::vector<Eigen::MatrixXd> attn_mat;
  std::vector<Eigen::MatrixXd> transform;
  Eigen::MatrixXd context;                 // d x N
  // Inductive transforms.
  std::vector<Transform> h;
  std::vector<std::vector<Transform>> g;
  std::vector<Eigen::MatrixXd> attr_out;

  void init(const TransductiveParams& params);
  void init(const InductiveParams& params);

  // Zeroes all mirrors and resets dirty state.
  void reset();

  // params -= lr * grad for every dirty entry, then clears those entries.
  void apply_and_clear(TransductiveParams& params, double lr);
  void apply_and_clear(InductiveParams& params, double lr);

  // Dirty-entry accessors used during backprop.
  Eigen::MatrixXd::ColXpr base_grad(NodeId node);
  Eigen::MatrixXd::ColXpr context_grad(NodeId node);
  Eigen::MatrixXd::ColXpr edge0_grad(EdgeTypeId r, NodeId node);
  Eigen::MatrixXd& agg_weight_grad(std::size_t level_index);
  Eigen::VectorXd& attn_vec_grad(EdgeTypeId r);
  Eigen::MatrixXd& attn_mat_grad(EdgeTypeId r);
  Eigen::MatrixXd& transform_grad(EdgeTypeId r);
  Transform& h_grad(NodeTypeId z);
  Transform& g_grad(NodeTypeId z, EdgeTypeId r);
  Eigen::MatrixXd& attr_out_grad(NodeTypeId z);

  bool inductive = false;

  // Dirty lists and flags.
  std::vector<NodeId> dirty_base, dirty_context;
  std::vector<std::vector<NodeId>> dirty_edge0;
  std::vector<std::uint8_t> base_flag, context_flag;
  std::vector<std::vector<std::uint8_t>> edge0_flag;
  std::vector<std::uint8_t> agg_flag;
  std::vector<std::uint8_t> attn_flag;      // per edge type, covers vec+mat
  std::vector<std::uint8_t> transform_flag; // per edge type
  std::vector<std::uint8_t> h_flag;         // per node type
  std::vector<std::vector<std::uint8_t>> g_flag;
  std::vector<std::uint8_t> attr_out_flag;
};

// Caches one sample's forward computation through the aggregation levels,
// the attention, and the overall-embedding combination, so that backward()
// can produce exact reverse-mode gradients. Reusable across samples; all
// buffers are recycled.
class ForwardTape {
 public:
  // Returns the overall embedding of `node` for edge type `target`.
  // neighbor_cap > 0 subsamples each neighborhood to at most that many
  // nodes (rng required in that case).
  const Eigen::VectorXd& forward(const HeterogeneousGraph& graph,
                                 const TransductiveParams& params, NodeId node,
                                 EdgeTypeId target, std::size_t neighbor_cap = 0,
                                 Rng* rng = nullptr);
  const Eigen::VectorXd& forward(const HeterogeneousGraph& graph,
                                 const InductiveParams& params, NodeId node,
                                 EdgeTypeId target, std::size_t neighbor_cap = 0,
                                 Rng* rng = nullptr);

  // Accumulates gradients of a loss into `grads` given dLoss/d(embedding).
  // Must be called with the params the preceding forward() ran on.
  void backward(const TransductiveParams& params,
                const Eigen::VectorXd& grad_value, GradientSet& grads);
  void backward(const InductiveParams& params, const Eigen::VectorXd& grad_value,
                GradientSet& grads);

  const Eigen::VectorXd& value() const { return value_; }
  // Top-level edge embeddings of the node, one column per edge type.
  const Eigen::MatrixXd& stacked_edge_embeddings() const { return stacked_; }
  const Eigen::VectorXd& attention() const { return attention_; }

 private:
  struct Level {
    std::vector<NodeId> nodes;
    std::vector<std::uint32_t> child_offsets;  // nodes.size() + 1
    std::vector<std::uint32_t> children;       // indices into level below
    Eigen::MatrixXd means;                     // s x n
    Eigen::MatrixXd values;                    // s x n
    Eigen::MatrixXd grads;                     // s x n
    Eigen::MatrixXd hidden;                    // mlp cache (level 0 only)
  };

  template <typename Params>
  void run(const HeterogeneousGraph& graph, const Params& params, NodeId node,
           EdgeTypeId target, std::size_t neighbor_cap, Rng* rng);
  template <typename Params>
  void backprop(const Params& params, const Eigen::VectorXd& grad_value,
                GradientSet& grads);
  void build_frontiers(const HeterogeneousGraph& graph, EdgeTypeId r,
                       std::size_t levels, std::size_t neighbor_cap, Rng* rng);

  const HeterogeneousGraph* graph_ = nullptr;
  NodeId node_ = kInvalidNode;
  EdgeTypeId target_ = 0;
  bool aggregation_skipped_ = false;  // alpha == 0 fast path

  std::vector<std::vector<Level>> levels_;  // [edge type][0..K]
  // Stamp-based node -> frontier-slot map; avoids per-sample hashing.
  std::vector<std::uint32_t> frontier_stamp_, frontier_slot_;
  std::uint32_t stamp_ = 0;
  std::vector<NodeId> scratch_neighbors_;

  Eigen::MatrixXd stacked_;            // s x m
  Eigen::MatrixXd attn_pre_, attn_tanh_;  // d_a x m
  Eigen::VectorXd scores_, attention_;    // m
  Eigen::VectorXd combined_;              // s: stacked * attention
  Eigen::VectorXd h_hidden_;              // center h mlp cache
  Eigen::VectorXd value_;                 // d

  // Backward scratch.
  Eigen::VectorXd grad_combined_, grad_attention_, grad_scores_;
  Eigen::MatrixXd grad_stacked_, grad_attn_tanh_, grad_attn_pre_;
  Eigen::VectorXd grad_mean_, grad_pre_;
};

}  // namespace msm
