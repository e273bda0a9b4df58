#include "msm/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace msm {

namespace {

Transform zero_like(const Transform& t) {
  Transform z;
  z.w1 = Eigen::MatrixXd::Zero(t.w1.rows(), t.w1.cols());
  z.b1 = Eigen::VectorXd::Zero(t.b1.size());
  if (t.is_mlp()) {
    z.w2 = Eigen::MatrixXd::Zero(t.w2.rows(), t.w2.cols());
    z.b2 = Eigen::VectorXd::Zero(t.b2.size());
  }
  return z;
}

void zero_transform(Transform& t) {
  t.w1.setZero();
  t.b1.setZero();
  if (t.is_mlp()) {
    t.w2.setZero();
    t.b2.setZero();
  }
}

void apply_transform(Transform& param, Transform& grad, double lr) {
  param.w1 -= lr * grad.w1;
  param.b1 -= lr * grad.b1;
  grad.w1.setZero();
  grad.b1.setZero();
  if (param.is_mlp()) {
    param.w2 -= lr * grad.w2;
    param.b2 -= lr * grad.b2;
    grad.w2.setZero();
    grad.b2.setZero();
  }
}

// d(loss)/d(params of t) given d(loss)/d(t(x)). `hidden` is the cached tanh
// layer output; only read when t is an mlp.
template <typename XVec, typename HVec, typename GVec>
void transform_backward(const Transform& t, const XVec& x, const HVec& hidden,
                        const GVec& gout, Transform& grad) {
  if (!t.is_mlp()) {
    grad.w1.noalias() += gout * x.transpose();
    grad.b1 += gout;
    return;
  }
  grad.w2.noalias() += gout * hidden.transpose();
  grad.b2 += gout;
  Eigen::VectorXd gpre =
      ((1.0 - hidden.array().square()) * (t.w2.transpose() * gout).array())
          .matrix();
  grad.w1.noalias() += gpre * x.transpose();
  grad.b1 += gpre;
}

void init_shared(GradientSet& gs, const ModelDims& dims) {
  const auto s = static_cast<Eigen::Index>(dims.edge_dim);
  const auto d = static_cast<Eigen::Index>(dims.dim);
  const auto da = static_cast<Eigen::Index>(dims.attn_dim);
  const auto n = static_cast<Eigen::Index>(dims.num_nodes);
  gs.agg_weights.assign(dims.levels, Eigen::MatrixXd::Zero(s, s));
  gs.attn_vec.assign(dims.num_edge_types, Eigen::VectorXd::Zero(da));
  gs.attn_mat.assign(dims.num_edge_types, Eigen::MatrixXd::Zero(da, s));
  gs.transform.assign(dims.num_edge_types, Eigen::MatrixXd::Zero(s, d));
  gs.context = Eigen::MatrixXd::Zero(d, n);
  gs.agg_flag.assign(dims.levels, 0);
  gs.attn_flag.assign(dims.num_edge_types, 0);
  gs.transform_flag.assign(dims.num_edge_types, 0);
  gs.context_flag.assign(dims.num_nodes, 0);
  gs.dirty_context.clear();
}

}  // namespace

void GradientSet::init(const TransductiveParams& params) {
  inductive = false;
  const auto& dims = params.dims;
  init_shared(*this, dims);
  base = Eigen::MatrixXd::Zero(params.base.rows(), params.base.cols());
  edge0.assign(dims.num_edge_types,
               Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dims.edge_dim),
                                     static_cast<Eigen::Index>(dims.num_nodes)));
  base_flag.assign(dims.num_nodes, 0);
  edge0_flag.assign(dims.num_edge_types,
                    std::vector<std::uint8_t>(dims.num_nodes, 0));
  dirty_base.clear();
  dirty_edge0.assign(dims.num_edge_types, {});
  h.clear();
  g.clear();
  attr_out.clear();
  h_flag.clear();
  g_flag.clear();
  attr_out_flag.clear();
}

void GradientSet::init(const InductiveParams& params) {
  inductive = true;
  const auto& dims = params.dims;
  init_shared(*this, dims);
  base.resize(0, 0);
  edge0.clear();
  base_flag.clear();
  edge0_flag.clear();
  dirty_base.clear();
  dirty_edge0.clear();
  h.clear();
  g.clear();
  attr_out.clear();
  for (const auto& t : params.h) h.push_back(zero_like(t));
  g.resize(params.g.size());
  for (std::size_t z = 0; z < params.g.size(); ++z)
    for (const auto& t : params.g[z]) g[z].push_back(zero_like(t));
  for (const auto& o : params.attr_out)
    attr_out.push_back(Eigen::MatrixXd::Zero(o.rows(), o.cols()));
  h_flag.assign(params.h.size(), 0);
  g_flag.assign(params.g.size(),
                std::vector<std::uint8_t>(dims.num_edge_types, 0));
  attr_out_flag.assign(params.attr_out.size(), 0);
}

void GradientSet::reset() {
  if (base.size() > 0) base.setZero();
  for (auto& e : edge0) e.setZero();
  for (auto& w : agg_weights) w.setZero();
  for (auto& w : attn_vec) w.setZero();
  for (auto& w : attn_mat) w.setZero();
  for (auto& w : transform) w.setZero();
  if (context.size() > 0) context.setZero();
  for (auto& t : h) zero_transform(t);
  for (auto& gz : g)
    for (auto& t : gz) zero_transform(t);
  for (auto& o : attr_out) o.setZero();
  dirty_base.clear();
  dirty_context.clear();
  for (auto& d : dirty_edge0) d.clear();
  std::fill(base_flag.begin(), base_flag.end(), 0);
  std::fill(context_flag.begin(), context_flag.end(), 0);
  for (auto& f : edge0_flag) std::fill(f.begin(), f.end(), 0);
  std::fill(agg_flag.begin(), agg_flag.end(), 0);
  std::fill(attn_flag.begin(), attn_flag.end(), 0);
  std::fill(transform_flag.begin(), transform_flag.end(), 0);
  std::fill(h_flag.begin(), h_flag.end(), 0);
  for (auto& f : g_flag) std::fill(f.begin(), f.end(), 0);
  std::fill(attr_out_flag.begin(), attr_out_flag.end(), 0);
}

Eigen::MatrixXd::ColXpr GradientSet::base_grad(NodeId node) {
  if (!base_flag[node]) {
    base_flag[node] = 1;
    dirty_base.push_back(node);
  }
  return base.col(node);
}

Eigen::MatrixXd::ColXpr GradientSet::context_grad(NodeId node) {
  if (!context_flag[node]) {
    context_flag[node] = 1;
    dirty_context.push_back(node);
  }
  return context.col(node);
}

Eigen::MatrixXd::ColXpr GradientSet::edge0_grad(EdgeTypeId r, NodeId node) {
  if (!edge0_flag[r][node]) {
    edge0_flag[r][node] = 1;
    dirty_edge0[r].push_back(node);
  }
  return edge0[r].col(node);
}

Eigen::MatrixXd& GradientSet::agg_weight_grad(std::size_t level_index) {
  agg_flag[level_index] = 1;
  return agg_weights[level_index];
}

Eigen::VectorXd& GradientSet::attn_vec_grad(EdgeTypeId r) {
  attn_flag[r] = 1;
  return attn_vec[r];
}

Eigen::MatrixXd& GradientSet::attn_mat_grad(EdgeTypeId r) {
  attn_flag[r] = 1;
  return attn_mat[r];
}

Eigen::MatrixXd& GradientSet::transform_grad(EdgeTypeId r) {
  transform_flag[r] = 1;
  return transform[r];
}

Transform& GradientSet::h_grad(NodeTypeId z) {
  h_flag[z] = 1;
  return h[z];
}

Transform& GradientSet::g_grad(NodeTypeId z, EdgeTypeId r) {
  g_flag[z][r] = 1;
  return g[z][r];
}

Eigen::MatrixXd& GradientSet::attr_out_grad(NodeTypeId z) {
  attr_out_flag[z] = 1;
  return attr_out[z];
}

void GradientSet::apply_and_clear(TransductiveParams& params, double lr) {
  for (NodeId v : dirty_base) {
    params.base.col(v) -= lr * base.col(v);
    base.col(v).setZero();
    base_flag[v] = 0;
  }
  dirty_base.clear();
  for (NodeId v : dirty_context) {
    params.context.col(v) -= lr * context.col(v);
    context.col(v).setZero();
    context_flag[v] = 0;
  }
  dirty_context.clear();
  for (std::size_t r = 0; r < dirty_edge0.size(); ++r) {
    for (NodeId v : dirty_edge0[r]) {
      params.edge0[r].col(v) -= lr * edge0[r].col(v);
      edge0[r].col(v).setZero();
      edge0_flag[r][v] = 0;
    }
    dirty_edge0[r].clear();
  }
  for (std::size_t k = 0; k < agg_flag.size(); ++k) {
    if (!agg_flag[k]) continue;
    params.agg_weights[k] -= lr * agg_weights[k];
    agg_weights[k].setZero();
    agg_flag[k] = 0;
  }
  for (std::size_t r = 0; r < attn_flag.size(); ++r) {
    if (!attn_flag[r]) continue;
    params.attn_vec[r] -= lr * attn_vec[r];
    params.attn_mat[r] -= lr * attn_mat[r];
    attn_vec[r].setZero();
    attn_mat[r].setZero();
    attn_flag[r] = 0;
  }
  for (std::size_t r = 0; r < transform_flag.size(); ++r) {
    if (!transform_flag[r]) continue;
    params.transform[r] -= lr * transform[r];
    transform[r].setZero();
    transform_flag[r] = 0;
  }
}

void GradientSet::apply_and_clear(InductiveParams& params, double lr) {
  for (NodeId v : dirty_context) {
    params.context.col(v) -= lr * context.col(v);
    context.col(v).setZero();
    context_flag[v] = 0;
  }
  dirty_context.clear();
  for (std::size_t z = 0; z < h_flag.size(); ++z) {
    if (!h_flag[z]) continue;
    apply_transform(params.h[z], h[z], lr);
    h_flag[z] = 0;
  }
  for (std::size_t z = 0; z < g_flag.size(); ++z)
    for (std::size_t r = 0; r < g_flag[z].size(); ++r) {
      if (!g_flag[z][r]) continue;
      apply_transform(params.g[z][r], g[z][r], lr);
      g_flag[z][r] = 0;
    }
  for (std::size_t z = 0; z < attr_out_flag.size(); ++z) {
    if (!attr_out_flag[z]) continue;
    params.attr_out[z] -= lr * attr_out[z];
    attr_out[z].setZero();
    attr_out_flag[z] = 0;
  }
  for (std::size_t k = 0; k < agg_flag.size(); ++k) {
    if (!agg_flag[k]) continue;
    params.agg_weights[k] -= lr * agg_weights[k];
    agg_weights[k].setZero();
    agg_flag[k] = 0;
  }
  for (std::size_t r = 0; r < attn_flag.size(); ++r) {
    if (!attn_flag[r]) continue;
    params.attn_vec[r] -= lr * attn_vec[r];
    params.attn_mat[r] -= lr * attn_mat[r];
    attn_vec[r].setZero();
    attn_mat[r].setZero();
    attn_flag[r] = 0;
  }
  for (std::size_t r = 0; r < transform_flag.size(); ++r) {
    if (!transform_flag[r]) continue;
    params.transform[r] -= lr * transform[r];
    transform[r].setZero();
    transform_flag[r] = 0;
  }
}

// ---------------------------------------------------------------------------
// ForwardTape

void ForwardTape::build_frontiers(const HeterogeneousGraph& graph, EdgeTypeId r,
                                  std::size_t levels, std::size_t neighbor_cap,
                                  Rng* rng) {
  if (frontier_stamp_.size() < graph.num_nodes()) {
    frontier_stamp_.assign(graph.num_nodes(), 0);
    frontier_slot_.resize(graph.num_nodes());
    stamp_ = 0;
  }
  auto& lv = levels_[r];
  lv.resize(levels + 1);
  lv[levels].nodes.assign(1, node_);
  for (std::size_t k = levels; k >= 1; --k) {
    Level& parent = lv[k];
    Level& child = lv[k - 1];
    child.nodes.clear();
    if (stamp_ == std::numeric_limits<std::uint32_t>::max()) {
      std::fill(frontier_stamp_.begin(), frontier_stamp_.end(), 0);
      stamp_ = 0;
    }
    ++stamp_;
    parent.child_offsets.assign(1, 0);
    parent.children.clear();
    auto child_index = [&](NodeId v) -> std::uint32_t {
      if (frontier_stamp_[v] != stamp_) {
        frontier_stamp_[v] = stamp_;
        frontier_slot_[v] = static_cast<std::uint32_t>(child.nodes.size());
        child.nodes.push_back(v);
      }
      return frontier_slot_[v];
    };
    for (NodeId p : parent.nodes) {
      const auto& neigh = graph.neighbors(p, r);
      if (neigh.empty()) {
        parent.children.push_back(child_index(p));
      } else if (neighbor_cap > 0 && neigh.size() > neighbor_cap) {
        scratch_neighbors_.assign(neigh.begin(), neigh.end());
        for (std::size_t i = 0; i < neighbor_cap; ++i) {
          const std::size_t j =
              i + rng->index(scratch_neighbors_.size() - i);
          std::swap(scratch_neighbors_[i], scratch_neighbors_[j]);
          parent.children.push_back(child_index(scratch_neighbors_[i]));
        }
      } else {
        for (NodeId v : neigh) parent.children.push_back(child_index(v));
      }
      parent.child_offsets.push_back(
          static_cast<std::uint32_t>(parent.children.size()));
    }
  }
}

template <typename Params>
void ForwardTape::run(const HeterogeneousGraph& graph, const Params& params,
                      NodeId node, EdgeTypeId target, std::size_t neighbor_cap,
                      Rng* rng) {
  constexpr bool kInductive = std::is_same_v<Params, InductiveParams>;
  graph_ = &graph;
  node_ = node;
  target_ = target;
  if (target >= params.dims.num_edge_types)
    throw DataError("forward: edge type id out of range");
  if (neighbor_cap > 0 && rng == nullptr)
    throw DataError("forward: neighbor_cap requires an rng");

  const auto s = static_cast<Eigen::Index>(params.dims.edge_dim);
  const auto m = static_cast<Eigen::Index>(params.dims.num_edge_types);
  const std::size_t K = params.dims.levels;

  // Base part is shared by both paths.
  if constexpr (kInductive) {
    const NodeTypeId z = graph.node_type(node);
    const auto& attrs = graph.attributes(node);
    Eigen::Map<const Eigen::VectorXd> x(attrs.data(), attrs.size());
    const Transform& ht = params.h[z];
    if (ht.is_mlp()) {
      h_hidden_ = (ht.w1 * x + ht.b1).array().tanh();
      value_ = ht.w2 * h_hidden_ + ht.b2;
    } else {
      value_ = ht.w1 * x + ht.b1;
    }
    value_ += params.beta[static_cast<Eigen::Index>(target)] *
              (params.attr_out[z].transpose() * x);
  } else {
    value_ = params.base.col(node);
  }

  const double alpha = params.alpha[static_cast<Eigen::Index>(target)];
  aggregation_skipped_ = (alpha == 0.0);
  if (aggregation_skipped_) return;

  levels_.resize(params.dims.num_edge_types);
  stacked_.resize(s, m);
  for (EdgeTypeId r = 0; r < params.dims.num_edge_types; ++r) {
    build_frontiers(graph, r, K, neighbor_cap, rng);
    auto& lv = levels_[r];
    // Level 0: raw edge embeddings (transductive) or attribute transforms.
    Level& l0 = lv[0];
    const auto n0 = static_cast<Eigen::Index>(l0.nodes.size());
    l0.values.resize(s, n0);
    if constexpr (kInductive) {
      bool any_mlp = false;
      for (Eigen::Index i = 0; i < n0; ++i) {
        const NodeId v = l0.nodes[i];
        const NodeTypeId z = graph.node_type(v);
        const auto& attrs = graph.attributes(v);
        Eigen::Map<const Eigen::VectorXd> x(attrs.data(), attrs.size());
        const Transform& gt = params.g[z][r];
        if (gt.is_mlp()) {
          if (!any_mlp) {
            l0.hidden.resize(gt.w1.rows(), n0);
            any_mlp = true;
          }
          l0.hidden.col(i) = (gt.w1 * x + gt.b1).array().tanh();
          l0.values.col(i) = gt.w2 * l0.hidden.col(i) + gt.b2;
        } else {
          l0.values.col(i) = gt.w1 * x + gt.b1;
        }
      }
    } else {
      for (Eigen::Index i = 0; i < n0; ++i)
        l0.values.col(i) = params.edge0[r].col(l0.nodes[i]);
    }
    // Levels 1..K: mean over children, then the level's linear map.
    for (std::size_t k = 1; k <= K; ++k) {
      Level& cur = lv[k];
      const Level& below = lv[k - 1];
      const auto n = static_cast<Eigen::Index>(cur.nodes.size());
      cur.means.resize(s, n);
      cur.values.resize(s, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const std::uint32_t b = cur.child_offsets[i];
        const std::uint32_t e = cur.child_offsets[i + 1];
        auto mean = cur.means.col(i);
        mean.setZero();
        for (std::uint32_t c = b; c < e; ++c)
          mean += below.values.col(cur.children[c]);
        mean /= static_cast<double>(e - b);
      }
      cur.values.noalias() = params.agg_weights[k - 1] * cur.means;
      if (params.activation == Activation::kTanh)
        cur.values = cur.values.array().tanh();
    }
    stacked_.col(static_cast<Eigen::Index>(r)) = lv[K].values.col(0);
  }

  // Attention over edge types, then the target type's combination.
  attn_pre_.noalias() = params.attn_mat[target] * stacked_;
  attn_tanh_ = attn_pre_.array().tanh();
  scores_ = attn_tanh_.transpose() * params.attn_vec[target];
  const double mx = scores_.maxCoeff();
  attention_ = (scores_.array() - mx).exp();
  attention_ /= attention_.sum();
  combined_.noalias() = stacked_ * attention_;
  value_.noalias() +=
      alpha * (params.transform[target].transpose() * combined_);
}

template <typename Params>
void ForwardTape::backprop(const Params& params,
                           const Eigen::VectorXd& grad_value,
                           GradientSet& grads) {
  constexpr bool kInductive = std::is_same_v<Params, InductiveParams>;

  if constexpr (kInductive) {
    const NodeTypeId z = graph_->node_type(node_);
    const auto& attrs = graph_->attributes(node_);
    Eigen::Map<const Eigen::VectorXd> x(attrs.data(), attrs.size());
    transform_backward(params.h[z], x, h_hidden_, grad_value, grads.h_grad(z));
    grads.attr_out_grad(z).noalias() +=
        params.beta[static_cast<Eigen::Index>(target_)] *
        (x * grad_value.transpose());
  } else {
    grads.base_grad(node_) += grad_value;
  }
  if (aggregation_skipped_) return;

  const double alpha = params.alpha[static_cast<Eigen::Index>(target_)];
  const std::size_t K = params.dims.levels;

  grads.transform_grad(target_).noalias() +=
      alpha * (combined_ * grad_value.transpose());
  grad_combined_.noalias() = alpha * (params.transform[target_] * grad_value);

  grad_stacked_.noalias() = grad_combined_ * attention_.transpose();
  grad_attention_.noalias() = stacked_.transpose() * grad_combined_;
  const double dot = attention_.dot(grad_attention_);
  grad_scores_ = attention_.array() * (grad_attention_.array() - dot);

  grads.attn_vec_grad(target_).noalias() += attn_tanh_ * grad_scores_;
  grad_attn_tanh_.noalias() = params.attn_vec[target_] * grad_scores_.transpose();
  grad_attn_pre_ =
      (1.0 - attn_tanh_.array().square()) * grad_attn_tanh_.array();
  grads.attn_mat_grad(target_).noalias() +=
      grad_attn_pre_ * stacked_.transpose();
  grad_stacked_.noalias() += params.attn_mat[target_].transpose() * grad_attn_pre_;

  for (EdgeTypeId r = 0; r < params.dims.num_edge_types; ++r) {
    auto& lv = levels_[r];
    lv[K].grads.resize(lv[K].values.rows(), 1);
    lv[K].grads.col(0) = grad_stacked_.col(static_cast<Eigen::Index>(r));
    for (std::size_t k = K; k >= 1; --k) {
      Level& cur = lv[k];
      Level& below = lv[k - 1];
      below.grads.resize(below.values.rows(), below.values.cols());
      below.grads.setZero();
      const auto n = static_cast<Eigen::Index>(cur.nodes.size());
      for (Eigen::Index i = 0; i < n; ++i) {
        if (params.activation == Activation::kTanh)
          grad_pre_ = (1.0 - cur.values.col(i).array().square()) *
                      cur.grads.col(i).array();
        else
          grad_pre_ = cur.grads.col(i);
        grads.agg_weight_grad(k - 1).noalias() +=
            grad_pre_ * cur.means.col(i).transpose();
        grad_mean_.noalias() = params.agg_weights[k - 1].transpose() * grad_pre_;
        const std::uint32_t b = cur.child_offsets[i];
        const std::uint32_t e = cur.child_offsets[i + 1];
        grad_mean_ /= static_cast<double>(e - b);
        for (std::uint32_t c = b; c < e; ++c)
          below.grads.col(cur.children[c]) += grad_mean_;
      }
    }
    // Level 0 closes out into the per-node tables or the attribute maps.
    Level& l0 = lv[0];
    const auto n0 = static_cast<Eigen::Index>(l0.nodes.size());
    if constexpr (kInductive) {
      for (Eigen::Index i = 0; i < n0; ++i) {
        const NodeId v = l0.nodes[i];
        const NodeTypeId z = graph_->node_type(v);
        const auto& attrs = graph_->attributes(v);
        Eigen::Map<const Eigen::VectorXd> x(attrs.data(), attrs.size());
        const Transform& gt = params.g[z][r];
        if (gt.is_mlp())
          transform_backward(gt, x, l0.hidden.col(i), l0.grads.col(i),
                             grads.g_grad(z, r));
        else
          transform_backward(gt, x, h_hidden_, l0.grads.col(i),
                             grads.g_grad(z, r));
      }
    } else {
      for (Eigen::Index i = 0; i < n0; ++i)
        grads.edge0_grad(r, l0.nodes[i]) += l0.grads.col(i);
    }
  }
}

const Eigen::VectorXd& ForwardTape::forward(const HeterogeneousGraph& graph,
                                            const TransductiveParams& params,
                                            NodeId node, EdgeTypeId target,
                                            std::size_t neighbor_cap,
                                            Rng* rng) {
  run(graph, params, node, target, neighbor_cap, rng);
  return value_;
}

const Eigen::VectorXd& ForwardTape::forward(const HeterogeneousGraph& graph,
                                            const InductiveParams& params,
                                            NodeId node, EdgeTypeId target,
                                            std::size_t neighbor_cap,
                                            Rng* rng) {
  run(graph, params, node, target, neighbor_cap, rng);
  return value_;
}

void ForwardTape::backward(const TransductiveParams& params,
                           const Eigen::VectorXd& grad_value,
                           GradientSet& grads) {
  backprop(params, grad_value, grads);
}

void ForwardTape::backward(const InductiveParams& params,
                           const Eigen::VectorXd& grad_value,
                           GradientSet& grads) {
  backprop(params, grad_value, grads);
}

}  // namespace msm
