#include "msm/model.hpp"

#include <cmath>
#include <unordered_map>

#include "msm/rng.hpp"

namespace msm {

namespace {

void fill_uniform(Eigen::MatrixXd& m, Rng& rng, double lo, double hi) {
  for (Eigen::Index i = 0; i < m.size(); ++i)
    m.data()[i] = rng.uniform(lo, hi);
}

void fill_uniform(Eigen::VectorXd& v, Rng& rng, double lo, double hi) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.uniform(lo, hi);
}

void fill_xavier(Eigen::MatrixXd& m, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  fill_uniform(m, rng, -limit, limit);
}

Transform init_transform(std::size_t in, std::size_t out, TransformKind kind,
                         std::size_t mlp_hidden, Rng& rng) {
  Transform t;
  if (kind == TransformKind::kAffine) {
    t.w1.resize(out, in);
    fill_xavier(t.w1, rng);
    t.b1 = Eigen::VectorXd::Zero(out);
  } else {
    t.w1.resize(mlp_hidden, in);
    fill_xavier(t.w1, rng);
    t.b1 = Eigen::VectorXd::Zero(mlp_hidden);
    t.w2.resize(out, mlp_hidden);
    fill_xavier(t.w2, rng);
    t.b2 = Eigen::VectorXd::Zero(out);
  }
  return t;
}

Eigen::VectorXd activate(Activation act, const Eigen::VectorXd& x) {
  if (act == Activation::kIdentity) return x;
  return x.array().tanh();
}

}  // namespace

Eigen::VectorXd Transform::operator()(const Eigen::VectorXd& x) const {
  if (!is_mlp()) return w1 * x + b1;
  return w2 * (w1 * x + b1).array().tanh().matrix() + b2;
}

TransductiveParams TransductiveParams::init(const ModelDims& dims,
                                            Activation activation,
                                            double alpha_value,
                                            std::uint64_t seed) {
  if (dims.num_edge_types < 1) throw DataError("model needs >= 1 edge type");
  TransductiveParams p;
  p.dims = dims;
  p.activation = activation;
  Rng rng(derive_seed(seed, 0x6d736d74));

  const auto N = static_cast<Eigen::Index>(dims.num_nodes);
  const auto d = static_cast<Eigen::Index>(dims.dim);
  const auto s = static_cast<Eigen::Index>(dims.edge_dim);
  const auto da = static_cast<Eigen::Index>(dims.attn_dim);

  p.base.resize(d, N);
  fill_uniform(p.base, rng, -0.5 / dims.dim, 0.5 / dims.dim);
  p.edge0.resize(dims.num_edge_types);
  for (auto& e : p.edge0) {
    e.resize(s, N);
    fill_uniform(e, rng, -0.5 / dims.edge_dim, 0.5 / dims.edge_dim);
  }
  p.agg_weights.resize(dims.levels);
  for (auto& w : p.agg_weights) {
    w.resize(s, s);
    fill_xavier(w, rng);
  }
  p.attn_vec.resize(dims.num_edge_types);
  for (auto& w : p.attn_vec) {
    w.resize(da);
    fill_uniform(w, rng, -0.1, 0.1);
  }
  p.attn_mat.resize(dims.num_edge_types);
  for (auto& w : p.attn_mat) {
    w.resize(da, s);
    fill_xavier(w, rng);
  }
  p.transform.resize(dims.num_edge_types);
  for (auto& w : p.transform) {
    w.resize(s, d);
    fill_xavier(w, rng);
  }
  p.alpha = Eigen::VectorXd::Constant(dims.num_edge_types, alpha_value);
  p.context = Eigen::MatrixXd::Zero(d, N);
  return p;
}

InductiveParams InductiveParams::init(const ModelDims& dims,
                                      const std::vector<std::size_t>& attr_dims,
                                      Activation activation, TransformKind kind,
                                      std::size_t mlp_hidden,
                                      double alpha_value, double beta_value,
                                      std::uint64_t seed) {
  if (dims.num_edge_types < 1) throw DataError("model needs >= 1 edge type");
  for (std::size_t z = 0; z < attr_dims.size(); ++z)
    if (attr_dims[z] == 0)
      throw DataError("inductive model: node type " + std::to_string(z) +
                      " has no attributes");
  InductiveParams p;
  p.dims = dims;
  p.activation = activation;
  p.attr_dims = attr_dims;
  Rng rng(derive_seed(seed, 0x6d736d69));

  const auto d = static_cast<Eigen::Index>(dims.dim);
  const auto s = static_cast<Eigen::Index>(dims.edge_dim);
  const auto da = static_cast<Eigen::Index>(dims.attn_dim);

  for (std::size_t z = 0; z < attr_dims.size(); ++z)
    p.h.push_back(init_transform(attr_dims[z], dims.dim, kind, mlp_hidden, rng));
  p.g.resize(attr_dims.size());
  for (std::size_t z = 0; z < attr_dims.size(); ++z)
    for (std::size_t r = 0; r < dims.num_edge_types; ++r)
      p.g[z].push_back(
          init_transform(attr_dims[z], dims.edge_dim, kind, mlp_hidden, rng));
  for (std::size_t z = 0; z < attr_dims.size(); ++z) {
    Eigen::MatrixXd o(static_cast<Eigen::Index>(attr_dims[z]), d);
    fill_xavier(o, rng);
    p.attr_out.push_back(std::move(o));
  }
  p.beta = Eigen::VectorXd::Constant(dims.num_edge_types, beta_value);

  p.agg_weights.resize(dims.levels);
  for (auto& w : p.agg_weights) {
    w.resize(s, s);
    fill_xavier(w, rng);
  }
  p.attn_vec.resize(dims.num_edge_types);
  for (auto& w : p.attn_vec) {
    w.resize(da);
    fill_uniform(w, rng, -0.1, 0.1);
  }
  p.attn_mat.resize(dims.num_edge_types);
  for (auto& w : p.attn_mat) {
    w.resize(da, s);
    fill_xavier(w, rng);
  }
  p.transform.resize(dims.num_edge_types);
  for (auto& w : p.transform) {
    w.resize(s, d);
    fill_xavier(w, rng);
  }
  p.alpha = Eigen::VectorXd::Constant(dims.num_edge_types, alpha_value);
  p.context =
      Eigen::MatrixXd::Zero(d, static_cast<Eigen::Index>(dims.num_nodes));
  return p;
}

namespace {

// Memoized recursion over the k-hop neighborhood under one edge type.
class LevelEvaluator {
 public:
  LevelEvaluator(const HeterogeneousGraph& graph,
                 const std::vector<Eigen::MatrixXd>& agg_weights,
                 Activation activation,
                 std::function<Eigen::VectorXd(NodeId)> level0, EdgeTypeId r)
      : graph_(graph),
        agg_weights_(agg_weights),
        activation_(activation),
        level0_(std::move(level0)),
        r_(r) {}

  Eigen::VectorXd eval(NodeId node, std::size_t level) {
    if (level == 0) return level0_(node);
    if (level > agg_weights_.size())
      throw DataError("aggregation level exceeds configured depth");
    auto& memo = memo_for(level);
    if (auto it = memo.find(node); it != memo.end()) return it->second;
    const auto& neigh = graph_.neighbors(node, r_);
    Eigen::VectorXd mean;
    if (neigh.empty()) {
      mean = eval(node, level - 1);
    } else {
      mean = eval(neigh[0], level - 1);
      for (std::size_t j = 1; j < neigh.size(); ++j)
        mean += eval(neigh[j], level - 1);
      mean /= static_cast<double>(neigh.size());
    }
    Eigen::VectorXd out =
        activate(activation_, agg_weights_[level - 1] * mean);
    memo.emplace(node, out);
    return out;
  }

 private:
  std::unordered_map<NodeId, Eigen::VectorXd>& memo_for(std::size_t level) {
    if (memos_.size() < level) memos_.resize(level);
    return memos_[level - 1];
  }

  const HeterogeneousGraph& graph_;
  const std::vector<Eigen::MatrixXd>& agg_weights_;
  Activation activation_;
  std::function<Eigen::VectorXd(NodeId)> level0_;
  EdgeTypeId r_;
  std::vector<std::unordered_map<NodeId, Eigen::VectorXd>> memos_;
};

}  // namespace

Eigen::VectorXd aggregate_edge_embedding(const HeterogeneousGraph& graph,
                                         const TransductiveParams& params,
                                         NodeId node, EdgeTypeId r,
                                         std::size_t level) {
  if (r >= params.edge0.size()) throw DataError("edge type id out of range");
  LevelEvaluator eval(
      graph, params.agg_weights, params.activation,
      [&](NodeId v) -> Eigen::VectorXd { return params.edge0[r].col(v); }, r);
  return eval.eval(node, level);
}

Eigen::VectorXd aggregate_edge_embedding(const HeterogeneousGraph& graph,
                                         const InductiveParams& params,
                                         NodeId node, EdgeTypeId r,
                                         std::size_t level) {
  if (r >= params.dims.num_edge_types)
    throw DataError("edge type id out of range");
  LevelEvaluator eval(
      graph, params.agg_weights, params.activation,
      [&](NodeId v) { return inductive_edge0(params, graph, v, r); }, r);
  return eval.eval(node, level);
}

Eigen::VectorXd attention_coefficients(const Eigen::VectorXd& attn_vec,
                                       const Eigen::MatrixXd& attn_mat,
                                       const Eigen::MatrixXd& U) {
  if (attn_mat.cols() != U.rows() || attn_mat.rows() != attn_vec.size())
    throw DataError("attention_coefficients: dimension mismatch");
  Eigen::VectorXd scores =
      (attn_mat * U).array().tanh().matrix().transpose() * attn_vec;
  const double max = scores.maxCoeff();
  Eigen::VectorXd exps = (scores.array() - max).exp();
  return exps / exps.sum();
}

namespace {

template <typename Params>
Eigen::VectorXd overall_from_stacked(const Params& params,
                                     const Eigen::VectorXd& base_part,
                                     const Eigen::MatrixXd& U, EdgeTypeId r) {
  const double alpha = params.alpha[static_cast<Eigen::Index>(r)];
  if (alpha == 0.0) return base_part;
  Eigen::VectorXd a =
      attention_coefficients(params.attn_vec[r], params.attn_mat[r], U);
  return base_part + alpha * (params.transform[r].transpose() * (U * a));
}

template <typename Params>
Eigen::MatrixXd stack_top_embeddings(const HeterogeneousGraph& graph,
                                     const Params& params, NodeId node) {
  const auto s = static_cast<Eigen::Index>(params.dims.edge_dim);
  const auto m = static_cast<Eigen::Index>(params.dims.num_edge_types);
  Eigen::MatrixXd U(s, m);
  for (Eigen::Index r = 0; r < m; ++r)
    U.col(r) = aggregate_edge_embedding(graph, params, node,
                                        static_cast<EdgeTypeId>(r),
                                        params.dims.levels);
  return U;
}

}  // namespace

Eigen::VectorXd overall_embedding_t(const HeterogeneousGraph& graph,
                                    const TransductiveParams& params,
                                    NodeId node, EdgeTypeId r) {
  Eigen::VectorXd base_part = params.base.col(node);
  if (params.alpha[static_cast<Eigen::Index>(r)] == 0.0) return base_part;
  return overall_from_stacked(params, base_part,
                              stack_top_embeddings(graph, params, node), r);
}

Eigen::VectorXd inductive_base(const InductiveParams& params,
                               const HeterogeneousGraph& graph, NodeId node) {
  if (!graph.has_attributes(node))
    throw DataError("inductive model: node '" + graph.node_name(node) +
                    "' has no attributes");
  const auto& x = graph.attributes(node);
  return params.h[graph.node_type(node)](
      Eigen::Map<const Eigen::VectorXd>(x.data(), x.size()));
}

Eigen::VectorXd inductive_edge0(const InductiveParams& params,
                                const HeterogeneousGraph& graph, NodeId node,
                                EdgeTypeId r) {
  if (!graph.has_attributes(node))
    throw DataError("inductive model: node '" + graph.node_name(node) +
                    "' has no attributes");
  const auto& x = graph.attributes(node);
  return params.g[graph.node_type(node)][r](
      Eigen::Map<const Eigen::VectorXd>(x.data(), x.size()));
}

Eigen::VectorXd overall_embedding_i(const HeterogeneousGraph& graph,
                                    const InductiveParams& params, NodeId node,
                                    EdgeTypeId r) {
  const NodeTypeId z = graph.node_type(node);
  const auto& attrs = graph.attributes(node);
  Eigen::Map<const Eigen::VectorXd> x(attrs.data(), attrs.size());
  Eigen::VectorXd base_part = params.h[z](x);
  base_part += params.beta[static_cast<Eigen::Index>(r)] *
               (params.attr_out[z].transpose() * x);
  if (params.alpha[static_cast<Eigen::Index>(r)] == 0.0) return base_part;
  return overall_from_stacked(params, base_part,
                              stack_top_embeddings(graph, params, node), r);
}

Eigen::VectorXd embed_unseen(const HeterogeneousGraph& graph,
                             const InductiveParams& params,
                             const UnseenNode& node, EdgeTypeId r) {
  const std::size_t m = params.dims.num_edge_types;
  const std::size_t K = params.dims.levels;
  const NodeTypeId z = node.node_type;
  if (z >= params.attr_dims.size())
    throw DataError("embed_unseen: unknown node type id");
  if (static_cast<std::size_t>(node.attributes.size()) != params.attr_dims[z])
    throw DataError("embed_unseen: node is missing attributes (expected " +
                    std::to_string(params.attr_dims[z]) + " values, got " +
                    std::to_string(node.attributes.size()) + ")");
  std::vector<std::vector<NodeId>> neighbors_by_type(m);
  for (const auto& [v, et] : node.edges) {
    if (v >= graph.num_nodes())
      throw DataError("embed_unseen: unknown neighbor id " + std::to_string(v));
    if (et >= m)
      throw DataError("embed_unseen: unknown edge type id " +
                      std::to_string(et));
    neighbors_by_type[et].push_back(v);
  }

  // The new node's level-k embedding aggregates snapshot nodes' level-(k-1)
  // embeddings; snapshot nodes keep their snapshot neighborhoods.
  const auto s = static_cast<Eigen::Index>(params.dims.edge_dim);
  Eigen::MatrixXd U(s, static_cast<Eigen::Index>(m));
  for (std::size_t rr = 0; rr < m; ++rr) {
    LevelEvaluator snapshot(
        graph, params.agg_weights, params.activation,
        [&](NodeId v) {
          return inductive_edge0(params, graph, v, static_cast<EdgeTypeId>(rr));
        },
        static_cast<EdgeTypeId>(rr));
    Eigen::VectorXd own = params.g[z][rr](node.attributes);
    const auto& neigh = neighbors_by_type[rr];
    for (std::size_t k = 1; k <= K; ++k) {
      Eigen::VectorXd mean;
      if (neigh.empty()) {
        mean = own;
      } else {
        mean = snapshot.eval(neigh[0], k - 1);
        for (std::size_t j = 1; j < neigh.size(); ++j)
          mean += snapshot.eval(neigh[j], k - 1);
        mean /= static_cast<double>(neigh.size());
      }
      own = activate(params.activation, params.agg_weights[k - 1] * mean);
    }
    U.col(static_cast<Eigen::Index>(rr)) = own;
  }

  Eigen::VectorXd base_part = params.h[z](node.attributes);
  base_part += params.beta[static_cast<Eigen::Index>(r)] *
               (params.attr_out[z].transpose() * node.attributes);
  return overall_from_stacked(params, base_part, U, r);
}

namespace {

// Level-wise pass over the whole graph: values for level k of every node
// from the full level-(k-1) matrix. Matches the per-node recursion exactly,
// including the empty-neighborhood fallback.
Eigen::MatrixXd propagate_levels(const HeterogeneousGraph& graph,
                                 const std::vector<Eigen::MatrixXd>& weights,
                                 Activation activation, Eigen::MatrixXd values,
                                 EdgeTypeId r) {
  const auto n = values.cols();
  Eigen::MatrixXd next(values.rows(), n);
  Eigen::VectorXd mean(values.rows());
  for (const auto& w : weights) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& neigh = graph.neighbors(static_cast<NodeId>(i), r);
      if (neigh.empty()) {
        mean = values.col(i);
      } else {
        mean.setZero();
        for (NodeId j : neigh) mean += values.col(j);
        mean /= static_cast<double>(neigh.size());
      }
      next.col(i) = w * mean;
    }
    if (activation == Activation::kTanh)
      next = next.array().tanh().matrix();
    values.swap(next);
  }
  return values;
}

template <typename Params, typename Level0Fn, typename BaseFn>
std::vector<Eigen::MatrixXd> all_embeddings_impl(
    const HeterogeneousGraph& graph, const Params& params, Level0Fn level0,
    BaseFn base_of) {
  const std::size_t m = params.dims.num_edge_types;
  const auto n = static_cast<Eigen::Index>(graph.num_nodes());
  const auto s = static_cast<Eigen::Index>(params.dims.edge_dim);
  const auto d = static_cast<Eigen::Index>(params.dims.dim);

  std::vector<Eigen::MatrixXd> top(m);
  for (std::size_t r = 0; r < m; ++r) {
    Eigen::MatrixXd v0(s, n);
    for (Eigen::Index i = 0; i < n; ++i)
      v0.col(i) = level0(static_cast<NodeId>(i), static_cast<EdgeTypeId>(r));
    top[r] = propagate_levels(graph, params.agg_weights, params.activation,
                              std::move(v0), static_cast<EdgeTypeId>(r));
  }

  std::vector<Eigen::MatrixXd> out(m, Eigen::MatrixXd(d, n));
  Eigen::MatrixXd U(s, static_cast<Eigen::Index>(m));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < m; ++r)
      U.col(static_cast<Eigen::Index>(r)) = top[r].col(i);
    for (std::size_t r = 0; r < m; ++r) {
      out[r].col(i) = overall_from_stacked(
          params, base_of(static_cast<NodeId>(i), static_cast<EdgeTypeId>(r)),
          U, static_cast<EdgeTypeId>(r));
    }
  }
  return out;
}

}  // namespace

std::vector<Eigen::MatrixXd> all_overall_embeddings(
    const HeterogeneousGraph& graph, const TransductiveParams& params) {
  if (graph.num_nodes() != params.dims.num_nodes)
    throw DataError("all_overall_embeddings: graph/params size mismatch");
  return all_embeddings_impl(
      graph, params,
      [&](NodeId i, EdgeTypeId r) -> Eigen::VectorXd {
        return params.edge0[r].col(i);
      },
      [&](NodeId i, EdgeTypeId) -> Eigen::VectorXd {
        return params.base.col(i);
      });
}

std::vector<Eigen::MatrixXd> all_overall_embeddings(
    const HeterogeneousGraph& graph, const InductiveParams& params) {
  if (graph.num_nodes() != params.dims.num_nodes)
    throw DataError("all_overall_embeddings: graph/params size mismatch");
  return all_embeddings_impl(
      graph, params,
      [&](NodeId i, EdgeTypeId r) {
        return inductive_edge0(params, graph, i, r);
      },
      [&](NodeId i, EdgeTypeId r) -> Eigen::VectorXd {
        const NodeTypeId z = graph.node_type(i);
        const auto& attrs = graph.attributes(i);
        Eigen::Map<const Eigen::VectorXd> x(attrs.data(), attrs.size());
        return params.h[z](x) + params.beta[static_cast<Eigen::Index>(r)] *
                                    (params.attr_out[z].transpose() * x);
      });
}

}  // namespace msm
