#pragma once
// Reference implementations the tests compare the library against.
// Deliberately naive: plain loops and recursion, no code shared with the
// library. Reads Eigen storage element-by-element only.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "msm/graph.hpp"
#include "msm/model.hpp"

namespace oracle {

using Vec = std::vector<double>;

inline Vec to_vec(const Eigen::VectorXd& v) {
  Vec out(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i)
    out[static_cast<std::size_t>(i)] = v[i];
  return out;
}

inline Vec column(const Eigen::MatrixXd& m, std::size_t col) {
  Vec out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    out[static_cast<std::size_t>(i)] = m(i, static_cast<Eigen::Index>(col));
  return out;
}

inline Vec matvec(const Eigen::MatrixXd& a, const Vec& x) {
  Vec y(static_cast<std::size_t>(a.rows()), 0.0);
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c)
      y[static_cast<std::size_t>(r)] +=
          a(r, c) * x[static_cast<std::size_t>(c)];
  return y;
}

inline Vec mat_t_vec(const Eigen::MatrixXd& a, const Vec& x) {
  Vec y(static_cast<std::size_t>(a.cols()), 0.0);
  for (Eigen::Index c = 0; c < a.cols(); ++c)
    for (Eigen::Index r = 0; r < a.rows(); ++r)
      y[static_cast<std::size_t>(c)] +=
          a(r, c) * x[static_cast<std::size_t>(r)];
  return y;
}

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double activate(msm::Activation a, double t) {
  return a == msm::Activation::kTanh ? std::tanh(t) : t;
}

inline Vec apply_transform(const msm::Transform& t, const Vec& x) {
  Vec h = matvec(t.w1, x);
  for (std::size_t i = 0; i < h.size(); ++i) h[i] += t.b1[static_cast<Eigen::Index>(i)];
  if (!t.is_mlp()) return h;
  for (double& v : h) v = std::tanh(v);
  Vec o = matvec(t.w2, h);
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += t.b2[static_cast<Eigen::Index>(i)];
  return o;
}

// Level-k edge embedding, transductive: literal recursion over the
// neighbor-mean recurrence. Exponential in k; fine at test scale.
inline Vec edge_embedding_t(const msm::HeterogeneousGraph& g,
                            const msm::TransductiveParams& p, msm::NodeId node,
                            msm::EdgeTypeId r, std::size_t k) {
  if (k == 0) return column(p.edge0[r], node);
  const auto& nbrs = g.neighbors(node, r);
  Vec mean(static_cast<std::size_t>(p.edge0[r].rows()), 0.0);
  if (nbrs.empty()) {
    mean = edge_embedding_t(g, p, node, r, k - 1);
  } else {
    for (msm::NodeId j : nbrs) {
      const Vec c = edge_embedding_t(g, p, j, r, k - 1);
      for (std::size_t a = 0; a < mean.size(); ++a) mean[a] += c[a];
    }
    for (double& v : mean) v /= static_cast<double>(nbrs.size());
  }
  Vec out = matvec(p.agg_weights[k - 1], mean);
  for (double& v : out) v = activate(p.activation, v);
  return out;
}

inline Vec edge_embedding_i(const msm::HeterogeneousGraph& g,
                            const msm::InductiveParams& p, msm::NodeId node,
                            msm::EdgeTypeId r, std::size_t k) {
  if (k == 0) {
    const auto& attrs = g.attributes(node);
    Vec x(attrs.begin(), attrs.end());
    return apply_transform(p.g[g.node_type(node)][r], x);
  }
  const auto& nbrs = g.neighbors(node, r);
  Vec mean(p.dims.edge_dim, 0.0);
  if (nbrs.empty()) {
    mean = edge_embedding_i(g, p, node, r, k - 1);
  } else {
    for (msm::NodeId j : nbrs) {
      const Vec c = edge_embedding_i(g, p, j, r, k - 1);
      for (std::size_t a = 0; a < mean.size(); ++a) mean[a] += c[a];
    }
    for (double& v : mean) v /= static_cast<double>(nbrs.size());
  }
  Vec out = matvec(p.agg_weights[k - 1], mean);
  for (double& v : out) v = activate(p.activation, v);
  return out;
}

// Softmax over edge types of w . tanh(W u_q).
inline Vec attention(const Eigen::VectorXd& w, const Eigen::MatrixXd& W,
                     const std::vector<Vec>& columns) {
  Vec scores(columns.size(), 0.0);
  for (std::size_t q = 0; q < columns.size(); ++q) {
    Vec t = matvec(W, columns[q]);
    for (double& v : t) v = std::tanh(v);
    scores[q] = dot(to_vec(w), t);
  }
  double max = scores[0];
  for (double s : scores) max = std::max(max, s);
  double z = 0.0;
  Vec out(scores.size());
  for (std::size_t q = 0; q < scores.size(); ++q) {
    out[q] = std::exp(scores[q] - max);
    z += out[q];
  }
  for (double& v : out) v /= z;
  return out;
}

inline Vec overall_t(const msm::HeterogeneousGraph& g,
                     const msm::TransductiveParams& p, msm::NodeId node,
                     msm::EdgeTypeId r) {
  std::vector<Vec> cols;
  for (std::size_t q = 0; q < p.dims.num_edge_types; ++q)
    cols.push_back(edge_embedding_t(g, p, node,
                                    static_cast<msm::EdgeTypeId>(q),
                                    p.dims.levels));
  const Vec a = attention(p.attn_vec[r], p.attn_mat[r], cols);
  Vec combined(p.dims.edge_dim, 0.0);
  for (std::size_t q = 0; q < cols.size(); ++q)
    for (std::size_t i = 0; i < combined.size(); ++i)
      combined[i] += a[q] * cols[q][i];
  Vec out = column(p.base, node);
  const Vec proj = mat_t_vec(p.transform[r], combined);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] += p.alpha[static_cast<Eigen::Index>(r)] * proj[i];
  return out;
}

inline Vec overall_i(const msm::HeterogeneousGraph& g,
                     const msm::InductiveParams& p, msm::NodeId node,
                     msm::EdgeTypeId r) {
  const auto& attrs = g.attributes(node);
  Vec x(attrs.begin(), attrs.end());
  const msm::NodeTypeId z = g.node_type(node);

  std::vector<Vec> cols;
  for (std::size_t q = 0; q < p.dims.num_edge_types; ++q)
    cols.push_back(edge_embedding_i(g, p, node,
                                    static_cast<msm::EdgeTypeId>(q),
                                    p.dims.levels));
  const Vec a = attention(p.attn_vec[r], p.attn_mat[r], cols);
  Vec combined(p.dims.edge_dim, 0.0);
  for (std::size_t q = 0; q < cols.size(); ++q)
    for (std::size_t i = 0; i < combined.size(); ++i)
      combined[i] += a[q] * cols[q][i];

  Vec out = apply_transform(p.h[z], x);
  const Vec proj = mat_t_vec(p.transform[r], combined);
  const Vec attr_term = mat_t_vec(p.attr_out[z], x);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] += p.alpha[static_cast<Eigen::Index>(r)] * proj[i] +
              p.beta[static_cast<Eigen::Index>(r)] * attr_term[i];
  return out;
}

inline double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

// Skip-gram NS loss from already-computed vectors.
inline double pair_loss(const Vec& value, const Vec& context,
                        const std::vector<Vec>& negatives) {
  double loss = -std::log(sigmoid(dot(context, value)));
  for (const Vec& n : negatives) loss += -std::log(sigmoid(-dot(n, value)));
  return loss;
}

// --- metrics ---------------------------------------------------------------

// O(n^2) pairwise Mann-Whitney statistic.
inline double roc_auc(const std::vector<double>& scores,
                      const std::vector<int>& labels) {
  double num = 0.0;
  std::size_t pos = 0, neg = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) continue;
    ++pos;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j]) continue;
      if (scores[i] > scores[j]) num += 1.0;
      else if (scores[i] == scores[j]) num += 0.5;
    }
  }
  for (int l : labels) neg += (l == 0);
  return num / (static_cast<double>(pos) * static_cast<double>(neg));
}

// Step integration with confusion counts recomputed from scratch at every
// distinct threshold.
inline double pr_auc(const std::vector<double>& scores,
                     const std::vector<int>& labels) {
  std::vector<double> thresholds = scores;
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());
  std::size_t total_pos = 0;
  for (int l : labels) total_pos += (l != 0);

  double auc = 0.0;
  double prev_recall = 0.0;
  for (double t : thresholds) {
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < scores.size(); ++i)
      if (scores[i] >= t) (labels[i] ? tp : fp) += 1;
    const double recall =
        static_cast<double>(tp) / static_cast<double>(total_pos);
    const double precision =
        static_cast<double>(tp) / static_cast<double>(tp + fp);
    auc += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return auc;
}

inline double f1_at(const std::vector<double>& scores,
                    const std::vector<int>& labels, double threshold) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    if (pred && labels[i]) ++tp;
    else if (pred && !labels[i]) ++fp;
    else if (!pred && labels[i]) ++fn;
  }
  const double denom = static_cast<double>(2 * tp + fp + fn);
  return denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp) / denom;
}

// --- statistics ------------------------------------------------------------

// Wilson-Hilferty approximation of the chi-square 0.99 quantile.
inline double chi2_crit99(std::size_t df) {
  const double z99 = 2.3263478740408408;
  const double d = static_cast<double>(df);
  const double t = 1.0 - 2.0 / (9.0 * d) + z99 * std::sqrt(2.0 / (9.0 * d));
  return d * t * t * t;
}

inline double chi2_stat(const std::vector<std::size_t>& observed,
                        const std::vector<double>& expected) {
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double diff = static_cast<double>(observed[i]) - expected[i];
    stat += diff * diff / expected[i];
  }
  return stat;
}

}  // namespace oracle
