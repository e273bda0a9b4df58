#include "msm/trainer.hpp"

#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

namespace msm {

void TrainConfig::validate() const {
  if (window < 1) throw DataError("config: window must be >= 1");
  if (negatives < 1) throw DataError("config: negatives must be >= 1");
  if (!(learning_rate > 0.0)) throw DataError("config: learning_rate must be > 0");
  if (!(min_learning_rate > 0.0) || min_learning_rate > learning_rate)
    throw DataError("config: min_learning_rate must be in (0, learning_rate]");
  if (epochs < 1) throw DataError("config: epochs must be >= 1");
  if (batch_size < 1) throw DataError("config: batch_size must be >= 1");
  if (max_walk_length < 2) throw DataError("config: max_walk_length must be >= 2");
  if (walks_per_node < 1) throw DataError("config: walks_per_node must be >= 1");
  if (dim < 1 || edge_dim < 1 || attn_dim < 1)
    throw DataError("config: dims must be >= 1");
  if (levels < 1) throw DataError("config: levels must be >= 1");
  if (threads < 1) throw DataError("config: threads must be >= 1");
  if (transform_kind == TransformKind::kMlp && mlp_hidden < 1)
    throw DataError("config: mlp_hidden must be >= 1");
}

NegativeTable::NegativeTable(const HeterogeneousGraph& graph, double exponent) {
  tables_.resize(graph.num_node_types());
  prob_of_node_.assign(graph.num_nodes(), 0.0);
  for (NodeTypeId z = 0; z < graph.num_node_types(); ++z) {
    TypeTable& t = tables_[z];
    t.nodes = graph.nodes_of_type(z);
    const std::size_t n = t.nodes.size();
    if (n == 0) continue;
    std::vector<double> w(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = std::pow(static_cast<double>(graph.total_degree(t.nodes[i])),
                      exponent);
      total += w[i];
    }
    if (!(total > 0.0)) {
      std::fill(w.begin(), w.end(), 1.0);
      total = static_cast<double>(n);
    }
    for (std::size_t i = 0; i < n; ++i)
      prob_of_node_[t.nodes[i]] = w[i] / total;

    // Vose alias construction.
    t.accept.assign(n, 0.0);
    t.alias.assign(n, 0);
    std::vector<std::uint32_t> small, large;
    std::vector<double> scaled(n);
    for (std::size_t i = 0; i < n; ++i) {
      scaled[i] = w[i] / total * static_cast<double>(n);
      (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
    }
    while (!small.empty() && !large.empty()) {
      const std::uint32_t s = small.back();
      small.pop_back();
      const std::uint32_t l = large.back();
      t.accept[s] = scaled[s];
      t.alias[s] = l;
      scaled[l] -= 1.0 - scaled[s];
      if (scaled[l] < 1.0) {
        large.pop_back();
        small.push_back(l);
      }
    }
    for (std::uint32_t i : large) t.accept[i] = 1.0;
    for (std::uint32_t i : small) t.accept[i] = 1.0;  // rounding leftovers
  }
}

NodeId NegativeTable::sample(NodeTypeId type, Rng& rng) const {
  const TypeTable& t = tables_[type];
  if (t.nodes.empty())
    throw DataError("negative sampling: node type has no members");
  const std::size_t i = rng.index(t.nodes.size());
  if (rng.uniform01() < t.accept[i]) return t.nodes[i];
  return t.nodes[t.alias[i]];
}

double NegativeTable::probability(NodeId node) const {
  return prob_of_node_[node];
}

void sample_negatives(const NegativeTable& table, NodeTypeId type,
                      std::size_t count, Rng& rng, std::vector<NodeId>& out) {
  out.clear();
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(table.sample(type, rng));
}

namespace {

double log_sigmoid(double x) {
  // -softplus(-x), stable on both tails.
  if (x > 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

template <typename Params>
double loss_impl(const HeterogeneousGraph& graph, const Params& params,
                 const TrainingSample& sample,
                 const std::vector<NodeId>& negatives, ForwardTape& tape) {
  const Eigen::VectorXd& v =
      tape.forward(graph, params, sample.center, sample.edge_type);
  double loss = -log_sigmoid(params.context.col(sample.context).dot(v));
  for (NodeId n : negatives)
    loss -= log_sigmoid(-params.context.col(n).dot(v));
  return loss;
}

template <typename Params>
double gradients_impl(const HeterogeneousGraph& graph, const Params& params,
                      const TrainingSample& sample,
                      const std::vector<NodeId>& negatives, ForwardTape& tape,
                      GradientSet& grads) {
  const Eigen::VectorXd& v =
      tape.forward(graph, params, sample.center, sample.edge_type);
  Eigen::VectorXd grad_v = Eigen::VectorXd::Zero(v.size());

  const auto cu = params.context.col(sample.context);
  const double du = cu.dot(v);
  double loss = -log_sigmoid(du);
  const double gu = 1.0 / (1.0 + std::exp(-du)) - 1.0;  // s(du) - 1
  grad_v.noalias() += gu * cu;
  grads.context_grad(sample.context) += gu * v;

  for (NodeId n : negatives) {
    const auto cn = params.context.col(n);
    const double dn = cn.dot(v);
    loss -= log_sigmoid(-dn);
    const double gn = 1.0 / (1.0 + std::exp(-dn));  // s(dn)
    grad_v.noalias() += gn * cn;
    grads.context_grad(n) += gn * v;
  }

  tape.backward(params, grad_v, grads);
  return loss;
}

}  // namespace

double pair_loss(const HeterogeneousGraph& graph,
                 const TransductiveParams& params, const TrainingSample& sample,
                 const std::vector<NodeId>& negatives) {
  ForwardTape tape;
  return loss_impl(graph, params, sample, negatives, tape);
}

double pair_loss(const HeterogeneousGraph& graph, const InductiveParams& params,
                 const TrainingSample& sample,
                 const std::vector<NodeId>& negatives) {
  ForwardTape tape;
  return loss_impl(graph, params, sample, negatives, tape);
}

double pair_gradients(const HeterogeneousGraph& graph,
                      const TransductiveParams& params,
                      const TrainingSample& sample,
                      const std::vector<NodeId>& negatives, ForwardTape& tape,
                      GradientSet& grads) {
  return gradients_impl(graph, params, sample, negatives, tape, grads);
}

double pair_gradients(const HeterogeneousGraph& graph,
                      const InductiveParams& params,
                      const TrainingSample& sample,
                      const std::vector<NodeId>& negatives, ForwardTape& tape,
                      GradientSet& grads) {
  return gradients_impl(graph, params, sample, negatives, tape, grads);
}

WalkCorpus generate_corpus(const HeterogeneousGraph& graph,
                           const std::vector<MetapathSchema>& schemas,
                           std::size_t walks_per_node,
                           std::size_t max_walk_length, std::uint64_t seed) {
  WalkCorpus corpus;
  for (std::size_t i = 0; i < schemas.size(); ++i) {
    WalkCorpus part = generate_walks(graph, schemas[i], walks_per_node,
                                     max_walk_length, derive_seed(seed, 0x77 , i));
    corpus.walks.insert(corpus.walks.end(),
                        std::make_move_iterator(part.walks.begin()),
                        std::make_move_iterator(part.walks.end()));
  }
  return corpus;
}

namespace {

template <typename Params>
void train_loop(const HeterogeneousGraph& graph,
                const std::vector<MetapathSchema>& schemas,
                const TrainConfig& cfg, Params& params, TrainOutcome* outcome) {
  WalkCorpus corpus = generate_corpus(graph, schemas, cfg.walks_per_node,
                                      cfg.max_walk_length, cfg.seed);
  std::vector<TrainingSample> samples = context_pairs(corpus, cfg.window);
  if (samples.empty())
    throw DataError("training: walk corpus produced no context pairs");

  NegativeTable table(graph, cfg.neg_exponent);
  const std::size_t total_steps = samples.size() * cfg.epochs;
  const double lr0 = cfg.learning_rate;
  const double lr_min = cfg.min_learning_rate;
  auto lr_at = [&](std::size_t step) {
    const double f =
        1.0 - static_cast<double>(step) / static_cast<double>(total_steps);
    return std::max(lr_min, lr0 * f);
  };

  const std::size_t n_threads =
      (cfg.deterministic || cfg.threads <= 1) ? 1 : cfg.threads;

  if (outcome) {
    outcome->epoch_mean_loss.clear();
    outcome->epoch_learning_rate.clear();
    outcome->samples_per_epoch = samples.size();
  }

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(cfg.seed, 0x9e0 + epoch));
    shuffle_rng.shuffle(samples);
    const std::size_t epoch_base = epoch * samples.size();
    const double epoch_lr = lr_at(epoch_base);

    double epoch_loss = 0.0;
    if (n_threads == 1) {
      ForwardTape tape;
      GradientSet grads;
      grads.init(params);
      Rng neg_rng(derive_seed(cfg.seed, 0xe9 , epoch));
      std::vector<NodeId> negatives;
      std::size_t in_batch = 0;
      double batch_lr = lr_at(epoch_base);
      for (std::size_t i = 0; i < samples.size(); ++i) {
        const TrainingSample& s = samples[i];
        if (in_batch == 0) batch_lr = lr_at(epoch_base + i);
        sample_negatives(table, graph.node_type(s.context), cfg.negatives,
                         neg_rng, negatives);
        const double loss =
            pair_gradients(graph, params, s, negatives, tape, grads);
        if (!std::isfinite(loss))
          throw NumericError("training diverged: non-finite loss at epoch " +
                             std::to_string(epoch + 1) + ", step " +
                             std::to_string(i + 1));
        epoch_loss += loss;
        if (++in_batch == cfg.batch_size || i + 1 == samples.size()) {
          grads.apply_and_clear(params, batch_lr);
          in_batch = 0;
        }
      }
    } else {
      // Hogwild over contiguous shards: unsynchronized sparse writes to the
      // shared parameters, loss sums joined at the end of the epoch.
      std::atomic<std::size_t> progressed{0};
      std::vector<double> shard_loss(n_threads, 0.0);
      std::vector<std::string> shard_error(n_threads);
      std::vector<std::thread> workers;
      const std::size_t shard =
          (samples.size() + n_threads - 1) / n_threads;
      for (std::size_t t = 0; t < n_threads; ++t) {
        workers.emplace_back([&, t]() {
          const std::size_t begin = t * shard;
          const std::size_t end = std::min(samples.size(), begin + shard);
          if (begin >= end) return;
          try {
            ForwardTape tape;
            GradientSet grads;
            grads.init(params);
            Rng neg_rng(derive_seed(cfg.seed, 0xe9 , epoch * 131 + t));
            std::vector<NodeId> negatives;
            double lr = epoch_lr;
            std::size_t in_batch = 0;
            double local_loss = 0.0;
            for (std::size_t i = begin; i < end; ++i) {
              if ((i - begin) % 256 == 0) {
                const std::size_t done =
                    progressed.load(std::memory_order_relaxed);
                lr = lr_at(epoch_base + done);
              }
              const TrainingSample& s = samples[i];
              sample_negatives(table, graph.node_type(s.context),
                               cfg.negatives, neg_rng, negatives);
              const double loss =
                  pair_gradients(graph, params, s, negatives, tape, grads);
              if (!std::isfinite(loss))
                throw NumericError(
                    "training diverged: non-finite loss at epoch " +
                    std::to_string(epoch + 1));
              local_loss += loss;
              if (++in_batch == cfg.batch_size || i + 1 == end) {
                grads.apply_and_clear(params, lr);
                in_batch = 0;
              }
              progressed.fetch_add(1, std::memory_order_relaxed);
            }
            shard_loss[t] = local_loss;
          } catch (const std::exception& e) {
            shard_error[t] = e.what();
          }
        });
      }
      for (auto& w : workers) w.join();
      for (const auto& err : shard_error)
        if (!err.empty()) throw NumericError(err);
      epoch_loss = std::accumulate(shard_loss.begin(), shard_loss.end(), 0.0);
    }

    if (outcome) {
      outcome->epoch_mean_loss.push_back(epoch_loss /
                                         static_cast<double>(samples.size()));
      outcome->epoch_learning_rate.push_back(epoch_lr);
    }
  }
}

std::vector<std::size_t> graph_attr_dims(const HeterogeneousGraph& graph) {
  std::vector<std::size_t> dims(graph.num_node_types());
  for (NodeTypeId z = 0; z < graph.num_node_types(); ++z)
    dims[z] = graph.attr_dim(z);
  return dims;
}

}  // namespace

TransductiveParams train_transductive(const HeterogeneousGraph& graph,
                                      const std::vector<MetapathSchema>& schemas,
                                      const TrainConfig& cfg,
                                      TrainOutcome* outcome) {
  cfg.validate();
  if (!graph.frozen()) throw DataError("training requires a frozen graph");
  ModelDims dims{graph.num_nodes(), cfg.dim,    cfg.edge_dim,
                 cfg.attn_dim,      graph.num_edge_types(), cfg.levels};
  TransductiveParams params =
      TransductiveParams::init(dims, cfg.activation, cfg.alpha, cfg.seed);
  train_loop(graph, schemas, cfg, params, outcome);
  return params;
}

InductiveParams train_inductive(const HeterogeneousGraph& graph,
                                const std::vector<MetapathSchema>& schemas,
                                const TrainConfig& cfg, TrainOutcome* outcome) {
  cfg.validate();
  if (!graph.frozen()) throw DataError("training requires a frozen graph");
  ModelDims dims{graph.num_nodes(), cfg.dim,    cfg.edge_dim,
                 cfg.attn_dim,      graph.num_edge_types(), cfg.levels};
  InductiveParams params = InductiveParams::init(
      dims, graph_attr_dims(graph), cfg.activation, cfg.transform_kind,
      cfg.mlp_hidden, cfg.alpha, cfg.beta, cfg.seed);
  train_loop(graph, schemas, cfg, params, outcome);
  return params;
}

}  // namespace msm
