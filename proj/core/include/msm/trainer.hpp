#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "msm/graph.hpp"
#include "msm/metapath.hpp"
#include "msm/model.hpp"
#include "msm/tape.hpp"

namespace msm {

enum class ModelKind { kTransductive, kInductive };

// Every field maps one-to-one onto a config-file key and a CLI flag.
struct TrainConfig {
  std::size_t window = 10;
  std::size_t negatives = 5;
  double learning_rate = 0.01;
  double min_learning_rate = 1e-4;
  std::size_t epochs = 3;
  std::size_t batch_size = 1;
  std::size_t walks_per_node = 10;
  std::size_t max_walk_length = 11;
  std::size_t dim = 200;
  std::size_t edge_dim = 10;
  std::size_t attn_dim = 20;
  std::size_t levels = 2;
  double alpha = 1.0;
  double beta = 0.1;
  Activation activation = Activation::kTanh;
  std::uint64_t seed = 1;
  ModelKind model = ModelKind::kTransductive;
  double neg_exponent = 0.75;
  std::size_t neighbor_cap = 0;  // 0 = full neighborhoods
  TransformKind transform_kind = TransformKind::kAffine;
  std::size_t mlp_hidden = 32;
  std::size_t threads = 1;
  bool deterministic = true;

  // Throws DataError on an invalid combination.
  void validate() const;
};

// Weighted sampler over nodes of one type: degree^exponent, alias method.
// A type whose weights are all zero falls back to uniform.
class NegativeTable {
 public:
  NegativeTable(const HeterogeneousGraph& graph, double exponent);

  NodeId sample(NodeTypeId type, Rng& rng) const;
  // Sampling probability of `node` within its type (for tests).
  double probability(NodeId node) const;

 private:
  struct TypeTable {
    std::vector<NodeId> nodes;
    std::vector<double> accept;
    std::vector<std::uint32_t> alias;
  };
  std::vector<TypeTable> tables_;
  std::vector<double> prob_of_node_;
};

// Skip-gram negative-sampling loss of one (center, context, edge type)
// sample: -log s(c_u . v) - sum_l log s(-c_nl . v), s = logistic.
double pair_loss(const HeterogeneousGraph& graph,
                 const TransductiveParams& params, const TrainingSample& sample,
                 const std::vector<NodeId>& negatives);
double pair_loss(const HeterogeneousGraph& graph, const InductiveParams& params,
                 const TrainingSample& sample,
                 const std::vector<NodeId>& negatives);

// Same loss; also accumulates exact gradients of every touched parameter
// into `grads` via the tape. Returns the loss.
double pair_gradients(const HeterogeneousGraph& graph,
                      const TransductiveParams& params,
                      const TrainingSample& sample,
                      const std::vector<NodeId>& negatives, ForwardTape& tape,
                      GradientSet& grads);
double pair_gradients(const HeterogeneousGraph& graph,
                      const InductiveParams& params,
                      const TrainingSample& sample,
                      const std::vector<NodeId>& negatives, ForwardTape& tape,
                      GradientSet& grads);

void sample_negatives(const NegativeTable& table, NodeTypeId type,
                      std::size_t count, Rng& rng, std::vector<NodeId>& out);

// Walks for all schemas, seeds decorrelated per schema.
WalkCorpus generate_corpus(const HeterogeneousGraph& graph,
                           const std::vector<MetapathSchema>& schemas,
                           std::size_t walks_per_node,
                           std::size_t max_walk_length, std::uint64_t seed);

struct TrainOutcome {
  std::vector<double> epoch_mean_loss;
  std::vector<double> epoch_learning_rate;  // at the start of each epoch
  std::size_t samples_per_epoch = 0;
};

// Full training loop: corpus -> context pairs -> shuffled SGD epochs with
// linearly decaying learning rate. Deterministic when cfg.deterministic or
// cfg.threads == 1; otherwise lock-free parallel over sample shards.
TransductiveParams train_transductive(const HeterogeneousGraph& graph,
                                      const std::vector<MetapathSchema>& schemas,
                                      const TrainConfig& cfg,
                                      TrainOutcome* outcome = nullptr);
InductiveParams train_inductive(const HeterogeneousGraph& graph,
                                const std::vector<MetapathSchema>& schemas,
                                const TrainConfig& cfg,
                                TrainOutcome* outcome = nullptr);

}  // namespace msm
