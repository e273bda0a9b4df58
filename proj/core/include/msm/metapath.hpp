#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "msm/graph.hpp"
#include "msm/types.hpp"

namespace msm {

// Alternating node-type/edge-type sequence. Each schema carries exactly one
// target edge type: the samples generated from its walks train that type's
// embedding space.
struct MetapathSchema {
  std::vector<NodeTypeId> node_types;  // length l >= 2
  std::vector<EdgeTypeId> edge_types;  // length l - 1
  EdgeTypeId target_edge_type = 0;
  bool cyclic = false;  // first node type equals last
};

struct Walk {
  std::vector<NodeId> nodes;
  EdgeTypeId target_edge_type = 0;
};

struct WalkCorpus {
  std::vector<Walk> walks;

  std::size_t size() const { return walks.size(); }
};

// Skip-gram pair: the context is predicted from the center under the
// walk's target edge type.
struct TrainingSample {
  NodeId center;
  NodeId context;
  EdgeTypeId edge_type;

  bool operator==(const TrainingSample&) const = default;
};

// Parses `NodeType (-EdgeType-> NodeType)+ [@ TargetEdgeType]`, for example
// `U -click-> I -related-> I @ click`. Whitespace-insensitive. If the `@`
// clause is absent the target defaults to the first edge type. Types must
// already exist in the graph's registries.
MetapathSchema parse_schema(std::string_view text,
                            const HeterogeneousGraph& graph);

// Renders a schema back into its DSL form.
std::string format_schema(const MetapathSchema& schema,
                          const HeterogeneousGraph& graph);

// Generates walks_per_node walks from every node of the schema's first node
// type. At each step the next node is drawn uniformly from the neighbors
// that match both the prescribed edge type and the next node type; a walk
// truncates when that set is empty. Cyclic schemas restart at the first
// position after reaching the last, until max_length nodes are emitted.
// Walks shorter than 2 nodes are dropped.
//
// Deterministic given seed: every start node owns an independent stream
// derived from (seed, node id), so results do not depend on traversal or
// worker order.
WalkCorpus generate_walks(const HeterogeneousGraph& graph,
                          const MetapathSchema& schema,
                          std::size_t walks_per_node, std::size_t max_length,
                          std::uint64_t seed);

// Emits (center, context, target_edge_type) for every in-window position
// pair of every walk. Pairs whose two nodes coincide are skipped.
std::vector<TrainingSample> context_pairs(const WalkCorpus& corpus,
                                          std::size_t window);

}  // namespace msm
