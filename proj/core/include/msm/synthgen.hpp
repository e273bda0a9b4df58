#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "msm/graph.hpp"

namespace msm {

// Planted-community generator: communities are global, nodes join them
// round-robin within their type, edges are independent Bernoulli draws with
// intra-/inter-community probabilities, attributes are a per-(type,
// community) unit-sphere centroid plus isotropic gaussian noise.
struct SynthSpec {
  struct NodeTypeSpec {
    std::string name;
    std::size_t count = 0;
    std::size_t attr_dim = 8;
  };
  struct EdgeTypeSpec {
    std::string name;
    std::string src_type;
    std::string dst_type;
    double intra_p = 0.0;
    double inter_p = 0.0;
  };

  std::vector<NodeTypeSpec> node_types;
  std::vector<EdgeTypeSpec> edge_types;
  std::size_t communities = 2;
  double noise_scale = 0.2;
  std::uint64_t seed = 1;

  void validate() const;  // throws DataError
};

struct SynthResult {
  HeterogeneousGraph graph;
  std::vector<std::size_t> community;  // per node id
};

SynthResult generate(const SynthSpec& spec);

// 2 node types (user:200 / item:400), 2 communities, 2 edge types
// (user-user, user-item), intra 0.05 / inter 0.005.
SynthSpec default_spec();
// Same structure with equal type counts, 600 nodes total.
SynthSpec balanced_preset();
// Same structure with a 10x item/user count skew.
SynthSpec unbalanced_preset();

}  // namespace msm
