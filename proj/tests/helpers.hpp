#pragma once
// Small builders shared across test files.

#include <string>
#include <vector>

#include "msm/graph.hpp"
#include "msm/model.hpp"
#include "msm/rng.hpp"

namespace testutil {

// Random multiplex graph: `num_types` node types with `per_type` nodes
// each; every edge type connects a random (src,dst) type pair with edge
// probability p. Optionally attaches uniform(-1,1) attributes.
inline msm::HeterogeneousGraph random_graph(std::size_t num_types,
                                            std::size_t per_type,
                                            std::size_t num_edge_types,
                                            double p, std::uint64_t seed,
                                            bool with_attrs = false,
                                            std::size_t attr_dim = 3) {
  msm::Rng rng(seed);
  msm::HeterogeneousGraph g;
  std::vector<std::vector<msm::NodeId>> by_type(num_types);
  for (std::size_t z = 0; z < num_types; ++z) {
    const std::string type = "t" + std::to_string(z);
    for (std::size_t i = 0; i < per_type; ++i)
      by_type[z].push_back(
          g.add_node(type + "_n" + std::to_string(i), type));
  }
  for (std::size_t r = 0; r < num_edge_types; ++r) {
    const msm::EdgeTypeId id =
        g.register_edge_type("e" + std::to_string(r));
    const std::size_t src = rng.index(num_types);
    const std::size_t dst = rng.index(num_types);
    const auto& a = by_type[src];
    const auto& b = by_type[dst];
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::size_t j0 = (src == dst) ? i + 1 : 0;
      for (std::size_t j = j0; j < b.size(); ++j) {
        if (a[i] == b[j]) continue;
        if (rng.uniform01() < p) g.add_edge(a[i], b[j], id);
      }
    }
  }
  if (with_attrs)
    for (msm::NodeId v = 0; v < g.num_nodes(); ++v) {
      std::vector<double> attrs(attr_dim);
      for (double& x : attrs) x = rng.uniform(-1.0, 1.0);
      g.set_attributes(v, std::move(attrs));
    }
  g.freeze();
  return g;
}

inline msm::ModelDims small_dims(const msm::HeterogeneousGraph& g,
                                 std::size_t d = 6, std::size_t s = 4,
                                 std::size_t d_a = 3, std::size_t k = 2) {
  msm::ModelDims dims;
  dims.num_nodes = g.num_nodes();
  dims.dim = d;
  dims.edge_dim = s;
  dims.attn_dim = d_a;
  dims.num_edge_types = g.num_edge_types();
  dims.levels = k;
  return dims;
}

inline void randomize_context(msm::TransductiveParams& p, std::uint64_t seed) {
  msm::Rng rng(seed);
  for (Eigen::Index i = 0; i < p.context.size(); ++i)
    p.context.data()[i] = rng.uniform(-0.5, 0.5);
}

inline void randomize_context(msm::InductiveParams& p, std::uint64_t seed) {
  msm::Rng rng(seed);
  for (Eigen::Index i = 0; i < p.context.size(); ++i)
    p.context.data()[i] = rng.uniform(-0.5, 0.5);
}

}  // namespace testutil
