#include "msm/synthgen.hpp"

#include <cmath>
#include <unordered_map>

#include "msm/rng.hpp"

namespace msm {

void SynthSpec::validate() const {
  if (node_types.empty()) throw DataError("synth: no node types");
  if (edge_types.empty()) throw DataError("synth: no edge types");
  if (communities < 1) throw DataError("synth: communities must be >= 1");
  if (noise_scale < 0.0) throw DataError("synth: noise_scale must be >= 0");
  for (const auto& nt : node_types) {
    if (nt.count < 1)
      throw DataError("synth: node type '" + nt.name + "' has count 0");
    if (nt.attr_dim < 1)
      throw DataError("synth: node type '" + nt.name + "' has attr_dim 0");
  }
  for (const auto& et : edge_types) {
    auto known = [&](const std::string& t) {
      for (const auto& nt : node_types)
        if (nt.name == t) return true;
      return false;
    };
    if (!known(et.src_type) || !known(et.dst_type))
      throw DataError("synth: edge type '" + et.name +
                      "' references an unknown node type");
    if (et.intra_p < 0.0 || et.intra_p > 1.0 || et.inter_p < 0.0 ||
        et.inter_p > 1.0)
      throw DataError("synth: edge type '" + et.name +
                      "' probabilities must lie in [0,1]");
  }
}

SynthResult generate(const SynthSpec& spec) {
  spec.validate();
  SynthResult result;
  HeterogeneousGraph& graph = result.graph;

  std::unordered_map<std::string, std::size_t> type_index;
  for (std::size_t t = 0; t < spec.node_types.size(); ++t)
    type_index[spec.node_types[t].name] = t;

  // Nodes, round-robin community assignment within each type.
  std::vector<std::vector<NodeId>> ids_of_type(spec.node_types.size());
  for (std::size_t t = 0; t < spec.node_types.size(); ++t) {
    const auto& nt = spec.node_types[t];
    for (std::size_t i = 0; i < nt.count; ++i) {
      NodeId id = graph.add_node(nt.name + "_" + std::to_string(i), nt.name);
      ids_of_type[t].push_back(id);
      result.community.push_back(i % spec.communities);
    }
  }

  Rng rng(derive_seed(spec.seed, 0x575));

  // Attributes: unit-sphere centroid per (type, community) + noise.
  for (std::size_t t = 0; t < spec.node_types.size(); ++t) {
    const auto& nt = spec.node_types[t];
    std::vector<std::vector<double>> centroids(spec.communities);
    for (auto& c : centroids) {
      c.resize(nt.attr_dim);
      double norm2 = 0.0;
      for (auto& x : c) {
        x = rng.gaussian();
        norm2 += x * x;
      }
      const double norm = std::sqrt(norm2);
      if (norm > 0.0)
        for (auto& x : c) x /= norm;
    }
    for (NodeId id : ids_of_type[t]) {
      const auto& c = centroids[result.community[id]];
      std::vector<double> x(nt.attr_dim);
      for (std::size_t j = 0; j < nt.attr_dim; ++j)
        x[j] = c[j] + spec.noise_scale * rng.gaussian();
      graph.set_attributes(id, x);
    }
  }

  // Edges: Bernoulli per compatible pair, probability by community
  // co-membership. Same-type pairs are visited once (i < j).
  for (const auto& et : spec.edge_types) {
    EdgeTypeId r = graph.register_edge_type(et.name);
    const auto& src = ids_of_type[type_index[et.src_type]];
    const auto& dst = ids_of_type[type_index[et.dst_type]];
    const bool same = et.src_type == et.dst_type;
    for (std::size_t i = 0; i < src.size(); ++i) {
      for (std::size_t j = same ? i + 1 : 0; j < dst.size(); ++j) {
        const NodeId a = src[i];
        const NodeId b = dst[j];
        const double p = (result.community[a] == result.community[b])
                             ? et.intra_p
                             : et.inter_p;
        if (p > 0.0 && rng.uniform01() < p) graph.add_edge(a, b, r);
      }
    }
  }

  graph.freeze();
  return result;
}

namespace {

SynthSpec two_type_spec(std::size_t users, std::size_t items) {
  SynthSpec spec;
  spec.node_types = {{"user", users, 8}, {"item", items, 8}};
  spec.edge_types = {{"uu", "user", "user", 0.05, 0.005},
                     {"ui", "user", "item", 0.05, 0.005}};
  spec.communities = 2;
  spec.noise_scale = 0.2;
  spec.seed = 1;
  return spec;
}

}  // namespace

SynthSpec default_spec() { return two_type_spec(200, 400); }

SynthSpec balanced_preset() { return two_type_spec(300, 300); }

SynthSpec unbalanced_preset() { return two_type_spec(100, 1000); }

}  // namespace msm
