#include "msm/graph.hpp"

#include <algorithm>

namespace msm {

std::uint32_t TypeRegistry::get_or_add(std::string_view name) {
  auto it = ids_.find(std::string(name));
  if (it != ids_.end()) return it->second;
  std::uint32_t id = static_cast<std::uint32_t>(names_.size());
  names_.emplace_back(name);
  ids_.emplace(names_.back(), id);
  return id;
}

std::optional<std::uint32_t> TypeRegistry::find(std::string_view name) const {
  auto it = ids_.find(std::string(name));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

const std::string& TypeRegistry::name(std::uint32_t id) const {
  if (id >= names_.size()) throw DataError("type id out of range");
  return names_[id];
}

void HeterogeneousGraph::check_node(NodeId v, const char* op) const {
  if (v >= node_types_of_.size())
    throw DataError(std::string(op) + ": unknown node id " +
                    std::to_string(v));
}

void HeterogeneousGraph::check_mutable(const char* op) const {
  if (frozen_)
    throw DataError(std::string(op) + ": graph is frozen");
}

void HeterogeneousGraph::check_frozen(const char* op) const {
  if (!frozen_)
    throw DataError(std::string(op) + ": graph must be frozen first");
}

NodeId HeterogeneousGraph::add_node(std::string_view name,
                                    std::string_view node_type) {
  check_mutable("add_node");
  NodeTypeId t = node_registry_.get_or_add(node_type);
  auto it = node_ids_.find(std::string(name));
  if (it != node_ids_.end()) {
    NodeId existing = it->second;
    if (node_types_of_[existing] != t)
      throw DataError("add_node: node '" + std::string(name) +
                      "' already registered with type '" +
                      node_registry_.name(node_types_of_[existing]) + "'");
    return existing;
  }
  NodeId id = static_cast<NodeId>(node_types_of_.size());
  node_types_of_.push_back(t);
  node_names_.emplace_back(name);
  node_ids_.emplace(node_names_.back(), id);
  if (nodes_by_type_.size() <= t) nodes_by_type_.resize(t + 1);
  nodes_by_type_[t].push_back(id);
  attributes_.emplace_back();
  return id;
}

EdgeTypeId HeterogeneousGraph::register_edge_type(std::string_view name) {
  check_mutable("register_edge_type");
  EdgeTypeId r = edge_registry_.get_or_add(name);
  if (adjacency_.size() <= r) {
    adjacency_.resize(r + 1);
    adjacency_[r].resize(node_types_of_.size());
  }
  return r;
}

void HeterogeneousGraph::add_edge(NodeId u, NodeId v,
                                  std::string_view edge_type) {
  add_edge(u, v, register_edge_type(edge_type));
}

void HeterogeneousGraph::add_edge(NodeId u, NodeId v, EdgeTypeId r) {
  check_mutable("add_edge");
  check_node(u, "add_edge");
  check_node(v, "add_edge");
  if (u == v)
    throw DataError("add_edge: self-loop on node '" + node_names_[u] + "'");
  if (r >= adjacency_.size())
    throw DataError("add_edge: unknown edge type id " + std::to_string(r));
  auto& adj = adjacency_[r];
  if (adj.size() < node_types_of_.size()) adj.resize(node_types_of_.size());
  adj[u].push_back(v);
  adj[v].push_back(u);
}

void HeterogeneousGraph::set_attributes(NodeId v, std::vector<double> values) {
  check_mutable("set_attributes");
  check_node(v, "set_attributes");
  NodeTypeId t = node_types_of_[v];
  if (attr_dims_.size() <= t) attr_dims_.resize(t + 1, 0);
  if (attr_dims_[t] == 0) {
    if (values.empty())
      throw DataError("set_attributes: empty attribute vector for node '" +
                      node_names_[v] + "'");
    attr_dims_[t] = values.size();
  } else if (attr_dims_[t] != values.size()) {
    throw DataError("set_attributes: node '" + node_names_[v] + "' has " +
                    std::to_string(values.size()) +
                    " attributes but node type '" + node_registry_.name(t) +
                    "' uses " + std::to_string(attr_dims_[t]));
  }
  attributes_[v] = std::move(values);
}

void HeterogeneousGraph::freeze() {
  if (frozen_) return;
  edge_counts_.assign(edge_registry_.size(), 0);
  for (std::size_t r = 0; r < adjacency_.size(); ++r) {
    auto& adj = adjacency_[r];
    adj.resize(node_types_of_.size());
    std::size_t half_edges = 0;
    for (auto& list : adj) {
      std::sort(list.begin(), list.end());
      list.erase(std::unique(list.begin(), list.end()), list.end());
      list.shrink_to_fit();
      half_edges += list.size();
    }
    edge_counts_[r] = half_edges / 2;
  }
  if (nodes_by_type_.size() < node_registry_.size())
    nodes_by_type_.resize(node_registry_.size());
  if (attr_dims_.size() < node_registry_.size())
    attr_dims_.resize(node_registry_.size(), 0);
  frozen_ = true;
}

NodeTypeId HeterogeneousGraph::node_type(NodeId v) const {
  check_node(v, "node_type");
  return node_types_of_[v];
}

const std::string& HeterogeneousGraph::node_name(NodeId v) const {
  check_node(v, "node_name");
  return node_names_[v];
}

std::optional<NodeId> HeterogeneousGraph::find_node(
    std::string_view name) const {
  auto it = node_ids_.find(std::string(name));
  if (it == node_ids_.end()) return std::nullopt;
  return it->second;
}

const std::vector<NodeId>& HeterogeneousGraph::nodes_of_type(
    NodeTypeId t) const {
  static const std::vector<NodeId> empty;
  if (t >= nodes_by_type_.size()) return empty;
  return nodes_by_type_[t];
}

const std::vector<NodeId>& HeterogeneousGraph::neighbors(NodeId v,
                                                         EdgeTypeId r) const {
  static const std::vector<NodeId> empty;
  check_frozen("neighbors");
  check_node(v, "neighbors");
  if (r >= adjacency_.size()) return empty;
  return adjacency_[r][v];
}

std::vector<NodeId> HeterogeneousGraph::typed_neighbors(NodeId v, EdgeTypeId r,
                                                        NodeTypeId t) const {
  std::vector<NodeId> out;
  for (NodeId n : neighbors(v, r))
    if (node_types_of_[n] == t) out.push_back(n);
  return out;
}

bool HeterogeneousGraph::has_edge(NodeId u, NodeId v, EdgeTypeId r) const {
  const auto& list = neighbors(u, r);
  return std::binary_search(list.begin(), list.end(), v);
}

std::size_t HeterogeneousGraph::degree(NodeId v, EdgeTypeId r) const {
  return neighbors(v, r).size();
}

std::size_t HeterogeneousGraph::total_degree(NodeId v) const {
  std::size_t sum = 0;
  for (EdgeTypeId r = 0; r < edge_registry_.size(); ++r)
    sum += neighbors(v, r).size();
  return sum;
}

std::size_t HeterogeneousGraph::edge_count(EdgeTypeId r) const {
  check_frozen("edge_count");
  if (r >= edge_counts_.size()) return 0;
  return edge_counts_[r];
}

std::vector<std::pair<NodeId, NodeId>> HeterogeneousGraph::edges(
    EdgeTypeId r) const {
  check_frozen("edges");
  std::vector<std::pair<NodeId, NodeId>> out;
  if (r >= adjacency_.size()) return out;
  out.reserve(edge_counts_[r]);
  for (NodeId u = 0; u < adjacency_[r].size(); ++u)
    for (NodeId v : adjacency_[r][u])
      if (u < v) out.emplace_back(u, v);
  return out;
}

bool HeterogeneousGraph::has_attributes(NodeId v) const {
  check_node(v, "has_attributes");
  return !attributes_[v].empty();
}

const std::vector<double>& HeterogeneousGraph::attributes(NodeId v) const {
  check_node(v, "attributes");
  if (attributes_[v].empty())
    throw DataError("node '" + node_names_[v] + "' has no attributes");
  return attributes_[v];
}

std::size_t HeterogeneousGraph::attr_dim(NodeTypeId t) const {
  if (t >= attr_dims_.size()) return 0;
  return attr_dims_[t];
}

GraphStats HeterogeneousGraph::stats() const {
  GraphStats s;
  s.total_nodes = node_types_of_.size();
  for (std::uint32_t t = 0; t < node_registry_.size(); ++t)
    s.nodes_per_type.emplace_back(node_registry_.name(t),
                                  nodes_of_type(t).size());
  for (std::uint32_t r = 0; r < edge_registry_.size(); ++r) {
    std::size_t count;
    if (frozen_) {
      count = edge_counts_[r];
    } else {
      // Unfrozen adjacency may hold duplicates; count distinct pairs.
      std::vector<std::pair<NodeId, NodeId>> pairs;
      if (r < adjacency_.size())
        for (NodeId u = 0; u < adjacency_[r].size(); ++u)
          for (NodeId v : adjacency_[r][u])
            if (u < v) pairs.emplace_back(u, v);
      std::sort(pairs.begin(), pairs.end());
      count = std::unique(pairs.begin(), pairs.end()) - pairs.begin();
    }
    s.edges_per_type.emplace_back(edge_registry_.name(r), count);
    s.total_edges += count;
  }
  return s;
}

}  // namespace msm
