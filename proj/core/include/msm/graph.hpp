#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "msm/types.hpp"

namespace msm {

// Bijection between type names and dense ids assigned in registration order.
class TypeRegistry {
 public:
  std::uint32_t get_or_add(std::string_view name);
  std::optional<std::uint32_t> find(std::string_view name) const;
  const std::string& name(std::uint32_t id) const;
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> ids_;
};

struct GraphStats {
  std::vector<std::pair<std::string, std::size_t>> nodes_per_type;
  std::vector<std::pair<std::string, std::size_t>> edges_per_type;
  std::size_t total_nodes = 0;
  std::size_t total_edges = 0;

  bool operator==(const GraphStats&) const = default;
};

// Attributed multiplex heterogeneous graph. Nodes are typed, adjacency is
// kept per edge type, and nodes may carry one dense attribute vector each.
//
// Construction is single-writer; freeze() sorts and deduplicates adjacency
// and makes the graph immutable. All read accessors require a frozen graph
// and are safe to call from many threads.
class HeterogeneousGraph {
 public:
  NodeId add_node(std::string_view name, std::string_view node_type);
  void add_edge(NodeId u, NodeId v, std::string_view edge_type);
  void add_edge(NodeId u, NodeId v, EdgeTypeId r);
  void set_attributes(NodeId v, std::vector<double> values);
  EdgeTypeId register_edge_type(std::string_view name);

  void freeze();
  bool frozen() const { return frozen_; }

  std::size_t num_nodes() const { return node_types_of_.size(); }
  std::size_t num_node_types() const { return node_registry_.size(); }
  std::size_t num_edge_types() const { return edge_registry_.size(); }

  NodeTypeId node_type(NodeId v) const;
  const std::string& node_name(NodeId v) const;
  std::optional<NodeId> find_node(std::string_view name) const;
  const std::vector<NodeId>& nodes_of_type(NodeTypeId t) const;

  // Sorted, duplicate-free list; empty when v has no r-neighbors.
  const std::vector<NodeId>& neighbors(NodeId v, EdgeTypeId r) const;
  // Subset of neighbors(v, r) whose node type is t.
  std::vector<NodeId> typed_neighbors(NodeId v, EdgeTypeId r,
                                      NodeTypeId t) const;
  bool has_edge(NodeId u, NodeId v, EdgeTypeId r) const;
  std::size_t degree(NodeId v, EdgeTypeId r) const;
  std::size_t total_degree(NodeId v) const;
  std::size_t edge_count(EdgeTypeId r) const;
  // All distinct edges of type r as (u, v) with u < v.
  std::vector<std::pair<NodeId, NodeId>> edges(EdgeTypeId r) const;

  bool has_attributes(NodeId v) const;
  const std::vector<double>& attributes(NodeId v) const;
  // Attribute dimension for a node type; 0 when no node of the type has
  // attributes.
  std::size_t attr_dim(NodeTypeId t) const;

  GraphStats stats() const;

  const TypeRegistry& node_type_registry() const { return node_registry_; }
  const TypeRegistry& edge_type_registry() const { return edge_registry_; }

 private:
  void check_node(NodeId v, const char* op) const;
  void check_mutable(const char* op) const;
  void check_frozen(const char* op) const;

  TypeRegistry node_registry_;
  TypeRegistry edge_registry_;
  std::vector<NodeTypeId> node_types_of_;
  std::vector<std::string> node_names_;
  std::unordered_map<std::string, NodeId> node_ids_;
  std::vector<std::vector<NodeId>> nodes_by_type_;
  // adjacency_[r][v] -> neighbor list (sorted and unique after freeze).
  std::vector<std::vector<std::vector<NodeId>>> adjacency_;
  std::vector<std::size_t> edge_counts_;
  std::vector<std::vector<double>> attributes_;
  std::vector<std::size_t> attr_dims_;
  bool frozen_ = false;
};

}  // namespace msm
