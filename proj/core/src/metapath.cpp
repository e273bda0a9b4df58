#include "msm/metapath.hpp"

#include <cctype>

#include "msm/rng.hpp"

namespace msm {

namespace {

struct Scanner {
  std::string_view text;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < text.size() &&
           std::isspace(static_cast<unsigned char>(text[pos])))
      ++pos;
  }

  bool done() {
    skip_ws();
    return pos >= text.size();
  }

  bool peek_is(char c) {
    skip_ws();
    return pos < text.size() && text[pos] == c;
  }

  void expect(char c, const char* what) {
    skip_ws();
    if (pos >= text.size() || text[pos] != c)
      throw DataError("schema syntax error at position " +
                      std::to_string(pos) + ": expected " + what);
    ++pos;
  }

  static bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
  }

  std::string_view identifier(const char* what) {
    skip_ws();
    std::size_t start = pos;
    while (pos < text.size() && ident_char(text[pos])) ++pos;
    if (pos == start)
      throw DataError("schema syntax error at position " +
                      std::to_string(start) + ": expected " + what);
    return text.substr(start, pos - start);
  }
};

NodeTypeId lookup_node_type(const HeterogeneousGraph& graph,
                            std::string_view token) {
  auto id = graph.node_type_registry().find(token);
  if (!id)
    throw DataError("schema references unknown node type '" +
                    std::string(token) + "'");
  return *id;
}

EdgeTypeId lookup_edge_type(const HeterogeneousGraph& graph,
                            std::string_view token) {
  auto id = graph.edge_type_registry().find(token);
  if (!id)
    throw DataError("schema references unknown edge type '" +
                    std::string(token) + "'");
  return *id;
}

}  // namespace

MetapathSchema parse_schema(std::string_view text,
                            const HeterogeneousGraph& graph) {
  Scanner scan{text};
  MetapathSchema schema;
  schema.node_types.push_back(
      lookup_node_type(graph, scan.identifier("node type")));
  while (scan.peek_is('-')) {
    scan.expect('-', "'-'");
    schema.edge_types.push_back(
        lookup_edge_type(graph, scan.identifier("edge type")));
    scan.expect('-', "'->'");
    scan.expect('>', "'->'");
    schema.node_types.push_back(
        lookup_node_type(graph, scan.identifier("node type")));
  }
  if (schema.edge_types.empty())
    throw DataError("schema syntax error at position " +
                    std::to_string(scan.pos) + ": expected at least one step");
  if (scan.peek_is('@')) {
    scan.expect('@', "'@'");
    schema.target_edge_type =
        lookup_edge_type(graph, scan.identifier("target edge type"));
  } else {
    schema.target_edge_type = schema.edge_types.front();
  }
  if (!scan.done())
    throw DataError("schema syntax error at position " +
                    std::to_string(scan.pos) + ": trailing input");
  schema.cyclic = schema.node_types.front() == schema.node_types.back();
  return schema;
}

std::string format_schema(const MetapathSchema& schema,
                          const HeterogeneousGraph& graph) {
  std::string out = graph.node_type_registry().name(schema.node_types[0]);
  for (std::size_t i = 0; i < schema.edge_types.size(); ++i) {
    out += " -" + graph.edge_type_registry().name(schema.edge_types[i]) +
           "-> " + graph.node_type_registry().name(schema.node_types[i + 1]);
  }
  out += " @ " + graph.edge_type_registry().name(schema.target_edge_type);
  return out;
}

WalkCorpus generate_walks(const HeterogeneousGraph& graph,
                          const MetapathSchema& schema,
                          std::size_t walks_per_node, std::size_t max_length,
                          std::uint64_t seed) {
  if (walks_per_node < 1) throw DataError("walks_per_node must be >= 1");
  if (max_length < 2) throw DataError("max_length must be >= 2");
  for (NodeTypeId t : schema.node_types)
    if (t >= graph.num_node_types())
      throw DataError("schema node type id out of range for this graph");
  for (EdgeTypeId r : schema.edge_types)
    if (r >= graph.num_edge_types())
      throw DataError("schema edge type id out of range for this graph");

  const std::size_t steps_per_cycle = schema.edge_types.size();
  WalkCorpus corpus;
  std::vector<NodeId> choices;
  for (NodeId start : graph.nodes_of_type(schema.node_types.front())) {
    Rng rng(derive_seed(seed, start));
    for (std::size_t w = 0; w < walks_per_node; ++w) {
      Walk walk;
      walk.target_edge_type = schema.target_edge_type;
      walk.nodes.push_back(start);
      NodeId current = start;
      std::size_t step = 0;
      while (walk.nodes.size() < max_length) {
        if (!schema.cyclic && step == steps_per_cycle) break;
        std::size_t pos = step % steps_per_cycle;
        choices = graph.typed_neighbors(current, schema.edge_types[pos],
                                        schema.node_types[pos + 1]);
        if (choices.empty()) break;  // dead end truncates
        current = choices[rng.index(choices.size())];
        walk.nodes.push_back(current);
        ++step;
      }
      if (walk.nodes.size() >= 2) corpus.walks.push_back(std::move(walk));
    }
  }
  return corpus;
}

std::vector<TrainingSample> context_pairs(const WalkCorpus& corpus,
                                          std::size_t window) {
  if (window < 1) throw DataError("context window must be >= 1");
  std::vector<TrainingSample> samples;
  for (const Walk& walk : corpus.walks) {
    const auto& nodes = walk.nodes;
    const std::ptrdiff_t len = static_cast<std::ptrdiff_t>(nodes.size());
    const std::ptrdiff_t p = static_cast<std::ptrdiff_t>(window);
    for (std::ptrdiff_t t = 0; t < len; ++t) {
      const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, t - p);
      const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(len - 1, t + p);
      for (std::ptrdiff_t c = lo; c <= hi; ++c) {
        if (c == t) continue;
        if (nodes[c] == nodes[t]) continue;  // a walk may revisit a node
        samples.push_back({nodes[t], nodes[c], walk.target_edge_type});
      }
    }
  }
  return samples;
}

}  // namespace msm
