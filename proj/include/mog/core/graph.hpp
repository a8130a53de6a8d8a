#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace mog::core {

using NodeId = std::size_t;
using EdgeId = std::size_t;
using SubgraphId = std::size_t;

class GraphError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Node {
  NodeId id;
  std::string token;
};

/// An n-order edge: (source node, target node, source subgraph, target
/// subgraph, related subgraph, order).
struct OrderedEdge {
  NodeId source;
  NodeId target;
  SubgraphId source_subgraph;
  SubgraphId target_subgraph;
  SubgraphId related_subgraph;
  std::size_t order;
  std::size_t generated = 1;
};

struct Subgraph {
  SubgraphId id;
  std::vector<NodeId> nodes;  // sorted
  std::vector<EdgeId> edges;  // sorted
  std::size_t order;
  std::size_t generated = 1;

  bool contains(NodeId n) const;
};

enum class ExtendMode {
  disjoint,       // node sets must not intersect
  allow_overlap,  // loops and shared nodes; order is the size of the node union
};

struct Extension {
  EdgeId edge;
  SubgraphId subgraph;
  bool repeated;  // the same edge had been generated before
};

/// Multigraph over the words of one sentence. Every node starts with its own
/// order-1 subgraph; extend() joins two subgraphs through a new edge.
/// Subgraphs are interned by (node set, edge set), edges by
/// (source, target, source subgraph, target subgraph), so regenerating the
/// same structure bumps a counter instead of adding a duplicate.
class MoGraph {
 public:
  MoGraph() = default;
  explicit MoGraph(const std::vector<std::string>& tokens);

  NodeId add_node(std::string token);
  SubgraphId singleton(NodeId node) const;

  Extension extend(SubgraphId left, NodeId source, SubgraphId right, NodeId target,
                   ExtendMode mode = ExtendMode::disjoint);

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<OrderedEdge>& edges() const { return edges_; }
  const std::vector<Subgraph>& subgraphs() const { return subgraphs_; }
  const Subgraph& subgraph(SubgraphId id) const;
  const OrderedEdge& edge(EdgeId id) const;

  /// Edge ids in the order extend() produced them, repeats included.
  const std::vector<EdgeId>& generation_sequence() const { return sequence_; }

  std::size_t max_subgraph_order() const;

  nlohmann::json to_json() const;

 private:
  SubgraphId intern_subgraph(std::vector<NodeId> nodes, std::vector<EdgeId> edges);

  std::vector<Node> nodes_;
  std::vector<OrderedEdge> edges_;
  std::vector<Subgraph> subgraphs_;
  std::vector<SubgraphId> singletons_;
  std::vector<EdgeId> sequence_;
  std::map<std::pair<std::vector<NodeId>, std::vector<EdgeId>>, SubgraphId> subgraph_index_;
  std::map<std::tuple<NodeId, NodeId, SubgraphId, SubgraphId>, EdgeId> edge_index_;
};

}  // namespace mog::core
