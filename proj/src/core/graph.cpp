#include "mog/core/graph.hpp"

#include <algorithm>
#include <iterator>

namespace mog::core {

bool Subgraph::contains(NodeId n) const { return std::binary_search(nodes.begin(), nodes.end(), n); }

MoGraph::MoGraph(const std::vector<std::string>& tokens) {
  for (const auto& t : tokens) add_node(t);
}

NodeId MoGraph::add_node(std::string token) {
  const NodeId id = nodes_.size();
  nodes_.push_back(Node{id, std::move(token)});
  singletons_.push_back(intern_subgraph({id}, {}));
  return id;
}

SubgraphId MoGraph::singleton(NodeId node) const {
  if (node >= singletons_.size()) throw GraphError("unknown node " + std::to_string(node));
  return singletons_[node];
}

const Subgraph& MoGraph::subgraph(SubgraphId id) const {
  if (id >= subgraphs_.size()) throw GraphError("unknown subgraph id " + std::to_string(id));
  return subgraphs_[id];
}

const OrderedEdge& MoGraph::edge(EdgeId id) const {
  if (id >= edges_.size()) throw GraphError("unknown edge id " + std::to_string(id));
  return edges_[id];
}

SubgraphId MoGraph::intern_subgraph(std::vector<NodeId> nodes, std::vector<EdgeId> edges) {
  auto key = std::make_pair(nodes, edges);
  if (auto it = subgraph_index_.find(key); it != subgraph_index_.end()) {
    ++subgraphs_[it->second].generated;
    return it->second;
  }
  const SubgraphId id = subgraphs_.size();
  const std::size_t order = nodes.size();
  subgraphs_.push_back(Subgraph{id, std::move(nodes), std::move(edges), order, 1});
  subgraph_index_.emplace(std::move(key), id);
  return id;
}

Extension MoGraph::extend(SubgraphId left, NodeId source, SubgraphId right, NodeId target, ExtendMode mode) {
  const Subgraph& l = subgraph(left);
  const Subgraph& r = subgraph(right);
  if (!l.contains(source)) {
    throw GraphError("attach node " + std::to_string(source) + " is not in subgraph " + std::to_string(left));
  }
  if (!r.contains(target)) {
    throw GraphError("attach node " + std::to_string(target) + " is not in subgraph " + std::to_string(right));
  }
  std::vector<NodeId> joined;
  std::set_union(l.nodes.begin(), l.nodes.end(), r.nodes.begin(), r.nodes.end(), std::back_inserter(joined));
  if (mode == ExtendMode::disjoint && joined.size() != l.nodes.size() + r.nodes.size()) {
    throw GraphError("subgraphs " + std::to_string(left) + " and " + std::to_string(right) +
                     " share nodes; use ExtendMode::allow_overlap");
  }

  const auto edge_key = std::make_tuple(source, target, left, right);
  if (auto it = edge_index_.find(edge_key); it != edge_index_.end()) {
    OrderedEdge& e = edges_[it->second];
    ++e.generated;
    ++subgraphs_[e.related_subgraph].generated;
    sequence_.push_back(it->second);
    return Extension{it->second, e.related_subgraph, true};
  }

  const EdgeId edge_id = edges_.size();
  std::vector<EdgeId> joined_edges;
  std::set_union(l.edges.begin(), l.edges.end(), r.edges.begin(), r.edges.end(), std::back_inserter(joined_edges));
  joined_edges.push_back(edge_id);  // largest id so far, keeps the list sorted
  const std::size_t order = joined.size();
  edges_.push_back(OrderedEdge{source, target, left, right, 0, order, 1});
  const SubgraphId related = intern_subgraph(std::move(joined), std::move(joined_edges));
  edges_[edge_id].related_subgraph = related;
  edge_index_.emplace(edge_key, edge_id);
  sequence_.push_back(edge_id);
  return Extension{edge_id, related, false};
}

std::size_t MoGraph::max_subgraph_order() const {
  std::size_t best = 0;
  for (const auto& s : subgraphs_) best = std::max(best, s.order);
  return best;
}

nlohmann::json MoGraph::to_json() const {
  nlohmann::json out;
  out["nodes"] = nlohmann::json::array();
  for (const auto& n : nodes_) out["nodes"].push_back({{"id", n.id}, {"token", n.token}});
  out["edges"] = nlohmann::json::array();
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const auto& e = edges_[i];
    out["edges"].push_back({{"id", i},
                            {"tuple", {e.source, e.target, e.source_subgraph, e.target_subgraph, e.related_subgraph, e.order}},
                            {"generated", e.generated}});
  }
  out["subgraphs"] = nlohmann::json::array();
  for (const auto& s : subgraphs_) {
    out["subgraphs"].push_back(
        {{"id", s.id}, {"nodes", s.nodes}, {"edges", s.edges}, {"order", s.order}, {"generated", s.generated}});
  }
  out["generation_sequence"] = sequence_;
  out["max_subgraph_order"] = max_subgraph_order();
  return out;
}

}  // namespace mog::core
