#include "offloadnet/graph.hpp"

#include <algorithm>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>

namespace offloadnet {

const char* to_string(NodeRole role) {
  switch (role) {
    case NodeRole::edge: return "edge";
    case NodeRole::relay: return "relay";
    case NodeRole::server: return "server";
  }
  return "?";
}

NodeRole parse_node_role(std::string_view text) {
  if (text == "edge") return NodeRole::edge;
  if (text == "relay") return NodeRole::relay;
  if (text == "server") return NodeRole::server;
  throw std::invalid_argument("unknown node role: " + std::string(text));
}

UndirectedGraph::UndirectedGraph(int node_count, std::vector<Link> links)
    : node_count_(node_count), links_(std::move(links)),
      neighbors_(node_count), incident_(node_count) {
  if (node_count < 0) throw std::invalid_argument("negative node count");
  std::set<Link> seen;
  for (LinkId e = 0; e < link_count(); ++e) {
    const Link& l = links_[e];
    if (l.a < 0 || l.b >= node_count) throw std::invalid_argument("link endpoint out of range");
    if (l.a == l.b) throw std::invalid_argument("self-loop");
    if (!seen.insert(l).second) throw std::invalid_argument("duplicate link");
    neighbors_[l.a].push_back(l.b);
    neighbors_[l.b].push_back(l.a);
    incident_[l.a].push_back(e);
    incident_[l.b].push_back(e);
  }
  for (auto& n : neighbors_) std::sort(n.begin(), n.end());
}

UndirectedGraph UndirectedGraph::canonical(int node_count, std::vector<Link> links) {
  std::sort(links.begin(), links.end());
  return UndirectedGraph(node_count, std::move(links));
}

LinkId UndirectedGraph::find_link(NodeId u, NodeId v) const {
  for (LinkId e : incident_[u]) {
    if (links_[e].has(v)) return e;
  }
  return -1;
}

bool UndirectedGraph::disconnected_without(const std::vector<bool>& removed) const {
  NodeId start = -1;
  int remaining = 0;
  for (NodeId v = 0; v < node_count_; ++v) {
    if (!removed[v]) {
      ++remaining;
      if (start < 0) start = v;
    }
  }
  if (remaining <= 1) return false;
  std::vector<bool> seen(node_count_, false);
  std::vector<NodeId> stack{start};
  seen[start] = true;
  int reached = 1;
  while (!stack.empty()) {
    NodeId u = stack.back();
    stack.pop_back();
    for (NodeId w : neighbors_[u]) {
      if (!removed[w] && !seen[w]) {
        seen[w] = true;
        ++reached;
        stack.push_back(w);
      }
    }
  }
  return reached < remaining;
}

bool UndirectedGraph::is_connected() const {
  if (node_count_ <= 1) return true;
  return !disconnected_without(std::vector<bool>(node_count_, false));
}

namespace {

std::vector<Link> sorted(std::vector<Link> links) {
  std::sort(links.begin(), links.end());
  return links;
}

}  // namespace

ConnectivityGraph::ConnectivityGraph(int node_count, std::vector<Link> links)
    : UndirectedGraph(node_count, sorted(std::move(links))) {
  if (!is_connected()) throw std::invalid_argument("connectivity graph is not connected");
}

LineGraph line_graph(const UndirectedGraph& g) {
  if (g.link_count() == 0) throw std::invalid_argument("no links");
  std::vector<std::pair<int, int>> edges;
  for (NodeId v = 0; v < g.node_count(); ++v) {
    auto inc = g.incident_links(v);
    for (std::size_t i = 0; i < inc.size(); ++i) {
      for (std::size_t j = i + 1; j < inc.size(); ++j) {
        edges.emplace_back(std::min(inc[i], inc[j]), std::max(inc[i], inc[j]));
      }
    }
  }
  return conflict_graph(g.link_count(), std::move(edges));
}

ConflictGraph interface_conflicts(const ConnectivityGraph& g) { return line_graph(g); }

ConflictGraph conflict_graph(int link_count, std::vector<std::pair<int, int>> conflicts) {
  LineGraph lg;
  lg.vertex_count = link_count;
  for (auto& [i, j] : conflicts) {
    if (i == j || i < 0 || j < 0 || i >= link_count || j >= link_count) {
      throw std::invalid_argument("invalid conflict pair");
    }
    if (i > j) std::swap(i, j);
  }
  std::sort(conflicts.begin(), conflicts.end());
  conflicts.erase(std::unique(conflicts.begin(), conflicts.end()), conflicts.end());
  lg.edges = std::move(conflicts);
  lg.adjacency.assign(link_count, {});
  for (auto [i, j] : lg.edges) {
    lg.adjacency[i].push_back(j);
    lg.adjacency[j].push_back(i);
  }
  lg.degree.resize(link_count);
  for (int i = 0; i < link_count; ++i) {
    std::sort(lg.adjacency[i].begin(), lg.adjacency[i].end());
    lg.degree[i] = static_cast<int>(lg.adjacency[i].size());
  }
  return lg;
}

ExtendedGraph extend_graph(const UndirectedGraph& g, std::span<const NodeRole> roles,
                           const Eigen::VectorXd& link_rates,
                           const Eigen::VectorXd& service_rates) {
  const int n = g.node_count();
  if (static_cast<int>(roles.size()) != n || service_rates.size() != n) {
    throw std::invalid_argument("per-node vector size mismatch");
  }
  if (link_rates.size() != g.link_count()) throw std::invalid_argument("link rate size mismatch");

  ExtendedGraph ext;
  ext.physical_node_count = n;
  ext.physical_link_count = g.link_count();
  ext.virtual_node.assign(n, -1);
  ext.virtual_link.assign(n, -1);

  std::vector<Link> links = g.links();
  std::vector<double> rates(link_rates.data(), link_rates.data() + link_rates.size());
  ext.link_owner.assign(links.size(), -1);
  ext.server_link.assign(links.size(), false);

  NodeId next_virtual = n;
  for (NodeId v = 0; v < n; ++v) {
    if (roles[v] == NodeRole::relay) continue;
    if (!(service_rates[v] > 0.0)) {
      throw std::invalid_argument("nonpositive service rate on computing node " + std::to_string(v));
    }
    ext.virtual_node[v] = next_virtual;
    ext.virtual_link[v] = static_cast<LinkId>(links.size());
    links.emplace_back(v, next_virtual);
    rates.push_back(service_rates[v]);
    ext.link_owner.push_back(v);
    ext.server_link.push_back(roles[v] == NodeRole::server);
    ++next_virtual;
  }
  ext.graph = UndirectedGraph(next_virtual, std::move(links));
  ext.rates = Eigen::Map<const Eigen::VectorXd>(rates.data(), static_cast<Eigen::Index>(rates.size()));
  return ext;
}

ExtendedLineGraph extended_line_graph(const ExtendedGraph& ext) {
  ExtendedLineGraph lg;
  static_cast<LineGraph&>(lg) = line_graph(ext.graph);
  lg.is_virtual.resize(ext.link_count());
  for (LinkId e = 0; e < ext.link_count(); ++e) lg.is_virtual[e] = ext.is_virtual(e);
  lg.is_server_virtual = ext.server_link;
  return lg;
}

}  // namespace offloadnet
