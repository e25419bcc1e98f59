#pragma once

// Graph representations used throughout the simulator: the connectivity
// graph of wireless devices, the conflict graph over its links, the extended
// graph with one virtual node per computing node, and line graphs.
//
// Node and link ids are dense integers. Every per-link vector in the library
// is indexed by the link ids of the graph it belongs to.

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <compare>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace offloadnet {

using NodeId = int;
using LinkId = int;

/// Undirected link between two nodes, stored with a <= b.
struct Link {
  NodeId a = 0;
  NodeId b = 0;

  Link() = default;
  Link(NodeId u, NodeId v) : a(u < v ? u : v), b(u < v ? v : u) {}

  bool has(NodeId v) const { return a == v || b == v; }
  NodeId other(NodeId v) const { return v == a ? b : a; }

  friend auto operator<=>(const Link&, const Link&) = default;
};

enum class NodeRole : std::uint8_t { edge, relay, server };

const char* to_string(NodeRole role);
NodeRole parse_node_role(std::string_view text);

/// Simple undirected graph. Links keep the order they were given in; use
/// `canonical` to obtain the sorted ordering.
class UndirectedGraph {
 public:
  UndirectedGraph() = default;

  /// Throws std::invalid_argument on self-loops, duplicate links or
  /// out-of-range endpoints.
  UndirectedGraph(int node_count, std::vector<Link> links);

  /// Links sorted lexicographically by (min endpoint, max endpoint).
  static UndirectedGraph canonical(int node_count, std::vector<Link> links);

  int node_count() const { return node_count_; }
  int link_count() const { return static_cast<int>(links_.size()); }

  const std::vector<Link>& links() const { return links_; }
  const Link& link(LinkId e) const { return links_[e]; }

  std::span<const NodeId> neighbors(NodeId v) const { return neighbors_[v]; }
  std::span<const LinkId> incident_links(NodeId v) const { return incident_[v]; }
  int degree(NodeId v) const { return static_cast<int>(neighbors_[v].size()); }

  /// Link id joining u and v, or -1.
  LinkId find_link(NodeId u, NodeId v) const;

  bool is_connected() const;

  /// True when removing `removed` (a node mask) leaves the remaining nodes
  /// in more than one component.
  bool disconnected_without(const std::vector<bool>& removed) const;

  friend bool operator==(const UndirectedGraph& x, const UndirectedGraph& y) {
    return x.node_count_ == y.node_count_ && x.links_ == y.links_;
  }

 private:
  int node_count_ = 0;
  std::vector<Link> links_;
  std::vector<std::vector<NodeId>> neighbors_;  // sorted ascending
  std::vector<std::vector<LinkId>> incident_;
};

/// Device graph. Always connected and canonically ordered.
class ConnectivityGraph : public UndirectedGraph {
 public:
  ConnectivityGraph() = default;
  ConnectivityGraph(int node_count, std::vector<Link> links);
};

/// Line graph (or any graph whose vertices are links of another graph).
/// Vertex i corresponds to link i of the source graph.
struct LineGraph {
  int vertex_count = 0;
  std::vector<std::vector<int>> adjacency;  // sorted ascending
  std::vector<std::pair<int, int>> edges;   // i < j, sorted
  Eigen::VectorXi degree;

  int edge_count() const { return static_cast<int>(edges.size()); }

  template <typename Scalar = double>
  Eigen::SparseMatrix<Scalar> adjacency_matrix() const {
    std::vector<Eigen::Triplet<Scalar>> triplets;
    triplets.reserve(2 * edges.size());
    for (auto [i, j] : edges) {
      triplets.emplace_back(i, j, Scalar(1));
      triplets.emplace_back(j, i, Scalar(1));
    }
    Eigen::SparseMatrix<Scalar> a(vertex_count, vertex_count);
    a.setFromTriplets(triplets.begin(), triplets.end());
    return a;
  }
};

/// Links of g become vertices; two vertices are adjacent iff the links share
/// an endpoint. Throws std::invalid_argument("no links") for an empty graph.
LineGraph line_graph(const UndirectedGraph& g);

/// Conflict relation between the links of a connectivity graph. Built from
/// interface conflicts (line graph) or from an explicit list of pairs.
using ConflictGraph = LineGraph;

ConflictGraph interface_conflicts(const ConnectivityGraph& g);
ConflictGraph conflict_graph(int link_count, std::vector<std::pair<int, int>> conflicts);

/// Connectivity graph plus a virtual node and virtual link for every edge
/// and server node. Physical links keep their ids 0..|E|-1; virtual links
/// follow, ordered by owner node id. Virtual node ids follow the physical
/// node ids in the same order.
struct ExtendedGraph {
  UndirectedGraph graph;
  int physical_node_count = 0;
  int physical_link_count = 0;
  std::vector<NodeId> virtual_node;  // per physical node, -1 for relays
  std::vector<LinkId> virtual_link;  // per physical node, -1 for relays
  std::vector<NodeId> link_owner;    // per extended link, -1 for physical
  std::vector<bool> server_link;     // per extended link
  Eigen::VectorXd rates;             // packets per slot

  int node_count() const { return graph.node_count(); }
  int link_count() const { return graph.link_count(); }
  bool is_virtual(LinkId e) const { return e >= physical_link_count; }
};

/// Throws std::invalid_argument when an edge or server node has a
/// nonpositive service rate or the rate vectors have the wrong size.
ExtendedGraph extend_graph(const UndirectedGraph& g, std::span<const NodeRole> roles,
                           const Eigen::VectorXd& link_rates,
                           const Eigen::VectorXd& service_rates);

struct ExtendedLineGraph : LineGraph {
  std::vector<bool> is_virtual;
  std::vector<bool> is_server_virtual;
};

ExtendedLineGraph extended_line_graph(const ExtendedGraph& ext);

}  // namespace offloadnet
