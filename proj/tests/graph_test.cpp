#include "offloadnet/graph.hpp"
#include "offloadnet/instance.hpp"

#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

namespace offloadnet {
namespace {

TEST(UndirectedGraphTest, RejectsMalformedLinks) {
  EXPECT_THROW(UndirectedGraph(3, {{0, 0}}), std::invalid_argument);
  EXPECT_THROW(UndirectedGraph(3, {{0, 1}, {1, 0}}), std::invalid_argument);
  EXPECT_THROW(UndirectedGraph(3, {{0, 3}}), std::invalid_argument);
}

TEST(UndirectedGraphTest, CanonicalOrderAndLookup) {
  UndirectedGraph g = UndirectedGraph::canonical(4, {{3, 2}, {1, 0}, {2, 0}});
  ASSERT_EQ(g.link_count(), 3);
  EXPECT_EQ(g.link(0), Link(0, 1));
  EXPECT_EQ(g.link(1), Link(0, 2));
  EXPECT_EQ(g.link(2), Link(2, 3));
  EXPECT_EQ(g.find_link(3, 2), 2);
  EXPECT_EQ(g.find_link(1, 3), -1);
  EXPECT_EQ(g.degree(0), 2);
  EXPECT_TRUE(g.is_connected());
}

TEST(UndirectedGraphTest, ConnectivityGraphMustBeConnected) {
  EXPECT_THROW(ConnectivityGraph(4, {{0, 1}, {2, 3}}), std::invalid_argument);
}

TEST(LineGraphTest, PathHasOneEdge) {
  LineGraph lg = line_graph(UndirectedGraph(3, {{0, 1}, {1, 2}}));
  EXPECT_EQ(lg.vertex_count, 2);
  ASSERT_EQ(lg.edge_count(), 1);
  EXPECT_EQ(lg.edges[0], std::make_pair(0, 1));
}

TEST(LineGraphTest, TriangleMapsToTriangle) {
  LineGraph lg = line_graph(UndirectedGraph(3, {{0, 1}, {1, 2}, {0, 2}}));
  EXPECT_EQ(lg.vertex_count, 3);
  EXPECT_EQ(lg.edge_count(), 3);
  for (int v = 0; v < 3; ++v) EXPECT_EQ(lg.degree[v], 2);
}

TEST(LineGraphTest, StarMapsToCompleteGraph) {
  LineGraph lg = line_graph(UndirectedGraph(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}}));
  EXPECT_EQ(lg.vertex_count, 4);
  EXPECT_EQ(lg.edge_count(), 6);
}

TEST(LineGraphTest, EmptyGraphThrows) {
  EXPECT_THROW(line_graph(UndirectedGraph(3, {})), std::invalid_argument);
}

TEST(LineGraphTest, AdjacencyMatrixIsSymmetric) {
  LineGraph lg = line_graph(UndirectedGraph(4, {{0, 1}, {1, 2}, {2, 3}, {1, 3}}));
  Eigen::MatrixXd a = Eigen::MatrixXd(lg.adjacency_matrix());
  EXPECT_TRUE(a.isApprox(a.transpose()));
  EXPECT_EQ(a.sum(), 2.0 * lg.edge_count());
}

TEST(ConflictGraphTest, ExplicitPairs) {
  ConflictGraph c = conflict_graph(3, {{2, 0}});
  EXPECT_EQ(c.vertex_count, 3);
  ASSERT_EQ(c.edge_count(), 1);
  EXPECT_EQ(c.edges[0], std::make_pair(0, 2));
  EXPECT_EQ(c.degree[1], 0);
}

TEST(ExtendGraphTest, PathWithEdgeRelayServer) {
  UndirectedGraph g(3, {{0, 1}, {1, 2}});
  std::vector<NodeRole> roles{NodeRole::edge, NodeRole::relay, NodeRole::server};
  Eigen::VectorXd link_rates(2);
  link_rates << 40, 60;
  Eigen::VectorXd service(3);
  service << 8, 0, 100;
  ExtendedGraph ext = extend_graph(g, roles, link_rates, service);
  EXPECT_EQ(ext.link_count(), 4);
  EXPECT_EQ(ext.node_count(), 5);
  EXPECT_EQ(ext.physical_link_count, 2);
  EXPECT_EQ(ext.virtual_link[0], 2);
  EXPECT_EQ(ext.virtual_link[1], -1);
  EXPECT_EQ(ext.virtual_link[2], 3);
  EXPECT_EQ(ext.virtual_node[0], 3);
  EXPECT_EQ(ext.virtual_node[2], 4);
  EXPECT_DOUBLE_EQ(ext.rates[2], 8.0);
  EXPECT_DOUBLE_EQ(ext.rates[3], 100.0);
  EXPECT_FALSE(ext.server_link[2]);
  EXPECT_TRUE(ext.server_link[3]);
  EXPECT_EQ(ext.link_owner[3], 2);
  EXPECT_TRUE(ext.is_virtual(2));
  EXPECT_FALSE(ext.is_virtual(1));
}

TEST(ExtendGraphTest, NoServers) {
  UndirectedGraph g(3, {{0, 1}, {1, 2}});
  std::vector<NodeRole> roles{NodeRole::edge, NodeRole::relay, NodeRole::edge};
  Eigen::VectorXd service(3);
  service << 8, 0, 9;
  ExtendedGraph ext = extend_graph(g, roles, Eigen::VectorXd::Constant(2, 50.0), service);
  EXPECT_EQ(ext.link_count(), 4);
  EXPECT_EQ(std::count(ext.server_link.begin(), ext.server_link.end(), true), 0);
}

TEST(ExtendGraphTest, RejectsBadRates) {
  UndirectedGraph g(2, {{0, 1}});
  std::vector<NodeRole> roles{NodeRole::edge, NodeRole::server};
  Eigen::VectorXd service(2);
  service << 0, 100;
  EXPECT_THROW(extend_graph(g, roles, Eigen::VectorXd::Constant(1, 50.0), service), std::invalid_argument);
  service << 8, 100;
  EXPECT_THROW(extend_graph(g, roles, Eigen::VectorXd::Constant(2, 50.0), service), std::invalid_argument);
}

TEST(ExtendGraphTest, GeneratedInstanceCounts) {
  NetworkInstance inst = generate_instance(20, 11);
  std::vector<NodeRole> roles = inst.roles;
  ExtendedGraph ext = extend_graph(inst.graph, roles, inst.link_rates, inst.service_rates);
  const auto edges = inst.nodes_with_role(NodeRole::edge).size();
  const auto servers = inst.nodes_with_role(NodeRole::server).size();
  EXPECT_EQ(static_cast<std::size_t>(ext.link_count()), inst.graph.link_count() + edges + servers);
  EXPECT_EQ(static_cast<std::size_t>(ext.node_count()), 20 + edges + servers);
}

TEST(ExtendedLineGraphTest, VirtualFlags) {
  UndirectedGraph g(3, {{0, 1}, {1, 2}});
  std::vector<NodeRole> roles{NodeRole::edge, NodeRole::relay, NodeRole::server};
  Eigen::VectorXd service(3);
  service << 8, 0, 100;
  ExtendedGraph ext = extend_graph(g, roles, Eigen::VectorXd::Constant(2, 50.0), service);
  ExtendedLineGraph lg = extended_line_graph(ext);
  EXPECT_EQ(lg.vertex_count, 4);
  // 0-1 and 1-2 share node 1; each virtual link touches one physical link.
  EXPECT_EQ(lg.edge_count(), 3);
  EXPECT_EQ(lg.is_virtual, (std::vector<bool>{false, false, true, true}));
  EXPECT_EQ(lg.is_server_virtual, (std::vector<bool>{false, false, false, true}));
}

TEST(LineGraphTest, EdgeCountMatchesDegreeIdentity) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 3 + trial % 10;
    auto edges = oracle::random_connected_graph(n, 0.3, gen);
    std::vector<Link> links;
    for (auto [a, b] : edges) links.emplace_back(a, b);
    UndirectedGraph g(n, links);
    long expected = 0;
    for (int v = 0; v < n; ++v) expected += static_cast<long>(g.degree(v)) * (g.degree(v) - 1) / 2;
    EXPECT_EQ(line_graph(g).edge_count(), expected);
  }
}

}  // namespace
}  // namespace offloadnet
