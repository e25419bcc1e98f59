#pragma once

// Greedy distributed offloading on the extended graph. Each task source
// picks the execution node with the lowest estimated round-trip cost under a
// link-weight vector; the chosen routes are then fed back through the
// queueing estimator to obtain the latency actually experienced.

#include "offloadnet/graph.hpp"
#include "offloadnet/instance.hpp"
#include "offloadnet/queueing.hpp"

#include <Eigen/Core>

#include <vector>

namespace offloadnet {

/// Structures derived from an instance that stay fixed across task draws.
struct PreparedNetwork {
  const NetworkInstance* instance = nullptr;
  ExtendedGraph ext;
  ExtendedLineGraph line;
  QueueingNetwork<double> queue;

  explicit PreparedNetwork(const NetworkInstance& inst);
};

struct EvaluationParams {
  int horizon = 1000;   // T
  int iterations = 10;  // K
};

/// Contention-free per-packet delay 1 / r.
Eigen::VectorXd baseline_weights(const ExtendedGraph& ext);

struct ShortestPathTree {
  NodeId source = 0;
  std::vector<double> distance;
  std::vector<NodeId> parent;       // -1 at the source
  std::vector<LinkId> parent_link;  // -1 at the source
  std::vector<int> physical_hops;   // along the tree path

  /// Extended links from the source to `target`, in travel order.
  std::vector<LinkId> path_to(NodeId target) const;
};

/// Dijkstra over the extended graph. Equal-distance candidates prefer the
/// smaller parent node id.
ShortestPathTree shortest_paths(const ExtendedGraph& ext, const Eigen::VectorXd& weights,
                                NodeId source);

/// Round-trip cost of running `task` on `candidate`, given the tree rooted
/// at the task source: max(eta_u * beta(m, v~) + eta_d * beta(v, m), 2 zeta(v, m)).
double offload_cost(const Task& task, NodeId candidate, const ExtendedGraph& ext,
                    const ShortestPathTree& tree);

struct OffloadDecision {
  std::vector<NodeId> target;               // per task
  std::vector<std::vector<LinkId>> routes;  // per task, ends on the target's virtual link
};

OffloadDecision decide(const ExtendedGraph& ext, const Eigen::VectorXd& weights, const TaskSet& tasks);

/// Every task runs at its source.
OffloadDecision decide_local(const ExtendedGraph& ext, const TaskSet& tasks);

struct RouteMatrices {
  Eigen::MatrixXd upload;    // |E^e| x |J|
  Eigen::MatrixXd download;  // upload restricted to physical links
};

RouteMatrices build_route_matrices(const OffloadDecision& decision, const ExtendedGraph& ext);

/// Per-task packet arrival rates lambda_j * (eta_u + eta_d).
Eigen::VectorXd task_packet_rates(const TaskSet& tasks);

/// Per-link traffic rho = Gamma lambda.
Eigen::VectorXd link_traffic(const RouteMatrices& routes, const TaskSet& tasks);

/// u_j = max(eta_u sum_up tau + eta_d sum_down tau, 2 * physical hops).
Eigen::VectorXd empirical_latency(const Eigen::VectorXd& tau, const RouteMatrices& routes,
                                  const TaskSet& tasks);

struct PolicyEvaluation {
  OffloadDecision decision;
  RouteMatrices routes;
  Eigen::VectorXd traffic;
  DelayEstimate<double> empirical;
  Eigen::VectorXd latency;
  std::vector<bool> congested;
  double objective = 0.0;

  int congested_count() const;
};

/// Latency and congestion of a fixed decision.
PolicyEvaluation evaluate_decision(const PreparedNetwork& net, const TaskSet& tasks,
                                   OffloadDecision decision, const EvaluationParams& params = {});

/// decide -> route matrices -> empirical delays -> latency.
PolicyEvaluation evaluate_policy(const PreparedNetwork& net, const TaskSet& tasks,
                                 const Eigen::VectorXd& weights,
                                 const EvaluationParams& params = {});

}  // namespace offloadnet
