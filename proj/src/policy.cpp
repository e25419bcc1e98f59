#include "offloadnet/policy.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>

namespace offloadnet {

PreparedNetwork::PreparedNetwork(const NetworkInstance& inst)
    : instance(&inst),
      ext(extend_graph(inst.graph, inst.roles, inst.link_rates, inst.service_rates)),
      line(extended_line_graph(ext)),
      queue(inst.conflict, ext) {}

Eigen::VectorXd baseline_weights(const ExtendedGraph& ext) {
  if ((ext.rates.array() <= 0.0).any()) throw std::invalid_argument("zero link rate");
  return ext.rates.cwiseInverse();
}

std::vector<LinkId> ShortestPathTree::path_to(NodeId target) const {
  std::vector<LinkId> path;
  for (NodeId v = target; v != source; v = parent[v]) {
    if (parent[v] < 0) throw std::runtime_error("node unreachable from source");
    path.push_back(parent_link[v]);
  }
  std::reverse(path.begin(), path.end());
  return path;
}

ShortestPathTree shortest_paths(const ExtendedGraph& ext, const Eigen::VectorXd& weights,
                                NodeId source) {
  const UndirectedGraph& g = ext.graph;
  if (weights.size() != g.link_count()) throw std::invalid_argument("weight vector has wrong dimension");
  if (!(weights.array() > 0.0).all()) throw std::invalid_argument("link weights must be positive");

  const int n = g.node_count();
  ShortestPathTree t;
  t.source = source;
  t.distance.assign(n, std::numeric_limits<double>::infinity());
  t.parent.assign(n, -1);
  t.parent_link.assign(n, -1);
  t.physical_hops.assign(n, 0);
  std::vector<bool> done(n, false);

  using Entry = std::pair<double, NodeId>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  t.distance[source] = 0.0;
  heap.emplace(0.0, source);
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (done[u]) continue;
    done[u] = true;
    for (LinkId e : g.incident_links(u)) {
      NodeId v = g.link(e).other(u);
      if (done[v]) continue;
      double nd = d + weights[e];
      if (nd < t.distance[v] || (nd == t.distance[v] && u < t.parent[v])) {
        t.distance[v] = nd;
        t.parent[v] = u;
        t.parent_link[v] = e;
        t.physical_hops[v] = t.physical_hops[u] + (ext.is_virtual(e) ? 0 : 1);
        heap.emplace(nd, v);
      }
    }
  }
  for (NodeId v = 0; v < n; ++v) {
    if (!done[v]) throw std::runtime_error("extended graph is disconnected at node " + std::to_string(v));
  }
  return t;
}

namespace {

bool is_candidate(const Task& task, NodeId v) {
  return v == task.source || std::binary_search(task.servers.begin(), task.servers.end(), v);
}

}  // namespace

double offload_cost(const Task& task, NodeId candidate, const ExtendedGraph& ext,
                    const ShortestPathTree& tree) {
  if (!is_candidate(task, candidate)) {
    throw std::invalid_argument("node " + std::to_string(candidate) + " is not an offloading option");
  }
  if (tree.source != task.source) throw std::invalid_argument("tree is not rooted at the task source");
  const NodeId shadow = ext.virtual_node[candidate];
  if (shadow < 0) throw std::invalid_argument("candidate has no computing capacity");
  const double there = task.upload_packets * tree.distance[shadow];
  const double back = task.download_packets * tree.distance[candidate];
  return std::max(there + back, 2.0 * tree.physical_hops[candidate]);
}

OffloadDecision decide(const ExtendedGraph& ext, const Eigen::VectorXd& weights, const TaskSet& tasks) {
  OffloadDecision d;
  d.target.reserve(tasks.size());
  d.routes.reserve(tasks.size());
  for (const Task& task : tasks) {
    ShortestPathTree tree = shortest_paths(ext, weights, task.source);
    NodeId best = task.source;
    double best_cost = offload_cost(task, task.source, ext, tree);
    for (NodeId s : task.servers) {
      double c = offload_cost(task, s, ext, tree);
      if (c < best_cost) {
        best_cost = c;
        best = s;
      }
    }
    d.target.push_back(best);
    d.routes.push_back(tree.path_to(ext.virtual_node[best]));
  }
  return d;
}

OffloadDecision decide_local(const ExtendedGraph& ext, const TaskSet& tasks) {
  OffloadDecision d;
  for (const Task& task : tasks) {
    LinkId e = ext.virtual_link[task.source];
    if (e < 0) throw std::invalid_argument("task source has no computing capacity");
    d.target.push_back(task.source);
    d.routes.push_back({e});
  }
  return d;
}

RouteMatrices build_route_matrices(const OffloadDecision& decision, const ExtendedGraph& ext) {
  const auto tasks = static_cast<Eigen::Index>(decision.routes.size());
  RouteMatrices m;
  m.upload = Eigen::MatrixXd::Zero(ext.link_count(), tasks);
  for (Eigen::Index j = 0; j < tasks; ++j) {
    for (LinkId e : decision.routes[static_cast<std::size_t>(j)]) m.upload(e, j) = 1.0;
  }
  m.download = m.upload;
  m.download.bottomRows(ext.link_count() - ext.physical_link_count).setZero();
  return m;
}

Eigen::VectorXd task_packet_rates(const TaskSet& tasks) {
  Eigen::VectorXd rates(static_cast<Eigen::Index>(tasks.size()));
  for (std::size_t j = 0; j < tasks.size(); ++j) rates[static_cast<Eigen::Index>(j)] = tasks[j].packet_rate();
  return rates;
}

Eigen::VectorXd link_traffic(const RouteMatrices& routes, const TaskSet& tasks) {
  return routes.upload * task_packet_rates(tasks);
}

Eigen::VectorXd empirical_latency(const Eigen::VectorXd& tau, const RouteMatrices& routes,
                                  const TaskSet& tasks) {
  if (tau.size() != routes.upload.rows() || routes.upload.cols() != static_cast<Eigen::Index>(tasks.size())) {
    throw std::invalid_argument("latency inputs have mismatched dimensions");
  }
  Eigen::VectorXd up = routes.upload.transpose() * tau;
  Eigen::VectorXd down = routes.download.transpose() * tau;
  Eigen::VectorXd hops = routes.download.colwise().sum().transpose();
  Eigen::VectorXd u(up.size());
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    const Task& t = tasks[static_cast<std::size_t>(j)];
    u[j] = std::max(t.upload_packets * up[j] + t.download_packets * down[j], 2.0 * hops[j]);
  }
  return u;
}

int PolicyEvaluation::congested_count() const {
  return static_cast<int>(std::count(congested.begin(), congested.end(), true));
}

PolicyEvaluation evaluate_decision(const PreparedNetwork& net, const TaskSet& tasks,
                                   OffloadDecision decision, const EvaluationParams& params) {
  PolicyEvaluation ev;
  ev.decision = std::move(decision);
  ev.routes = build_route_matrices(ev.decision, net.ext);
  ev.traffic = link_traffic(ev.routes, tasks);
  ev.empirical = estimate_delays(net.queue, ev.traffic, params.horizon, params.iterations);
  ev.latency = empirical_latency(ev.empirical.delays, ev.routes, tasks);
  ev.objective = ev.latency.sum();
  FlagVector unstable = congestion_flags(ev.empirical.service, ev.traffic);
  ev.congested.assign(tasks.size(), false);
  for (std::size_t j = 0; j < tasks.size(); ++j) {
    for (LinkId e : ev.decision.routes[j]) {
      if (unstable[e]) ev.congested[j] = true;
    }
  }
  return ev;
}

PolicyEvaluation evaluate_policy(const PreparedNetwork& net, const TaskSet& tasks,
                                 const Eigen::VectorXd& weights, const EvaluationParams& params) {
  return evaluate_decision(net, tasks, decide(net.ext, weights, tasks), params);
}

}  // namespace offloadnet
