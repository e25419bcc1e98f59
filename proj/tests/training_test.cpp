#include "offloadnet/training.hpp"

#include <gtest/gtest.h>

#include "oracles.hpp"

namespace offloadnet {
namespace {

// Ring of 7 nodes plus three chords: 10 physical links.
NetworkInstance ten_link_instance() {
  std::vector<Link> links{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {0, 6}, {0, 3}, {1, 4}, {2, 5}};
  std::vector<double> rates{41, 55, 63, 38, 47, 59, 66, 35, 52, 44};
  std::vector<NodeRole> roles{NodeRole::edge, NodeRole::edge, NodeRole::edge, NodeRole::relay,
                              NodeRole::server, NodeRole::server, NodeRole::edge};
  return make_instance(0, 0, 7, links, rates, roles, {9, 12, 10, 0, 140, 180, 11});
}

TaskSet ten_link_tasks(const NetworkInstance& inst) {
  TaskSet tasks;
  const double rates[] = {0.02, 0.05, 0.03, 0.06};
  int k = 0;
  for (NodeId v : inst.nodes_with_role(NodeRole::edge)) {
    Task t;
    t.source = v;
    t.servers = inst.nodes_with_role(NodeRole::server);
    t.job_rate = rates[k++];
    t.upload_packets = 100;
    t.download_packets = 1;
    tasks.push_back(t);
  }
  return tasks;
}

// Total latency as a function of a continuous route matrix.
double objective_of_routes(const PreparedNetwork& net, const TaskSet& tasks, const Eigen::MatrixXd& gamma) {
  const Eigen::Index physical = net.ext.physical_link_count;
  Eigen::MatrixXd down = gamma;
  down.bottomRows(gamma.rows() - physical).setZero();
  Eigen::VectorXd lambda(static_cast<Eigen::Index>(tasks.size()));
  for (std::size_t j = 0; j < tasks.size(); ++j) lambda[static_cast<Eigen::Index>(j)] = tasks[j].packet_rate();
  Eigen::VectorXd tau = estimate_delays(net.queue, Eigen::VectorXd(gamma * lambda), 1000, 10).delays;
  double total = 0.0;
  for (std::size_t j = 0; j < tasks.size(); ++j) {
    const auto c = static_cast<Eigen::Index>(j);
    const double delay = tasks[j].upload_packets * gamma.col(c).dot(tau) + tasks[j].download_packets * down.col(c).dot(tau);
    total += std::max(delay, 2.0 * down.col(c).sum());
  }
  return total;
}

TEST(RouteGradientTest, MatchesFiniteDifferences) {
  NetworkInstance inst = ten_link_instance();
  PreparedNetwork net(inst);
  TaskSet tasks = ten_link_tasks(inst);
  PolicyEvaluation ev = evaluate_policy(net, tasks, baseline_weights(net.ext));
  Eigen::MatrixXd g = route_gradient(net, tasks, ev);
  const Eigen::MatrixXd gamma = ev.routes.upload;
  EXPECT_NEAR(objective_of_routes(net, tasks, gamma), ev.objective, 1e-9 * ev.objective);
  Eigen::VectorXd flat = gamma.reshaped();
  auto f = [&](const Eigen::VectorXd& v) { return objective_of_routes(net, tasks, v.reshaped(gamma.rows(), gamma.cols())); };
  Eigen::VectorXd fd(flat.size());
  // Unused entries sit at zero; stepping below would make arrivals negative.
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    fd[i] = flat[i] > 1e-6 ? oracle::central_difference(f, flat, i, 1e-6) : oracle::forward_difference(f, flat, i, 1e-6);
  }
  EXPECT_LT((g.reshaped() - fd).norm() / fd.norm(), 1e-4);
}

TEST(PipelineGradientTest, ComposedGradientMatchesFiniteDifferences) {
  NetworkInstance inst = ten_link_instance();
  PreparedNetwork net(inst);
  ASSERT_EQ(inst.graph.link_count(), 10);
  TaskSet tasks = ten_link_tasks(inst);
  Gcnn model(default_dims(), 3);
  PipelineGradient pg = pipeline_gradient(model, net, tasks);
  const Eigen::VectorXd upstream = pg.weight_gradient;
  ASSERT_TRUE(upstream.allFinite());
  // Keep away from the estimator's kinks.
  const auto& est = pg.prediction.estimate;
  for (Eigen::Index e = 0; e < est.arrivals.size(); ++e) {
    ASSERT_GT(std::abs(est.service.mu_hat[e] - est.arrivals[e]), 1e-3);
  }

  auto f = [&](const Eigen::VectorXd& theta) {
    Gcnn m = model;
    m.set_parameters(theta);
    return upstream.dot(predict_weights(m, net, tasks).weights());
  };
  const Eigen::VectorXd theta = model.parameters();
  const Eigen::VectorXd analytic = pg.parameters.flatten();
  Eigen::VectorXd fd(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) fd[i] = oracle::central_difference(f, theta, i, 1e-6);
  EXPECT_LT((analytic - fd).norm() / fd.norm(), 1e-3);
}

TEST(PipelineGradientTest, WeightGradientTerms) {
  NetworkInstance inst = ten_link_instance();
  PreparedNetwork net(inst);
  TaskSet tasks = ten_link_tasks(inst);
  Gcnn model(default_dims(), 3);
  PipelineGradient pg = pipeline_gradient(model, net, tasks);
  Eigen::VectorXd route = route_gradient(net, tasks, pg.evaluation).rowwise().sum();
  Eigen::VectorXd mse = 2.0 * (pg.prediction.weights() - pg.evaluation.empirical.delays) / net.ext.node_count();
  EXPECT_TRUE(pg.weight_gradient.isApprox(-route + mse));
}

TEST(TrainStepTest, ZeroTasksLeavesModel) {
  NetworkInstance inst = ten_link_instance();
  PreparedNetwork net(inst);
  Gcnn model(default_dims(), 1);
  const Gcnn before = model;
  TrainStepResult r = train_step(model, net, {}, 1e-6);
  EXPECT_EQ(r.objective, 0.0);
  EXPECT_FALSE(r.updated);
  EXPECT_EQ(model, before);
}

TEST(TrainStepTest, ZeroLearningRateReportsObjective) {
  NetworkInstance inst = ten_link_instance();
  PreparedNetwork net(inst);
  TaskSet tasks = ten_link_tasks(inst);
  Gcnn model(default_dims(), 1);
  const Gcnn before = model;
  TrainStepResult r = train_step(model, net, tasks, 0.0);
  EXPECT_EQ(model, before);
  EXPECT_DOUBLE_EQ(r.objective, evaluate_policy(net, tasks, predict_weights(model, net, tasks).weights()).objective);
}

TEST(TrainStepTest, ClippingBoundsTheUpdate) {
  NetworkInstance inst = ten_link_instance();
  PreparedNetwork net(inst);
  TaskSet tasks = ten_link_tasks(inst);
  Gcnn model(default_dims(), 1);
  const Eigen::VectorXd before = model.parameters();
  TrainStepResult r = train_step(model, net, tasks, 1.0, {}, 0.5);
  ASSERT_TRUE(r.updated);
  ASSERT_GT(r.gradient_norm, 0.5);
  EXPECT_NEAR((model.parameters() - before).norm(), 0.5, 1e-9);
}

TEST(TrainStepTest, SmokeRunMovingAverageDoesNotRise) {
  NetworkInstance inst = ten_link_instance();
  PreparedNetwork net(inst);
  TaskSet tasks = ten_link_tasks(inst);
  Gcnn model(default_dims(), 4);
  std::vector<double> obj;
  for (int s = 0; s < 200; ++s) obj.push_back(train_step(model, net, tasks, 1e-6).objective);
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s + 50 <= obj.size(); s += 50) {
    double avg = 0.0;
    for (std::size_t k = s; k < s + 50; ++k) avg += obj[k];
    avg /= 50.0;
    EXPECT_LE(avg, prev * (1.0 + 1e-12));
    prev = avg;
  }
}

std::vector<InstanceRecord> small_dataset() {
  std::vector<InstanceRecord> out;
  for (std::uint64_t i = 0; i < 10; ++i) out.push_back(generate_record(i, 20, 100 + i, 2));
  return out;
}

TEST(TrainTest, PatienceExhaustedReturnsInputModel) {
  TrainConfig config;
  config.learning_rate = 0.0;
  config.eval_every = 5;
  config.patience = 2;
  Gcnn model(default_dims(), 9);
  TrainResult r = train(model, small_dataset(), config);
  EXPECT_TRUE(r.stopped_early);
  EXPECT_EQ(r.steps, 10);
  EXPECT_EQ(r.model, model);
  ASSERT_EQ(r.log.size(), 3u);
  EXPECT_EQ(r.log[0].step, 0);
}

TEST(TrainTest, DeterministicReplay) {
  TrainConfig config;
  config.eval_every = 10;
  config.max_steps = 60;
  config.seed = 5;
  TrainResult a = train(Gcnn(default_dims(), 5), small_dataset(), config);
  TrainResult b = train(Gcnn(default_dims(), 5), small_dataset(), config);
  EXPECT_EQ(a.model.parameters(), b.model.parameters());
  EXPECT_EQ(a.steps, b.steps);
  ASSERT_EQ(a.log.size(), b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) EXPECT_EQ(a.log[i].validation_objective, b.log[i].validation_objective);
}

TEST(TrainTest, MaxStepsZeroKeepsModel) {
  TrainConfig config;
  config.max_steps = 0;
  Gcnn model(default_dims(), 2);
  TrainResult r = train(model, small_dataset(), config);
  EXPECT_EQ(r.steps, 0);
  EXPECT_EQ(r.model, model);
  EXPECT_THROW(train(model, {}, config), std::invalid_argument);
}

}  // namespace
}  // namespace offloadnet
