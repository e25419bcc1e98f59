#pragma once

// GCNN-predicted link weights and their training loop.
//
// The GCNN predicts per-link arrival rates from the task load; the queueing
// estimator turns them into congestion-aware weights that drive the
// offloading decisions. Decisions are discrete, so training uses a
// surrogate gradient on the weights: the negated per-link sum over tasks of
// d(total latency)/d(route incidence), plus the gradient of the squared
// mismatch between predicted and empirical per-link delays.

#include "offloadnet/gcnn.hpp"
#include "offloadnet/policy.hpp"

#include <functional>
#include <string>
#include <vector>

namespace offloadnet {

struct WeightPrediction {
  Eigen::MatrixXd features;
  Eigen::SparseMatrix<double> propagation;
  GcnnCache<double> gcnn;
  DelayEstimate<double> estimate;

  const Eigen::VectorXd& arrivals() const { return estimate.arrivals; }
  const Eigen::VectorXd& weights() const { return estimate.delays; }
};

WeightPrediction predict_weights(const Gcnn& model, const PreparedNetwork& net, const TaskSet& tasks,
                                 const EvaluationParams& params = {});

/// d(1^T u)/d(Gamma) for the evaluated routes, holding decisions fixed.
/// Gamma enters through rho = Gamma lambda and directly in the latency;
/// download incidence is tied to the physical rows of Gamma.
Eigen::MatrixXd route_gradient(const PreparedNetwork& net, const TaskSet& tasks,
                               const PolicyEvaluation& eval);

struct PipelineGradient {
  double objective = 0.0;
  Eigen::VectorXd weight_gradient;   // surrogate gradient on the predicted weights
  Eigen::VectorXd arrival_gradient;  // pulled back through the queueing estimator
  GcnnGradient<double> parameters;
  PolicyEvaluation evaluation;
  WeightPrediction prediction;
};

PipelineGradient pipeline_gradient(const Gcnn& model, const PreparedNetwork& net, const TaskSet& tasks,
                                   const EvaluationParams& params = {});

struct TrainStepResult {
  double objective = 0.0;
  double gradient_norm = 0.0;  // before clipping
  bool updated = false;
};

/// One SGD step on a single (instance, task draw). Non-finite gradients
/// leave the model untouched. A positive `max_gradient_norm` rescales larger
/// gradients to that norm.
TrainStepResult train_step(Gcnn& model, const PreparedNetwork& net, const TaskSet& tasks,
                           double learning_rate, const EvaluationParams& params = {},
                           double max_gradient_norm = 0.0);

struct TrainConfig {
  double learning_rate = 1e-6;
  // The delay estimate has a 1/(mu - x)^2 derivative, so a prediction that
  // lands next to the stability boundary produces an arbitrarily large
  // gradient. 0 disables clipping.
  double max_gradient_norm = 1e3;
  EvaluationParams evaluation;
  int eval_every = 100;
  int patience = 10;
  double min_improvement = 0.001;  // relative
  double validation_fraction = 0.1;
  long max_steps = 200000;
  std::uint64_t seed = 0;
};

struct TrainLogRow {
  long step = 0;
  double train_objective = 0.0;  // mean over the steps since the last row
  double validation_objective = 0.0;
  int skipped_updates = 0;
};

struct TrainResult {
  Gcnn model;  // best validation checkpoint
  std::vector<TrainLogRow> log;
  long steps = 0;
  bool stopped_early = false;
  double best_validation = 0.0;
};

/// Mean total latency of the GCNN policy over every task draw of `records`.
double mean_objective(const Gcnn& model, const std::vector<PreparedNetwork>& nets,
                      const std::vector<const InstanceRecord*>& records,
                      const EvaluationParams& params = {});

TrainResult train(Gcnn model, const std::vector<InstanceRecord>& dataset, const TrainConfig& config,
                  const std::function<void(const TrainLogRow&)>& on_log = {});

void write_training_log(const std::filesystem::path& path, const std::vector<TrainLogRow>& log);

}  // namespace offloadnet
