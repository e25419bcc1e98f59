#include "offloadnet/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>

namespace offloadnet {

WeightPrediction predict_weights(const Gcnn& model, const PreparedNetwork& net, const TaskSet& tasks,
                                 const EvaluationParams& params) {
  WeightPrediction p;
  p.features = build_features(net.ext, net.instance->roles, tasks);
  p.propagation = propagation_operator<double>(net.line, model.aggregation());
  p.gcnn = forward(model, p.propagation, p.features);
  p.estimate = estimate_delays(net.queue, p.gcnn.prediction(), params.horizon, params.iterations);
  return p;
}

Eigen::MatrixXd route_gradient(const PreparedNetwork& net, const TaskSet& tasks,
                               const PolicyEvaluation& eval) {
  const Eigen::Index links = net.ext.link_count();
  const Eigen::Index physical = net.ext.physical_link_count;
  const auto tasks_n = static_cast<Eigen::Index>(tasks.size());
  const Eigen::VectorXd& tau = eval.empirical.delays;
  const Eigen::MatrixXd& up = eval.routes.upload;
  const Eigen::MatrixXd& down = eval.routes.download;

  // Active arm of the max in each task's latency.
  Eigen::VectorXd up_sum = up.transpose() * tau;
  Eigen::VectorXd down_sum = down.transpose() * tau;
  Eigen::VectorXd hops = down.colwise().sum().transpose();
  std::vector<bool> delay_arm(tasks.size());
  Eigen::VectorXd upstream_tau = Eigen::VectorXd::Zero(links);
  for (Eigen::Index j = 0; j < tasks_n; ++j) {
    const Task& t = tasks[static_cast<std::size_t>(j)];
    delay_arm[j] = t.upload_packets * up_sum[j] + t.download_packets * down_sum[j] >= 2.0 * hops[j];
    if (delay_arm[j]) upstream_tau += t.upload_packets * up.col(j) + t.download_packets * down.col(j);
  }
  Eigen::VectorXd traffic_grad = estimate_delays_vjp(net.queue, eval.empirical, upstream_tau);
  Eigen::VectorXd lambda = task_packet_rates(tasks);

  Eigen::MatrixXd g(links, tasks_n);
  for (Eigen::Index j = 0; j < tasks_n; ++j) {
    const Task& t = tasks[static_cast<std::size_t>(j)];
    for (Eigen::Index e = 0; e < links; ++e) {
      const bool phys = e < physical;
      double direct = delay_arm[j] ? (t.upload_packets + (phys ? t.download_packets : 0)) * tau[e]
                                   : (phys ? 2.0 : 0.0);
      g(e, j) = direct + traffic_grad[e] * lambda[j];
    }
  }
  return g;
}

PipelineGradient pipeline_gradient(const Gcnn& model, const PreparedNetwork& net, const TaskSet& tasks,
                                   const EvaluationParams& params) {
  PipelineGradient out;
  out.prediction = predict_weights(model, net, tasks, params);
  const Eigen::VectorXd& delta = out.prediction.weights();
  out.evaluation = evaluate_policy(net, tasks, delta, params);
  out.objective = out.evaluation.objective;

  Eigen::VectorXd route_term = route_gradient(net, tasks, out.evaluation).rowwise().sum();
  const double extended_nodes = net.ext.node_count();
  const Eigen::VectorXd& tau = out.evaluation.empirical.delays;
  out.weight_gradient = -route_term + 2.0 * (delta - tau) / extended_nodes;
  out.arrival_gradient = estimate_delays_vjp(net.queue, out.prediction.estimate, out.weight_gradient);
  out.parameters = forward_vjp(model, out.prediction.propagation, out.prediction.gcnn,
                               Eigen::MatrixXd(out.arrival_gradient));
  return out;
}

TrainStepResult train_step(Gcnn& model, const PreparedNetwork& net, const TaskSet& tasks,
                           double learning_rate, const EvaluationParams& params,
                           double max_gradient_norm) {
  TrainStepResult r;
  if (tasks.empty()) {
    return r;
  }
  PipelineGradient g = pipeline_gradient(model, net, tasks, params);
  r.objective = g.objective;
  Eigen::VectorXd flat = g.parameters.flatten();
  if (!flat.allFinite()) return r;
  r.gradient_norm = flat.norm();
  if (max_gradient_norm > 0.0 && r.gradient_norm > max_gradient_norm) flat *= max_gradient_norm / r.gradient_norm;
  if (learning_rate != 0.0) {
    model.set_parameters(model.parameters() - learning_rate * flat);
  }
  r.updated = true;
  return r;
}

double mean_objective(const Gcnn& model, const std::vector<PreparedNetwork>& nets,
                      const std::vector<const InstanceRecord*>& records, const EvaluationParams& params) {
  double total = 0.0;
  long count = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (const TaskSet& tasks : records[i]->task_draws) {
      WeightPrediction p = predict_weights(model, nets[i], tasks, params);
      total += evaluate_policy(nets[i], tasks, p.weights(), params).objective;
      ++count;
    }
  }
  return count > 0 ? total / static_cast<double>(count) : 0.0;
}

TrainResult train(Gcnn model, const std::vector<InstanceRecord>& dataset, const TrainConfig& config,
                  const std::function<void(const TrainLogRow&)>& on_log) {
  if (dataset.empty()) throw std::invalid_argument("training set is empty");

  // Instance-level split into training and validation.
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  SplitMixStream rng(SplitMixStream::derive(config.seed, 0x5eed));
  {
    std::vector<std::size_t> shuffled = rng.sample<std::size_t>(order, order.size());
    order = std::move(shuffled);
  }
  std::size_t n_val = static_cast<std::size_t>(
      std::max(1L, round_half_even(config.validation_fraction * static_cast<double>(dataset.size()))));
  std::vector<std::size_t> val_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(std::min(n_val, order.size())));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(val_idx.size()), order.end());
  if (train_idx.empty()) train_idx = val_idx;
  std::sort(val_idx.begin(), val_idx.end());

  std::vector<PreparedNetwork> val_nets;
  std::vector<const InstanceRecord*> val_records;
  for (std::size_t i : val_idx) {
    val_nets.emplace_back(dataset[i].instance);
    val_records.push_back(&dataset[i]);
  }
  std::vector<PreparedNetwork> train_nets;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (train net, draw)
  for (std::size_t k = 0; k < train_idx.size(); ++k) {
    train_nets.emplace_back(dataset[train_idx[k]].instance);
    for (std::size_t d = 0; d < dataset[train_idx[k]].task_draws.size(); ++d) pairs.emplace_back(k, d);
  }
  if (pairs.empty()) throw std::invalid_argument("training set has no task draws");

  TrainResult result;
  result.best_validation = mean_objective(model, val_nets, val_records, config.evaluation);
  result.model = model;
  TrainLogRow first{0, 0.0, result.best_validation, 0};
  result.log.push_back(first);
  if (on_log) on_log(first);

  std::vector<std::pair<std::size_t, std::size_t>> schedule;
  std::size_t at = 0;
  int stall = 0;
  double window_sum = 0.0;
  long window_steps = 0;
  int skipped = 0;
  long step = 0;
  while (step < config.max_steps) {
    if (at == schedule.size()) {
      schedule = rng.sample<std::pair<std::size_t, std::size_t>>(pairs, pairs.size());
      at = 0;
    }
    auto [k, d] = schedule[at++];
    const InstanceRecord& rec = dataset[train_idx[k]];
    TrainStepResult r = train_step(model, train_nets[k], rec.task_draws[d], config.learning_rate,
                                   config.evaluation, config.max_gradient_norm);
    if (!r.updated && !rec.task_draws[d].empty()) {
      ++skipped;
      ++stall;
      std::clog << "step " << step + 1 << ": non-finite gradient, update skipped\n";
    }
    window_sum += r.objective;
    ++window_steps;
    ++step;

    if (step % config.eval_every == 0 || step == config.max_steps) {
      const double val = mean_objective(model, val_nets, val_records, config.evaluation);
      TrainLogRow row{step, window_sum / static_cast<double>(window_steps), val, skipped};
      result.log.push_back(row);
      if (on_log) on_log(row);
      window_sum = 0.0;
      window_steps = 0;
      skipped = 0;
      if (std::isfinite(val) && val < result.best_validation * (1.0 - config.min_improvement)) {
        result.best_validation = val;
        result.model = model;
        stall = 0;
      } else {
        ++stall;
      }
      if (stall >= config.patience) {
        result.stopped_early = true;
        break;
      }
    }
  }
  result.steps = step;
  return result;
}

void write_training_log(const std::filesystem::path& path, const std::vector<TrainLogRow>& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "step,train_objective,validation_objective,skipped_updates\n";
  out << std::setprecision(17);
  for (const TrainLogRow& r : log) {
    out << r.step << ',' << r.train_objective << ',' << r.validation_objective << ',' << r.skipped_updates << '\n';
  }
}

}  // namespace offloadnet
