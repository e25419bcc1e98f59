#pragma once

// End-to-end experiment driver: dataset generation, training, paired policy
// evaluation, and per-size aggregation. Every file written here is a pure
// function of its inputs and the master seed.

#include "offloadnet/instance.hpp"
#include "offloadnet/training.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace offloadnet {

struct ExperimentConfig {
  std::vector<int> sizes{20, 30, 40, 50, 60, 70, 80, 90, 100, 110};
  int train_count = 2000;
  int test_count = 1000;
  int task_draws = 10;
  int horizon = 1000;  // T
  int iterations = 10; // K
  int layers = 5;      // L
  int hidden = 32;
  double learning_rate = 1e-6;
  double max_gradient_norm = 1e3;  // 0 disables clipping
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "out";
  long max_steps = 200000;
  int eval_every = 100;
  int patience = 10;
  double min_improvement = 0.001;
  double validation_fraction = 0.1;
  Aggregation aggregation = kDefaultAggregation;

  EvaluationParams evaluation() const { return {horizon, iterations}; }
  TrainConfig train_config() const;
};

/// Parses "20:110:10" (inclusive range) or "20,30,40".
std::vector<int> parse_sizes(const std::string& text);

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

struct DatasetPaths {
  std::filesystem::path train, test, manifest;
  static DatasetPaths in(const std::filesystem::path& dir);
};

std::vector<InstanceRecord> generate_split(const ExperimentConfig& config, bool test_split);

/// Writes train.jsonl, test.jsonl and manifest.json under config.out_dir.
DatasetPaths generate_dataset(const ExperimentConfig& config);

struct TrainingRun {
  TrainResult result;
  std::filesystem::path model_path, log_path;
};

TrainingRun run_training(const ExperimentConfig& config, const std::filesystem::path& data_dir,
                         const std::optional<std::filesystem::path>& init_model,
                         const std::filesystem::path& model_path, const std::filesystem::path& log_path);

enum class PolicyTag { baseline, local, gnn };
const char* to_string(PolicyTag p);
PolicyTag parse_policy(std::string_view text);

struct EvaluationRecord {
  std::uint64_t instance_id = 0;
  int size = 0;
  int draw = 0;
  PolicyTag policy = PolicyTag::baseline;
  std::vector<double> latencies;
  std::vector<bool> congested;
  double objective = 0.0;

  int task_count() const { return static_cast<int>(latencies.size()); }
  int congested_count() const;
  double congestion_ratio() const;
};

/// Number of evaluation workers: OFFLOADNET_THREADS if set, else hardware.
unsigned worker_count();

/// Paired evaluation: every policy sees the same (instance, draw) pairs.
/// Output is sorted by (instance id, draw, policy).
std::vector<EvaluationRecord> evaluate_records(const std::vector<InstanceRecord>& records,
                                               const std::vector<PolicyTag>& policies,
                                               const Gcnn* model, const EvaluationParams& params,
                                               unsigned threads = 0);

void write_results(const std::filesystem::path& path, const std::vector<EvaluationRecord>& rows);
std::vector<EvaluationRecord> read_results(const std::filesystem::path& path);

/// Aggregate of one policy at one network size (size 0 = all sizes).
struct PolicySummary {
  int size = 0;
  PolicyTag policy = PolicyTag::baseline;
  long pairs = 0;
  long tasks = 0;
  long congested = 0;
  double mean_latency = 0.0;    // over tasks
  double mean_objective = 0.0;  // over (instance, draw) pairs
  double congestion = 0.0;
  double congestion_ci_low = 0.0;
  double congestion_ci_high = 0.0;
  // Per-instance mean latency ratio against the baseline.
  long ratio_instances = 0;
  double ratio_mean = 0.0;
  double ratio_q1 = 0.0, ratio_median = 0.0, ratio_q3 = 0.0;
  double ratio_whisker_low = 0.0, ratio_whisker_high = 0.0;
};

struct InstanceRatio {
  std::uint64_t instance_id = 0;
  int size = 0;
  PolicyTag policy = PolicyTag::baseline;
  double ratio = 0.0;
};

struct Report {
  std::vector<PolicySummary> summaries;
  std::vector<InstanceRatio> ratios;
};

Report summarize(const std::vector<EvaluationRecord>& rows);

void write_summary(const std::filesystem::path& path, const Report& report);
void write_ratios(const std::filesystem::path& path, const Report& report);

const PolicySummary* find_summary(const Report& report, int size, PolicyTag policy);

/// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace offloadnet
