#include "offloadnet/experiment.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace offloadnet {

using json = nlohmann::json;

TrainConfig ExperimentConfig::train_config() const {
  TrainConfig t;
  t.learning_rate = learning_rate;
  t.max_gradient_norm = max_gradient_norm;
  t.evaluation = evaluation();
  t.eval_every = eval_every;
  t.patience = patience;
  t.min_improvement = min_improvement;
  t.validation_fraction = validation_fraction;
  t.max_steps = max_steps;
  t.seed = seed;
  return t;
}

std::vector<int> parse_sizes(const std::string& text) {
  std::vector<int> sizes;
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      int v = std::stoi(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw std::invalid_argument("bad size list: " + text);
    }
  };
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) throw std::invalid_argument("size range must be start:stop:step");
    int lo = number(parts[0]), hi = number(parts[1]), step = number(parts[2]);
    if (step <= 0 || hi < lo) throw std::invalid_argument("bad size range: " + text);
    for (int s = lo; s <= hi; s += step) sizes.push_back(s);
  } else {
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ',');) sizes.push_back(number(p));
  }
  if (sizes.empty()) throw std::invalid_argument("empty size list");
  return sizes;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig c) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  try {
    json j = json::parse(in);
    if (j.contains("sizes")) c.sizes = j["sizes"].get<std::vector<int>>();
    c.train_count = j.value("train_count", c.train_count);
    c.test_count = j.value("test_count", c.test_count);
    c.task_draws = j.value("task_draws", c.task_draws);
    c.horizon = j.value("horizon", c.horizon);
    c.iterations = j.value("iterations", c.iterations);
    c.layers = j.value("layers", c.layers);
    c.hidden = j.value("hidden", c.hidden);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.max_gradient_norm = j.value("max_gradient_norm", c.max_gradient_norm);
    c.seed = j.value("seed", c.seed);
    if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();
    c.max_steps = j.value("max_steps", c.max_steps);
    c.eval_every = j.value("eval_every", c.eval_every);
    c.patience = j.value("patience", c.patience);
    c.min_improvement = j.value("min_improvement", c.min_improvement);
    c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
    if (j.contains("aggregation")) c.aggregation = parse_aggregation(j["aggregation"].get<std::string>());
  } catch (const json::exception& e) {
    throw std::runtime_error("invalid config " + path.string() + ": " + e.what());
  }
  return c;
}

DatasetPaths DatasetPaths::in(const std::filesystem::path& dir) {
  return {dir / "train.jsonl", dir / "test.jsonl", dir / "manifest.json"};
}

std::vector<InstanceRecord> generate_split(const ExperimentConfig& config, bool test_split) {
  const int count = test_split ? config.test_count : config.train_count;
  const std::uint64_t split_key = SplitMixStream::derive(config.seed, test_split ? 1 : 0);
  std::vector<InstanceRecord> out(static_cast<std::size_t>(count));
  const unsigned threads = std::max(1u, std::min<unsigned>(worker_count(), static_cast<unsigned>(count)));
  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next++; i < count; i = next++) {
      const int size = config.sizes[static_cast<std::size_t>(i) % config.sizes.size()];
      const std::uint64_t id = (test_split ? 1'000'000ULL : 0ULL) + static_cast<std::uint64_t>(i);
      out[static_cast<std::size_t>(i)] =
          generate_record(id, size, SplitMixStream::derive(split_key, static_cast<std::uint64_t>(i)),
                          config.task_draws);
    }
  };
  std::vector<std::jthread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  return out;
}

DatasetPaths generate_dataset(const ExperimentConfig& config) {
  std::filesystem::create_directories(config.out_dir);
  DatasetPaths paths = DatasetPaths::in(config.out_dir);
  write_instances(paths.train, generate_split(config, false));
  write_instances(paths.test, generate_split(config, true));
  write_manifest(paths.manifest, {config.sizes, config.train_count, config.test_count, config.task_draws, config.seed});
  return paths;
}

TrainingRun run_training(const ExperimentConfig& config, const std::filesystem::path& data_dir,
                         const std::optional<std::filesystem::path>& init_model,
                         const std::filesystem::path& model_path, const std::filesystem::path& log_path) {
  DatasetPaths paths = DatasetPaths::in(data_dir);
  if (!std::filesystem::exists(paths.train)) throw std::runtime_error("missing dataset " + paths.train.string());
  std::vector<InstanceRecord> train_set = read_instances(paths.train);
  Gcnn model = init_model ? load_model(*init_model)
                          : Gcnn(default_dims(config.layers, config.hidden), config.seed, config.aggregation);
  TrainingRun run;
  run.result = train(std::move(model), train_set, config.train_config());
  run.model_path = model_path;
  run.log_path = log_path;
  if (model_path.has_parent_path()) std::filesystem::create_directories(model_path.parent_path());
  save_model(model_path, run.result.model);
  write_training_log(log_path, run.result.log);
  return run;
}

// ---------------------------------------------------------------------------
// Evaluation

const char* to_string(PolicyTag p) {
  switch (p) {
    case PolicyTag::baseline: return "baseline";
    case PolicyTag::local: return "local";
    case PolicyTag::gnn: return "gnn";
  }
  return "?";
}

PolicyTag parse_policy(std::string_view text) {
  if (text == "baseline") return PolicyTag::baseline;
  if (text == "local") return PolicyTag::local;
  if (text == "gnn") return PolicyTag::gnn;
  throw std::invalid_argument("unknown policy: " + std::string(text));
}

int EvaluationRecord::congested_count() const {
  return static_cast<int>(std::count(congested.begin(), congested.end(), true));
}

double EvaluationRecord::congestion_ratio() const {
  return latencies.empty() ? 0.0 : static_cast<double>(congested_count()) / task_count();
}

unsigned worker_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("OFFLOADNET_THREADS")) {
    int cap = std::atoi(env);
    if (cap > 0) return std::min(hw, static_cast<unsigned>(cap));
  }
  return hw;
}

std::vector<EvaluationRecord> evaluate_records(const std::vector<InstanceRecord>& records,
                                               const std::vector<PolicyTag>& policies,
                                               const Gcnn* model, const EvaluationParams& params,
                                               unsigned threads) {
  for (PolicyTag p : policies) {
    if (p == PolicyTag::gnn && model == nullptr) throw std::invalid_argument("gnn policy needs a model");
  }
  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (std::size_t d = 0; d < records[i].task_draws.size(); ++d) jobs.emplace_back(i, d);
  }
  const std::size_t per_job = policies.size();
  std::vector<EvaluationRecord> out(jobs.size() * per_job);
  if (threads == 0) threads = worker_count();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, records.size()))));

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    std::size_t cached = records.size();
    std::optional<PreparedNetwork> net;
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      auto [i, d] = jobs[k];
      if (cached != i) {
        net.emplace(records[i].instance);
        cached = i;
      }
      const TaskSet& tasks = records[i].task_draws[d];
      for (std::size_t p = 0; p < per_job; ++p) {
        PolicyEvaluation ev;
        switch (policies[p]) {
          case PolicyTag::baseline:
            ev = evaluate_policy(*net, tasks, baseline_weights(net->ext), params);
            break;
          case PolicyTag::local:
            ev = evaluate_decision(*net, tasks, decide_local(net->ext, tasks), params);
            break;
          case PolicyTag::gnn:
            ev = evaluate_policy(*net, tasks, predict_weights(*model, *net, tasks, params).weights(), params);
            break;
        }
        EvaluationRecord& r = out[k * per_job + p];
        r.instance_id = records[i].instance.id;
        r.size = records[i].instance.node_count();
        r.draw = static_cast<int>(d);
        r.policy = policies[p];
        r.latencies.assign(ev.latency.data(), ev.latency.data() + ev.latency.size());
        r.congested = ev.congested;
        r.objective = ev.objective;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work);
    work();
  }
  std::stable_sort(out.begin(), out.end(), [](const EvaluationRecord& a, const EvaluationRecord& b) {
    if (a.instance_id != b.instance_id) return a.instance_id < b.instance_id;
    if (a.draw != b.draw) return a.draw < b.draw;
    return a.policy < b.policy;
  });
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw std::runtime_error("number formatting failed");
  return std::string(buf, end);
}

namespace {

constexpr const char* kResultsHeader =
    "instance_id,size,draw,policy,tasks,congested_tasks,objective,congestion_ratio,latencies,congested";

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) throw std::runtime_error("bad number: " + s);
  return v;
}

}  // namespace

void write_results(const std::filesystem::path& path, const std::vector<EvaluationRecord>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << kResultsHeader << '\n';
  for (const EvaluationRecord& r : rows) {
    out << r.instance_id << ',' << r.size << ',' << r.draw << ',' << to_string(r.policy) << ','
        << r.task_count() << ',' << r.congested_count() << ',' << format_double(r.objective) << ','
        << format_double(r.congestion_ratio()) << ',';
    for (std::size_t j = 0; j < r.latencies.size(); ++j) out << (j ? ";" : "") << format_double(r.latencies[j]);
    out << ',';
    for (std::size_t j = 0; j < r.congested.size(); ++j) out << (j ? ";" : "") << (r.congested[j] ? 1 : 0);
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<EvaluationRecord> read_results(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kResultsHeader) {
    throw std::runtime_error("results file has an unexpected header: " + path.string());
  }
  std::vector<EvaluationRecord> rows;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      auto f = split(line, ',');
      if (f.size() != 10) throw std::runtime_error("expected 10 fields");
      EvaluationRecord r;
      r.instance_id = std::stoull(f[0]);
      r.size = std::stoi(f[1]);
      r.draw = std::stoi(f[2]);
      r.policy = parse_policy(f[3]);
      const int tasks = std::stoi(f[4]);
      r.objective = parse_double(f[6]);
      if (tasks > 0) {
        for (const auto& s : split(f[8], ';')) r.latencies.push_back(parse_double(s));
        for (const auto& s : split(f[9], ';')) r.congested.push_back(s == "1");
      }
      if (r.task_count() != tasks || static_cast<int>(r.congested.size()) != tasks) {
        throw std::runtime_error("task count does not match per-task fields");
      }
      rows.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Aggregation

namespace {

// Linear interpolation between closest ranks.
double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

Report summarize(const std::vector<EvaluationRecord>& rows) {
  if (rows.empty()) throw std::invalid_argument("no evaluation rows");
  Report report;

  struct Acc {
    long pairs = 0, tasks = 0, congested = 0;
    double latency_sum = 0.0, objective_sum = 0.0;
    std::vector<double> ratios;
  };
  std::map<std::pair<int, PolicyTag>, Acc> acc;

  // Baseline latencies keyed by (instance, draw) for ratio pairing.
  std::map<std::pair<std::uint64_t, int>, const EvaluationRecord*> baseline;
  for (const EvaluationRecord& r : rows) {
    if (r.policy == PolicyTag::baseline) baseline[{r.instance_id, r.draw}] = &r;
  }
  struct RatioAcc {
    int size = 0;
    double sum = 0.0;
    long n = 0;
  };
  std::map<std::pair<std::uint64_t, PolicyTag>, RatioAcc> per_instance;

  for (const EvaluationRecord& r : rows) {
    for (int size : {r.size, 0}) {
      Acc& a = acc[{size, r.policy}];
      ++a.pairs;
      a.tasks += r.task_count();
      a.congested += r.congested_count();
      a.objective_sum += r.objective;
      for (double u : r.latencies) a.latency_sum += u;
    }
    auto it = baseline.find({r.instance_id, r.draw});
    if (it != baseline.end() && it->second->task_count() == r.task_count()) {
      RatioAcc& ra = per_instance[{r.instance_id, r.policy}];
      ra.size = r.size;
      for (int j = 0; j < r.task_count(); ++j) {
        ra.sum += r.latencies[j] / it->second->latencies[j];
        ++ra.n;
      }
    }
  }
  for (const auto& [key, ra] : per_instance) {
    if (ra.n == 0) continue;
    const double ratio = ra.sum / static_cast<double>(ra.n);
    report.ratios.push_back({key.first, ra.size, key.second, ratio});
    acc[{ra.size, key.second}].ratios.push_back(ratio);
    acc[{0, key.second}].ratios.push_back(ratio);
  }

  for (auto& [key, a] : acc) {
    PolicySummary s;
    s.size = key.first;
    s.policy = key.second;
    s.pairs = a.pairs;
    s.tasks = a.tasks;
    s.congested = a.congested;
    s.mean_objective = a.objective_sum / static_cast<double>(a.pairs);
    if (a.tasks > 0) {
      s.mean_latency = a.latency_sum / static_cast<double>(a.tasks);
      s.congestion = static_cast<double>(a.congested) / static_cast<double>(a.tasks);
      const double half = 1.96 * std::sqrt(s.congestion * (1.0 - s.congestion) / static_cast<double>(a.tasks));
      s.congestion_ci_low = std::max(0.0, s.congestion - half);
      s.congestion_ci_high = std::min(1.0, s.congestion + half);
    }
    if (!a.ratios.empty()) {
      std::sort(a.ratios.begin(), a.ratios.end());
      s.ratio_instances = static_cast<long>(a.ratios.size());
      double sum = 0.0;
      for (double v : a.ratios) sum += v;
      s.ratio_mean = sum / static_cast<double>(a.ratios.size());
      s.ratio_q1 = quantile(a.ratios, 0.25);
      s.ratio_median = quantile(a.ratios, 0.5);
      s.ratio_q3 = quantile(a.ratios, 0.75);
      const double iqr = s.ratio_q3 - s.ratio_q1;
      s.ratio_whisker_low = s.ratio_q1;
      s.ratio_whisker_high = s.ratio_q3;
      for (double v : a.ratios) {
        if (v >= s.ratio_q1 - 1.5 * iqr) s.ratio_whisker_low = std::min(s.ratio_whisker_low, v);
        if (v <= s.ratio_q3 + 1.5 * iqr) s.ratio_whisker_high = std::max(s.ratio_whisker_high, v);
      }
    }
    report.summaries.push_back(s);
  }
  // Per-size rows first, the all-sizes row (size 0) last.
  std::stable_sort(report.summaries.begin(), report.summaries.end(), [](const auto& x, const auto& y) {
    const int sx = x.size == 0 ? std::numeric_limits<int>::max() : x.size;
    const int sy = y.size == 0 ? std::numeric_limits<int>::max() : y.size;
    return sx != sy ? sx < sy : x.policy < y.policy;
  });
  return report;
}

const PolicySummary* find_summary(const Report& report, int size, PolicyTag policy) {
  for (const PolicySummary& s : report.summaries) {
    if (s.size == size && s.policy == policy) return &s;
  }
  return nullptr;
}

void write_summary(const std::filesystem::path& path, const Report& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "size,policy,pairs,tasks,congested_tasks,mean_latency,mean_objective,congestion_ratio,"
         "congestion_ci_low,congestion_ci_high,ratio_instances,ratio_mean,ratio_q1,ratio_median,ratio_q3,"
         "ratio_whisker_low,ratio_whisker_high\n";
  for (const PolicySummary& s : report.summaries) {
    out << (s.size == 0 ? std::string("all") : std::to_string(s.size)) << ',' << to_string(s.policy) << ','
        << s.pairs << ',' << s.tasks << ',' << s.congested << ',' << format_double(s.mean_latency) << ','
        << format_double(s.mean_objective) << ',' << format_double(s.congestion) << ','
        << format_double(s.congestion_ci_low) << ',' << format_double(s.congestion_ci_high) << ','
        << s.ratio_instances << ',' << format_double(s.ratio_mean) << ',' << format_double(s.ratio_q1) << ','
        << format_double(s.ratio_median) << ',' << format_double(s.ratio_q3) << ','
        << format_double(s.ratio_whisker_low) << ',' << format_double(s.ratio_whisker_high) << '\n';
  }
}

void write_ratios(const std::filesystem::path& path, const Report& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "instance_id,size,policy,latency_ratio\n";
  for (const InstanceRatio& r : report.ratios) {
    out << r.instance_id << ',' << r.size << ',' << to_string(r.policy) << ',' << format_double(r.ratio) << '\n';
  }
}

}  // namespace offloadnet
