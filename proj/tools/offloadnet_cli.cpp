// offloadnet: generate datasets, train the link-weight GCNN, evaluate
// offloading policies and aggregate results.
//
//   offloadnet [--seed N] [--out DIR] [--config FILE] generate|train|eval|report [options]

#include "offloadnet/experiment.hpp"

#include "CLI11.hpp"

#include <iostream>

namespace fs = std::filesystem;
using namespace offloadnet;

namespace {

std::vector<PolicyTag> parse_policies(const std::string& text) {
  std::vector<PolicyTag> out;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ',');) out.push_back(parse_policy(p));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Congestion-aware task offloading simulator"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::string config_path;
  app.add_option("--seed", seed, "Master seed");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);

  // generate
  auto* gen = app.add_subcommand("generate", "Generate train/test instance files");
  std::optional<int> train_n, test_n, draws;
  std::string sizes_text;
  gen->add_option("--train", train_n, "Training instances");
  gen->add_option("--test", test_n, "Test instances");
  gen->add_option("--sizes", sizes_text, "Network sizes, start:stop:step or a comma list");
  gen->add_option("--draws", draws, "Task draws per instance");

  // train
  auto* tr = app.add_subcommand("train", "Train the GCNN on a generated dataset");
  std::string data_dir, model_path, log_path, init_path;
  std::optional<long> max_steps;
  std::optional<double> lr, clip;
  tr->add_option("--data", data_dir, "Dataset directory (default: --out)");
  tr->add_option("--model", model_path, "Model output (default: OUT/model.json)");
  tr->add_option("--log", log_path, "Training log CSV (default: OUT/train_log.csv)");
  tr->add_option("--init", init_path, "Resume from a saved model")->check(CLI::ExistingFile);
  tr->add_option("--max-steps", max_steps, "Upper bound on SGD steps");
  tr->add_option("--lr", lr, "Learning rate");
  tr->add_option("--clip", clip, "Gradient norm cap, 0 to disable");

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate policies on the test split");
  std::string eval_data, eval_model, results_path, policies_text = "baseline,local,gnn", split = "test";
  ev->add_option("--data", eval_data, "Dataset directory (default: --out)");
  ev->add_option("--model", eval_model, "Model file (required for gnn)");
  ev->add_option("--policies", policies_text, "Comma-separated policies")->capture_default_str();
  ev->add_option("--split", split, "train or test")->check(CLI::IsMember({"train", "test"}))->capture_default_str();
  ev->add_option("--results", results_path, "Results CSV (default: OUT/results.csv)");

  // report
  auto* rep = app.add_subcommand("report", "Aggregate a results CSV");
  std::string rep_results, summary_path, ratios_path;
  rep->add_option("--results", rep_results, "Results CSV (default: OUT/results.csv)");
  rep->add_option("--summary", summary_path, "Summary CSV (default: OUT/summary.csv)");
  rep->add_option("--ratios", ratios_path, "Per-instance ratio CSV (default: OUT/latency_ratios.csv)");

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig config;
    if (!config_path.empty()) config = load_config(config_path);
    if (seed) config.seed = *seed;
    if (out_dir) config.out_dir = *out_dir;
    const fs::path out = config.out_dir;

    if (gen->parsed()) {
      if (train_n) config.train_count = *train_n;
      if (test_n) config.test_count = *test_n;
      if (draws) config.task_draws = *draws;
      if (!sizes_text.empty()) config.sizes = parse_sizes(sizes_text);
      DatasetPaths p = generate_dataset(config);
      std::cout << "wrote " << p.train.string() << ", " << p.test.string() << ", " << p.manifest.string() << '\n';
    } else if (tr->parsed()) {
      if (max_steps) config.max_steps = *max_steps;
      if (lr) config.learning_rate = *lr;
      if (clip) config.max_gradient_norm = *clip;
      fs::path data = data_dir.empty() ? out : fs::path(data_dir);
      fs::path model = model_path.empty() ? out / "model.json" : fs::path(model_path);
      fs::path log = log_path.empty() ? out / "train_log.csv" : fs::path(log_path);
      std::optional<fs::path> init;
      if (!init_path.empty()) init = init_path;
      TrainingRun run = run_training(config, data, init, model, log);
      std::cout << "steps " << run.result.steps << (run.result.stopped_early ? " (early stop)" : "")
                << ", best validation objective " << run.result.best_validation << '\n'
                << "wrote " << model.string() << ", " << log.string() << '\n';
    } else if (ev->parsed()) {
      fs::path data = eval_data.empty() ? out : fs::path(eval_data);
      DatasetPaths p = DatasetPaths::in(data);
      std::vector<PolicyTag> policies = parse_policies(policies_text);
      std::optional<Gcnn> model;
      if (!eval_model.empty()) model = load_model(eval_model);
      std::vector<InstanceRecord> records = read_instances(split == "test" ? p.test : p.train);
      auto rows = evaluate_records(records, policies, model ? &*model : nullptr, config.evaluation());
      fs::path results = results_path.empty() ? out / "results.csv" : fs::path(results_path);
      if (results.has_parent_path()) fs::create_directories(results.parent_path());
      write_results(results, rows);
      std::cout << "wrote " << rows.size() << " rows to " << results.string() << '\n';
    } else if (rep->parsed()) {
      fs::path results = rep_results.empty() ? out / "results.csv" : fs::path(rep_results);
      Report report = summarize(read_results(results));
      fs::path summary = summary_path.empty() ? out / "summary.csv" : fs::path(summary_path);
      fs::path ratios = ratios_path.empty() ? out / "latency_ratios.csv" : fs::path(ratios_path);
      write_summary(summary, report);
      write_ratios(ratios, report);
      for (const PolicySummary& s : report.summaries) {
        if (s.size != 0) continue;
        std::cout << to_string(s.policy) << ": mean latency " << s.mean_latency << ", congestion "
                  << s.congestion << ", mean ratio vs baseline " << s.ratio_mean << '\n';
      }
      std::cout << "wrote " << summary.string() << ", " << ratios.string() << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
