#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fogsched/actor_learner.hpp"
#include "fogsched/cost_model.hpp"
#include "fogsched/env.hpp"
#include "fogsched/infra.hpp"
#include "fogsched/workload.hpp"

namespace fogsched {

// JSON experiment description; unknown keys are rejected. Relative paths are
// resolved against the directory of the config file.
//
// {
//   "infra": "infra.json",
//   "train_datasets": ["train.jsonl"], "eval_datasets": ["eval.jsonl"],
//   "weights": {"w1": 0.5, "w2": 0.5},
//   "agent": {"lr": 0.01, "gamma": 0.99, "rho_bar": 1, "c_bar": 1, "entropy_beta": 0.003,
//             "value_weight": 0.5, "reward_scale": 0.05, "n_steps": 50, "tbs": 8, "mbs": 64, "rbs": 256,
//             "mix_ratio": 0.5, "broker_count": 8, "dense_sizes": [128, 128],
//             "recurrent_sizes": [64, 64]},
//   "env": {"l_max": 50, "k_max": 8, "penalty": -1000},
//   "stop": {"max_updates": 300, "wall_clock_budget_s": 0},
//   "seed": 0, "eval_seed": 1,
//   "speedup_threshold": null, "speedup_window": 10,
//   "output_dir": "out"
// }
struct ExperimentConfig {
  std::filesystem::path infra_path;
  std::vector<std::filesystem::path> train_datasets;
  std::vector<std::filesystem::path> eval_datasets;
  Weights weights;
  AgentConfig agent;
  EnvConfig env;
  std::uint64_t eval_seed = 1;
  std::optional<double> speedup_threshold;
  std::size_t speedup_window = 10;
  std::filesystem::path output_dir = "out";
};

ExperimentConfig parse_experiment_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
// Throws ConfigError on overlapping train/eval lists, missing files or bad values.
void check_experiment_config(const ExperimentConfig& cfg);

struct TrainingOutcome {
  TrainingResult result;
  std::filesystem::path checkpoint_path;
  std::filesystem::path history_path;
};

// Loads infrastructure and training DAGs, trains, writes checkpoint.json and
// history.csv into the output directory.
TrainingOutcome run_training(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// evaluation

// Greedy-action rollout of `policy` on one DAG.
Placement rollout_argmax(const Params& policy, PlacementEnv& env, const Dag& dag);

struct SummaryStat {
  double mean = 0;
  double half_width = 0;  // 95% t-interval half width; nan for a single sample
  std::size_t n = 0;
};

// Mean and two-sided 95% Student-t confidence interval.
SummaryStat summarize(const std::vector<double>& xs);

struct DagResult {
  std::size_t dag_index = 0;
  AppCost cost;
  double decision_s = 0;   // wall time to produce the placement
  double local_seq_s = 0;  // sum over all tasks of cycles / IoT frequency
};

struct PolicySummary {
  std::string policy;
  SummaryStat time_s, energy_j, weighted;
  double mean_decision_s = 0;
  double pto = 0;
  std::vector<DagResult> per_dag;
};

struct DatasetReport {
  std::string dataset;
  std::vector<PolicySummary> policies;
};

struct SpeedupEntry {
  std::string label;
  std::optional<double> time_to_threshold_s;
  std::optional<double> speedup;
};

struct EvalReport {
  std::vector<DatasetReport> datasets;
  std::vector<HistoryRow> learning_curve;
  std::optional<double> speedup_threshold;
  std::vector<SpeedupEntry> speedups;
};

// Sequential execution time of every task on the IoT device.
double local_sequential_time(const Dag& dag, const Infrastructure& infra);

// Mean decision latency / mean sequential local time.
double compute_pto(const std::vector<double>& decision_s, const std::vector<double>& local_seq_s);

// Wall-clock time at which the `window`-update moving average of
// mean_episode_weighted first drops to `threshold` or below.
std::optional<double> time_to_threshold(const std::vector<HistoryRow>& history, double threshold, std::size_t window);

// SP = Time_R / Time_T per technique; the first entry is the reference itself.
std::vector<SpeedupEntry> compute_speedup(const std::vector<HistoryRow>& reference,
                                          const std::vector<std::pair<std::string, std::vector<HistoryRow>>>& techniques,
                                          double threshold, std::size_t window, const std::string& reference_label = "reference");

// Placement policies compared by run_eval, in report order.
inline const std::vector<std::string> kPolicyNames{"drl", "greedy", "random", "local"};

// Argmax policy (when `policy` is set) plus greedy, random and local-only
// baselines on every DAG of every dataset.
EvalReport run_eval(const Params* policy, const std::vector<DagDataset>& datasets,
                    std::shared_ptr<const Infrastructure> infra, const Weights& w, const EnvConfig& env_cfg,
                    std::uint64_t eval_seed, const std::vector<std::string>& policies = kPolicyNames);

// Writes eval_summary.csv, eval_per_dag.csv, learning_curve.csv (when the
// report has one), speedup.csv (when it has entries) and summary.txt.
void emit_report(const EvalReport& report, const std::filesystem::path& dir);

std::vector<HistoryRow> read_history_csv(const std::filesystem::path& path);

}  // namespace fogsched
