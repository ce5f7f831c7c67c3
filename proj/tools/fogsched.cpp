// fogsched command line: dataset and infrastructure generation, training,
// evaluation, baselines and report emission.
//
// Exit codes: 0 success, 2 configuration error, 3 runtime failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fogsched/error.hpp"
#include "fogsched/metrics.hpp"
#include "fogsched/workload.hpp"

namespace fs = std::filesystem;
using namespace fogsched;

namespace {

struct Overrides {
  std::optional<double> lr, gamma, entropy_beta, reward_scale, mix_ratio, budget_s, w1;
  std::optional<std::size_t> brokers, max_updates, n_steps, tbs, rbs;
  std::optional<std::uint64_t> seed, eval_seed;
  std::optional<std::string> out_dir, infra;
  std::vector<std::string> datasets;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--lr", o.lr, "learning rate");
  cmd->add_option("--gamma", o.gamma, "discount factor");
  cmd->add_option("--entropy-beta", o.entropy_beta, "entropy coefficient");
  cmd->add_option("--reward-scale", o.reward_scale, "multiplier applied to rewards by the learner");
  cmd->add_option("--mix-ratio", o.mix_ratio, "fresh share of each training batch");
  cmd->add_option("--budget-s", o.budget_s, "wall-clock budget in seconds (0 = none)");
  cmd->add_option("--w1", o.w1, "time weight; w2 = 1 - w1");
  cmd->add_option("--brokers", o.brokers, "number of brokers");
  cmd->add_option("--max-updates", o.max_updates, "learner updates before stopping");
  cmd->add_option("--n-steps", o.n_steps, "steps per trajectory");
  cmd->add_option("--tbs", o.tbs, "trajectories per training batch");
  cmd->add_option("--rbs", o.rbs, "replay capacity (0 disables replay)");
  cmd->add_option("--seed", o.seed, "training seed");
  cmd->add_option("--eval-seed", o.eval_seed, "seed for the random baseline");
  cmd->add_option("--out-dir", o.out_dir, "output directory");
  cmd->add_option("--infra", o.infra, "infrastructure JSON");
}

void apply(const Overrides& o, ExperimentConfig& c) {
  if (o.lr) c.agent.lr = *o.lr;
  if (o.gamma) c.agent.vtrace.gamma = *o.gamma;
  if (o.entropy_beta) c.agent.loss.entropy_beta = *o.entropy_beta;
  if (o.reward_scale) c.agent.reward_scale = *o.reward_scale;
  if (o.mix_ratio) c.agent.mix_ratio = *o.mix_ratio;
  if (o.budget_s) c.agent.wall_clock_budget_s = *o.budget_s;
  if (o.w1) c.weights = {*o.w1, 1.0 - *o.w1};
  if (o.brokers) c.agent.broker_count = *o.brokers;
  if (o.max_updates) c.agent.max_updates = *o.max_updates;
  if (o.n_steps) c.agent.n_steps = *o.n_steps;
  if (o.tbs) c.agent.tbs = *o.tbs;
  if (o.rbs) c.agent.rbs = *o.rbs;
  if (o.seed) c.agent.seed = *o.seed;
  if (o.eval_seed) c.eval_seed = *o.eval_seed;
  if (o.out_dir) c.output_dir = *o.out_dir;
  if (o.infra) c.infra_path = *o.infra;
  if (!o.datasets.empty()) {
    c.eval_datasets.clear();
    for (const auto& d : o.datasets) c.eval_datasets.emplace_back(d);
  }
}

ExperimentConfig base_config(const std::string& config_path) {
  return config_path.empty() ? ExperimentConfig{} : load_experiment_config(config_path);
}

std::vector<DagDataset> load_eval_sets(const ExperimentConfig& c) {
  if (c.eval_datasets.empty()) throw ConfigError("no evaluation datasets given");
  std::vector<DagDataset> out;
  for (const auto& p : c.eval_datasets) out.push_back(load_dataset(p));
  return out;
}

std::shared_ptr<const Infrastructure> load_infra(const ExperimentConfig& c) {
  if (c.infra_path.empty()) throw ConfigError("no infrastructure given (--infra or config)");
  return std::make_shared<const Infrastructure>(load_infrastructure_file(c.infra_path.string()));
}

void print_summary(const EvalReport& r) {
  for (const auto& d : r.datasets) {
    std::cout << d.dataset << '\n';
    for (const auto& p : d.policies)
      std::cout << "  " << p.policy << " weighted " << p.weighted.mean << " +/- " << p.weighted.half_width << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Task placement for IoT applications in fog computing"};
  app.require_subcommand(1);

  // gen-dataset
  DagGenParams gp;
  std::size_t count = 100;
  std::string ds_out, ds_name;
  auto* gen_ds = app.add_subcommand("gen-dataset", "generate a layered DAG dataset (JSONL)");
  gen_ds->add_option("--L", gp.L, "tasks per DAG")->required();
  gen_ds->add_option("--fat", gp.fat, "width factor");
  gen_ds->add_option("--density", gp.density, "edge density");
  gen_ds->add_option("--count", count, "number of DAGs");
  gen_ds->add_option("--seed", gp.seed, "first instance seed");
  gen_ds->add_option("--name", ds_name, "dataset name");
  gen_ds->add_option("--out", ds_out, "output path")->required();

  // gen-infra
  int scale = 1;
  std::uint64_t net_seed = kDefaultNetworkSeed;
  std::string infra_out;
  bool explicit_links = false;
  auto* gen_infra = app.add_subcommand("gen-infra", "write the reference testbed as JSON");
  gen_infra->add_option("--scale", scale, "replication factor (1, 2 or 4)");
  gen_infra->add_option("--seed", net_seed, "network seed");
  gen_infra->add_option("--out", infra_out, "output path")->required();
  gen_infra->add_flag("--explicit", explicit_links, "write every link instead of the generator seed");

  // train
  std::string train_cfg;
  Overrides train_o;
  auto* train_cmd = app.add_subcommand("train", "train a placement policy");
  train_cmd->add_option("--config", train_cfg, "experiment config JSON")->required();
  add_overrides(train_cmd, train_o);

  // eval
  std::string eval_cfg, ckpt, history;
  Overrides eval_o;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint against the baselines");
  eval_cmd->add_option("--config", eval_cfg, "experiment config JSON");
  eval_cmd->add_option("--checkpoint", ckpt, "policy checkpoint")->required();
  eval_cmd->add_option("--datasets", eval_o.datasets, "evaluation datasets");
  eval_cmd->add_option("--history", history, "training history to include as learning curve");
  add_overrides(eval_cmd, eval_o);

  // baseline
  std::string base_cfg;
  std::vector<std::string> base_policies{"greedy", "random", "local"};
  Overrides base_o;
  auto* base_cmd = app.add_subcommand("baseline", "evaluate the non-learning policies");
  base_cmd->add_option("--config", base_cfg, "experiment config JSON");
  base_cmd->add_option("--datasets", base_o.datasets, "evaluation datasets");
  base_cmd->add_option("--policy", base_policies, "greedy, random and/or local");
  add_overrides(base_cmd, base_o);

  // report
  std::string rep_cfg, rep_ckpt, rep_reference;
  std::vector<std::string> rep_compare;
  std::optional<double> rep_threshold;
  std::optional<std::size_t> rep_window;
  Overrides rep_o;
  auto* rep_cmd = app.add_subcommand("report", "full report with learning curve and speedup");
  rep_cmd->add_option("--config", rep_cfg, "experiment config JSON");
  rep_cmd->add_option("--checkpoint", rep_ckpt, "policy checkpoint (default: <out-dir>/checkpoint.json)");
  rep_cmd->add_option("--datasets", rep_o.datasets, "evaluation datasets");
  rep_cmd->add_option("--reference", rep_reference, "history of the reference run (default: <out-dir>/history.csv)");
  rep_cmd->add_option("--compare", rep_compare, "label=history.csv of runs to compare");
  rep_cmd->add_option("--threshold", rep_threshold, "weighted-cost threshold for speedup");
  rep_cmd->add_option("--window", rep_window, "moving-average window for speedup");
  add_overrides(rep_cmd, rep_o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*gen_ds) {
      auto ds = generate_dataset(gp, count, ds_name);
      save_dataset(ds, ds_out);
      std::cout << "wrote " << ds.dags.size() << " DAGs (" << ds.name << ") to " << ds_out << '\n';
    } else if (*gen_infra) {
      const auto infra = scaled_testbed(scale, net_seed);
      std::ofstream f(infra_out);
      if (!f) throw Error("cannot open " + infra_out + " for writing");
      f << infrastructure_to_json(infra, explicit_links) << '\n';
      std::cout << "wrote " << infra.size() << " servers to " << infra_out << '\n';
    } else if (*train_cmd) {
      auto cfg = base_config(train_cfg);
      apply(train_o, cfg);
      const auto out = run_training(cfg);
      const auto& h = out.result.history;
      std::cout << "trained " << h.size() << " iterations";
      if (!h.empty()) std::cout << ", final mean weighted cost " << h.back().mean_episode_weighted;
      std::cout << "\ncheckpoint " << out.checkpoint_path.string() << "\nhistory " << out.history_path.string() << '\n';
    } else if (*eval_cmd) {
      auto cfg = base_config(eval_cfg);
      apply(eval_o, cfg);
      const auto params = load_checkpoint(ckpt);
      auto report = run_eval(&params, load_eval_sets(cfg), load_infra(cfg), cfg.weights, cfg.env, cfg.eval_seed);
      if (!history.empty()) report.learning_curve = read_history_csv(history);
      emit_report(report, cfg.output_dir);
      print_summary(report);
    } else if (*base_cmd) {
      auto cfg = base_config(base_cfg);
      apply(base_o, cfg);
      auto report = run_eval(nullptr, load_eval_sets(cfg), load_infra(cfg), cfg.weights, cfg.env, cfg.eval_seed,
                             base_policies);
      emit_report(report, cfg.output_dir);
      print_summary(report);
    } else if (*rep_cmd) {
      auto cfg = base_config(rep_cfg);
      apply(rep_o, cfg);
      if (rep_threshold) cfg.speedup_threshold = *rep_threshold;
      if (rep_window) cfg.speedup_window = *rep_window;
      const auto ckpt_path = rep_ckpt.empty() ? cfg.output_dir / "checkpoint.json" : fs::path(rep_ckpt);
      const auto ref_path = rep_reference.empty() ? cfg.output_dir / "history.csv" : fs::path(rep_reference);
      const auto params = load_checkpoint(ckpt_path.string());
      auto report = run_eval(&params, load_eval_sets(cfg), load_infra(cfg), cfg.weights, cfg.env, cfg.eval_seed);
      report.learning_curve = read_history_csv(ref_path);
      if (!rep_compare.empty() && !cfg.speedup_threshold)
        throw ConfigError("--compare needs a speedup threshold (--threshold or speedup_threshold in the config)");
      if (cfg.speedup_threshold) {
        std::vector<std::pair<std::string, std::vector<HistoryRow>>> others;
        for (const auto& spec : rep_compare) {
          const auto eq = spec.find('=');
          if (eq == std::string::npos || eq == 0) throw ConfigError("--compare expects label=path, got " + spec);
          others.emplace_back(spec.substr(0, eq), read_history_csv(spec.substr(eq + 1)));
        }
        report.speedup_threshold = cfg.speedup_threshold;
        report.speedups = compute_speedup(report.learning_curve, others, *cfg.speedup_threshold, cfg.speedup_window);
      }
      emit_report(report, cfg.output_dir);
      print_summary(report);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
