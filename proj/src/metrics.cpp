#include "fogsched/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include "fogsched/baselines.hpp"
#include "fogsched/error.hpp"
#include "fogsched/format.hpp"

namespace fogsched {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <typename T>
void read_opt(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("experiment config: ") + e.what());
  }
  reject_unknown(j,
                 {"infra", "train_datasets", "eval_datasets", "weights", "agent", "env", "stop", "seed", "eval_seed",
                  "speedup_threshold", "speedup_window", "output_dir"},
                 "config");
  ExperimentConfig c;
  std::string s;
  read_opt(j, "infra", s, "config");
  if (!s.empty()) c.infra_path = resolve(base_dir, s);
  std::vector<std::string> list;
  read_opt(j, "train_datasets", list, "config");
  for (const auto& p : list) c.train_datasets.push_back(resolve(base_dir, p));
  list.clear();
  read_opt(j, "eval_datasets", list, "config");
  for (const auto& p : list) c.eval_datasets.push_back(resolve(base_dir, p));

  if (j.contains("weights")) {
    const auto& w = j["weights"];
    reject_unknown(w, {"w1", "w2"}, "weights");
    read_opt(w, "w1", c.weights.w1, "weights");
    read_opt(w, "w2", c.weights.w2, "weights");
  }
  if (j.contains("agent")) {
    const auto& a = j["agent"];
    reject_unknown(a,
                   {"lr", "gamma", "rho_bar", "c_bar", "entropy_beta", "value_weight", "reward_scale", "n_steps", "tbs", "mbs",
                    "rbs", "mix_ratio", "broker_count", "dense_sizes", "recurrent_sizes"},
                   "agent");
    auto& g = c.agent;
    read_opt(a, "lr", g.lr, "agent");
    read_opt(a, "gamma", g.vtrace.gamma, "agent");
    read_opt(a, "rho_bar", g.vtrace.rho_bar, "agent");
    read_opt(a, "c_bar", g.vtrace.c_bar, "agent");
    read_opt(a, "entropy_beta", g.loss.entropy_beta, "agent");
    read_opt(a, "value_weight", g.loss.value_weight, "agent");
    read_opt(a, "reward_scale", g.reward_scale, "agent");
    read_opt(a, "n_steps", g.n_steps, "agent");
    read_opt(a, "tbs", g.tbs, "agent");
    read_opt(a, "mbs", g.mbs, "agent");
    read_opt(a, "rbs", g.rbs, "agent");
    read_opt(a, "mix_ratio", g.mix_ratio, "agent");
    read_opt(a, "broker_count", g.broker_count, "agent");
    read_opt(a, "dense_sizes", g.dense_sizes, "agent");
    read_opt(a, "recurrent_sizes", g.recurrent_sizes, "agent");
  }
  if (j.contains("env")) {
    const auto& e = j["env"];
    reject_unknown(e, {"l_max", "k_max", "penalty"}, "env");
    read_opt(e, "l_max", c.env.l_max, "env");
    read_opt(e, "k_max", c.env.k_max, "env");
    read_opt(e, "penalty", c.env.penalty, "env");
  }
  if (j.contains("stop")) {
    const auto& st = j["stop"];
    reject_unknown(st, {"max_updates", "wall_clock_budget_s"}, "stop");
    read_opt(st, "max_updates", c.agent.max_updates, "stop");
    read_opt(st, "wall_clock_budget_s", c.agent.wall_clock_budget_s, "stop");
  }
  read_opt(j, "seed", c.agent.seed, "config");
  read_opt(j, "eval_seed", c.eval_seed, "config");
  if (j.contains("speedup_threshold") && !j["speedup_threshold"].is_null()) {
    double t = 0;
    read_opt(j, "speedup_threshold", t, "config");
    c.speedup_threshold = t;
  }
  read_opt(j, "speedup_window", c.speedup_window, "config");
  s.clear();
  read_opt(j, "output_dir", s, "config");
  if (!s.empty()) c.output_dir = resolve(base_dir, s);
  return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_experiment_config(ss.str(), path.parent_path());
}

void check_experiment_config(const ExperimentConfig& c) {
  check_weights(c.weights);
  check_config(c.agent);
  if (c.speedup_window < 1) throw ConfigError("speedup_window must be >= 1");
  if (c.infra_path.empty()) throw ConfigError("config: infra path missing");
  if (!fs::exists(c.infra_path)) throw ConfigError("infra file not found: " + c.infra_path.string());
  std::set<fs::path> train;
  for (const auto& p : c.train_datasets) {
    if (!fs::exists(p)) throw ConfigError("train dataset not found: " + p.string());
    train.insert(fs::weakly_canonical(p));
  }
  for (const auto& p : c.eval_datasets) {
    if (!fs::exists(p)) throw ConfigError("eval dataset not found: " + p.string());
    if (train.count(fs::weakly_canonical(p))) throw ConfigError("dataset used for both training and evaluation: " + p.string());
  }
}

TrainingOutcome run_training(const ExperimentConfig& cfg) {
  check_experiment_config(cfg);
  if (cfg.train_datasets.empty()) throw ConfigError("config: no training datasets");
  auto infra = std::make_shared<const Infrastructure>(load_infrastructure_file(cfg.infra_path.string()));
  std::vector<Dag> dags;
  for (const auto& p : cfg.train_datasets) {
    auto ds = load_dataset(p);
    for (auto& d : ds.dags) dags.push_back(std::move(d));
  }
  TrainingOutcome out;
  out.result = train(cfg.agent, infra, cfg.weights, cfg.env, dags);
  fs::create_directories(cfg.output_dir);
  out.checkpoint_path = cfg.output_dir / "checkpoint.json";
  out.history_path = cfg.output_dir / "history.csv";
  save_checkpoint(out.result.params, out.checkpoint_path.string());
  write_history_csv(out.history_path.string(), out.result.history);
  return out;
}

// ---------------------------------------------------------------------------

Placement rollout_argmax(const Params& policy, PlacementEnv& env, const Dag& dag) {
  check_compatible(policy, env.feature_size(), env.action_count());
  auto x = env.reset(dag).flat();
  auto h = RecurrentState<double>::zeros(policy.config);
  while (!env.done()) {
    auto out = forward_step(policy, x, h);
    auto step = env.step(argmax_action(out.action_probs));
    h = std::move(out.next_recurrent);
    x = step.state.flat();
  }
  return env.episode_placement();
}

SummaryStat summarize(const std::vector<double>& xs) {
  SummaryStat s;
  s.n = xs.size();
  if (xs.empty()) throw Error("summarize: no samples");
  double sum = 0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n < 2) {
    s.half_width = std::nan("");
    return s;
  }
  double ss = 0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  const double sd = std::sqrt(ss / static_cast<double>(s.n - 1));
  boost::math::students_t dist(static_cast<double>(s.n - 1));
  s.half_width = boost::math::quantile(boost::math::complement(dist, 0.025)) * sd / std::sqrt(static_cast<double>(s.n));
  return s;
}

double local_sequential_time(const Dag& dag, const Infrastructure& infra) {
  const auto& iot = infra.servers[infra.iot_ordinal()];
  double t = 0;
  for (const auto& task : dag.tasks()) t += proc_time(task, iot);
  return t;
}

double compute_pto(const std::vector<double>& decision_s, const std::vector<double>& local_seq_s) {
  if (decision_s.empty() || local_seq_s.empty()) throw Error("compute_pto: no evaluated applications");
  double d = 0, l = 0;
  for (double x : decision_s) d += x;
  for (double x : local_seq_s) l += x;
  d /= static_cast<double>(decision_s.size());
  l /= static_cast<double>(local_seq_s.size());
  if (!(l > 0)) throw Error("compute_pto: local execution time is zero");
  return d / l;
}

std::optional<double> time_to_threshold(const std::vector<HistoryRow>& history, double threshold, std::size_t window) {
  if (window < 1) throw ConfigError("time_to_threshold: window must be >= 1");
  // Rows without a finished episode carry no estimate and are skipped.
  std::deque<double> win;
  double sum = 0;
  for (const auto& row : history) {
    if (std::isnan(row.mean_episode_weighted)) continue;
    win.push_back(row.mean_episode_weighted);
    sum += win.back();
    if (win.size() > window) {
      sum -= win.front();
      win.pop_front();
    }
    if (sum / static_cast<double>(win.size()) <= threshold) return row.wall_clock_s;
  }
  return std::nullopt;
}

std::vector<SpeedupEntry> compute_speedup(const std::vector<HistoryRow>& reference,
                                          const std::vector<std::pair<std::string, std::vector<HistoryRow>>>& techniques,
                                          double threshold, std::size_t window, const std::string& reference_label) {
  std::vector<SpeedupEntry> out;
  const auto t_ref = time_to_threshold(reference, threshold, window);
  auto entry = [&](const std::string& label, const std::optional<double>& t) {
    SpeedupEntry e{label, t, std::nullopt};
    if (t_ref && t && *t > 0) e.speedup = *t_ref / *t;
    return e;
  };
  out.push_back(entry(reference_label, t_ref));
  for (const auto& [label, h] : techniques) out.push_back(entry(label, time_to_threshold(h, threshold, window)));
  return out;
}

EvalReport run_eval(const Params* policy, const std::vector<DagDataset>& datasets, std::shared_ptr<const Infrastructure> infra,
                    const Weights& w, const EnvConfig& env_cfg, std::uint64_t eval_seed,
                    const std::vector<std::string>& policies) {
  if (!infra) throw ConfigError("run_eval: no infrastructure");
  if (datasets.empty()) throw ConfigError("run_eval: no datasets");
  for (const auto& p : policies) {
    if (std::find(kPolicyNames.begin(), kPolicyNames.end(), p) == kPolicyNames.end())
      throw ConfigError("run_eval: unknown policy '" + p + "'");
    if (p == "drl" && !policy) throw ConfigError("run_eval: the drl policy needs a checkpoint");
  }
  PlacementEnv env(infra, w, env_cfg);
  if (policy) check_compatible(*policy, env.feature_size(), env.action_count());

  EvalReport report;
  for (std::size_t di = 0; di < datasets.size(); ++di) {
    const auto& ds = datasets[di];
    if (ds.dags.empty()) throw ConfigError("run_eval: dataset " + ds.name + " is empty");
    DatasetReport dr;
    dr.dataset = ds.name;
    for (const auto& name : policies) {
      PolicySummary ps;
      ps.policy = name;
      SplitMix64 rng(mix_seed(eval_seed, di));
      std::vector<double> t, e, wt, dec, loc;
      for (std::size_t k = 0; k < ds.dags.size(); ++k) {
        const auto& dag = ds.dags[k];
        const auto t0 = std::chrono::steady_clock::now();
        Placement p;
        if (name == "drl") p = rollout_argmax(*policy, env, dag);
        else if (name == "greedy") p = greedy_place(dag, *infra, w);
        else if (name == "random") p = random_place(dag, *infra, w, rng);
        else p = local_only(dag, *infra, w);
        const double elapsed = seconds_since(t0);
        DagResult r{k, p.totals, elapsed, local_sequential_time(dag, *infra)};
        t.push_back(r.cost.time_s);
        e.push_back(r.cost.energy_j);
        wt.push_back(r.cost.weighted);
        dec.push_back(r.decision_s);
        loc.push_back(r.local_seq_s);
        ps.per_dag.push_back(r);
      }
      ps.time_s = summarize(t);
      ps.energy_j = summarize(e);
      ps.weighted = summarize(wt);
      ps.mean_decision_s = summarize(dec).mean;
      ps.pto = compute_pto(dec, loc);
      dr.policies.push_back(std::move(ps));
    }
    report.datasets.push_back(std::move(dr));
  }
  return report;
}

// ---------------------------------------------------------------------------

void emit_report(const EvalReport& report, const fs::path& dir) {
  if (report.datasets.empty()) throw Error("emit_report: empty evaluation set");
  for (const auto& d : report.datasets)
    if (d.policies.empty()) throw Error("emit_report: dataset " + d.dataset + " has no policy results");
  fs::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name);
    if (!f) throw Error("cannot open " + (dir / name).string() + " for writing");
    return f;
  };
  const auto& N = format_number;

  {
    auto f = open("eval_summary.csv");
    f << "dataset,policy,n,time_s_mean,time_s_ci95,energy_j_mean,energy_j_ci95,weighted_mean,weighted_ci95,"
         "decision_s_mean,pto\n";
    for (const auto& d : report.datasets)
      for (const auto& p : d.policies)
        f << d.dataset << ',' << p.policy << ',' << p.weighted.n << ',' << N(p.time_s.mean) << ','
          << N(p.time_s.half_width) << ',' << N(p.energy_j.mean) << ',' << N(p.energy_j.half_width) << ','
          << N(p.weighted.mean) << ',' << N(p.weighted.half_width) << ',' << N(p.mean_decision_s) << ','
          << N(p.pto) << '\n';
  }
  {
    auto f = open("eval_per_dag.csv");
    f << "dataset,policy,dag_index,time_s,energy_j,weighted,decision_s,local_sequential_s\n";
    for (const auto& d : report.datasets)
      for (const auto& p : d.policies)
        for (const auto& r : p.per_dag)
          f << d.dataset << ',' << p.policy << ',' << r.dag_index << ',' << N(r.cost.time_s) << ','
            << N(r.cost.energy_j) << ',' << N(r.cost.weighted) << ',' << N(r.decision_s) << ','
            << N(r.local_seq_s) << '\n';
  }
  if (!report.learning_curve.empty()) {
    auto f = open("learning_curve.csv");
    write_history_csv(f, report.learning_curve);
  }
  if (!report.speedups.empty()) {
    auto f = open("speedup.csv");
    f << "label,threshold,time_to_threshold_s,speedup\n";
    for (const auto& s : report.speedups)
      f << s.label << ',' << (report.speedup_threshold ? N(*report.speedup_threshold) : "") << ','
        << (s.time_to_threshold_s ? N(*s.time_to_threshold_s) : "unreachable") << ','
        << (s.speedup ? N(*s.speedup) : "undefined") << '\n';
  }
  {
    auto f = open("summary.txt");
    f << "Evaluation summary\n"
      << "One iteration is one learner optimize-and-publish cycle.\n"
      << "Costs are critical-path totals: time in seconds, energy in joules, weighted cost unitless.\n"
      << "Intervals are 95% Student-t confidence intervals over per-DAG costs.\n";
    for (const auto& d : report.datasets) {
      f << "\ndataset " << d.dataset << " (" << d.policies.front().weighted.n << " DAGs)\n";
      for (const auto& p : d.policies)
        f << "  " << p.policy << ": weighted " << N(p.weighted.mean) << " +/- " << N(p.weighted.half_width)
          << ", time_s " << N(p.time_s.mean) << " +/- " << N(p.time_s.half_width) << ", energy_j "
          << N(p.energy_j.mean) << " +/- " << N(p.energy_j.half_width) << ", pto " << N(p.pto) << '\n';
    }
    if (!report.learning_curve.empty()) {
      const auto& last = report.learning_curve.back();
      f << "\ntraining: " << last.update_index << " iterations, final mean weighted cost "
        << N(last.mean_episode_weighted) << '\n';
    }
    if (!report.speedups.empty()) {
      f << "\nspeedup (threshold " << (report.speedup_threshold ? N(*report.speedup_threshold) : "unset") << ")\n";
      for (const auto& s : report.speedups)
        f << "  " << s.label << ": "
          << (s.time_to_threshold_s ? N(*s.time_to_threshold_s) + " s" : std::string("threshold not reached"))
          << ", SP " << (s.speedup ? N(*s.speedup) : std::string("undefined")) << '\n';
    }
  }
}

std::vector<HistoryRow> read_history_csv(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open history " + path.string());
  std::string line;
  if (!std::getline(f, line) || line != kHistoryHeader)
    throw ParseError(path.string() + ": missing or unexpected header");
  std::vector<HistoryRow> rows;
  std::size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 10) throw ParseError(path.string() + " line " + std::to_string(lineno) + ": expected 10 columns");
    try {
      HistoryRow r;
      r.update_index = std::stoull(cells[0]);
      r.wall_clock_s = std::stod(cells[1]);
      r.mean_episode_time_s = std::stod(cells[2]);
      r.mean_episode_energy_j = std::stod(cells[3]);
      r.mean_episode_weighted = std::stod(cells[4]);
      r.loss_value = std::stod(cells[5]);
      r.loss_policy = std::stod(cells[6]);
      r.entropy = std::stod(cells[7]);
      r.batches_fresh = std::stoull(cells[8]);
      r.batches_replayed = std::stoull(cells[9]);
      rows.push_back(r);
    } catch (const std::exception&) {
      throw ParseError(path.string() + " line " + std::to_string(lineno) + ": malformed number");
    }
  }
  return rows;
}

}  // namespace fogsched
