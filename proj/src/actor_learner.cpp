#include "fogsched/actor_learner.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <thread>

#include "fogsched/error.hpp"
#include "fogsched/format.hpp"

namespace fogsched {

void check_config(const AgentConfig& c) {
  if (c.n_steps < 1) throw ConfigError("n_steps must be >= 1");
  if (c.tbs < 1) throw ConfigError("tbs must be >= 1");
  if (c.mbs < c.tbs) throw ConfigError("mbs must be >= tbs");
  if (!(c.mix_ratio > 0 && c.mix_ratio <= 1)) throw ConfigError("mix_ratio must lie in (0, 1]");
  if (c.broker_count < 1) throw ConfigError("broker_count must be >= 1");
  if (!(c.lr >= 0) || !std::isfinite(c.lr)) throw ConfigError("lr must be a finite non-negative number");
  if (!(c.loss.entropy_beta >= 0)) throw ConfigError("entropy beta must be >= 0");
  if (!(c.loss.value_weight >= 0)) throw ConfigError("value weight must be >= 0");
  if (!(c.reward_scale > 0) || !std::isfinite(c.reward_scale)) throw ConfigError("reward_scale must be a finite positive number");
  if (c.max_updates < 1 && !(c.wall_clock_budget_s > 0)) throw ConfigError("no stop condition: set max_updates");
  if (c.wall_clock_budget_s < 0) throw ConfigError("wall_clock_budget_s must be >= 0");
  check_config(c.vtrace);
}

NetConfig net_config(const AgentConfig& cfg, std::size_t input_dim, std::size_t action_count) {
  NetConfig n;
  n.input_dim = input_dim;
  n.dense_sizes = cfg.dense_sizes;
  n.recurrent_sizes = cfg.recurrent_sizes;
  n.action_count = action_count;
  n.init_seed = mix_seed(cfg.seed, 0);
  return n;
}

// ---------------------------------------------------------------------------

std::optional<Dag> AppQueue::pop() {
  if (items_.empty()) return std::nullopt;
  Dag d = std::move(items_.front());
  items_.pop_front();
  if (cyclic_) items_.push_back(d);
  return d;
}

BatchQueue::BatchQueue(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ < 1) throw ConfigError("BatchQueue: capacity must be >= 1");
}

bool BatchQueue::push(ExperienceBatch batch) {
  std::unique_lock lock(mu_);
  not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
  if (closed_) return false;
  items_.push_back(std::move(batch));
  ++pushed_;
  not_empty_.notify_one();
  return true;
}

std::optional<ExperienceBatch> BatchQueue::pop() {
  std::unique_lock lock(mu_);
  not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
  if (items_.empty()) return std::nullopt;
  ExperienceBatch b = std::move(items_.front());
  items_.pop_front();
  ++popped_;
  not_full_.notify_one();
  return b;
}

std::optional<ExperienceBatch> BatchQueue::try_pop() {
  std::lock_guard lock(mu_);
  if (items_.empty()) return std::nullopt;
  ExperienceBatch b = std::move(items_.front());
  items_.pop_front();
  ++popped_;
  not_full_.notify_one();
  return b;
}

void BatchQueue::close() {
  std::lock_guard lock(mu_);
  closed_ = true;
  not_empty_.notify_all();
  not_full_.notify_all();
}

std::size_t BatchQueue::size() const {
  std::lock_guard lock(mu_);
  return items_.size();
}
std::uint64_t BatchQueue::pushed() const {
  std::lock_guard lock(mu_);
  return pushed_;
}
std::uint64_t BatchQueue::popped() const {
  std::lock_guard lock(mu_);
  return popped_;
}

void SnapshotCell::publish(ParamsPtr p) {
  std::lock_guard lock(mu_);
  current_ = std::move(p);
}

ParamsPtr SnapshotCell::fetch() const {
  std::lock_guard lock(mu_);
  return current_;
}

// ---------------------------------------------------------------------------

Broker::Broker(std::size_t id, std::unique_ptr<PlacementEnv> env, AppQueue queue, std::uint64_t seed)
    : id_(id), env_(std::move(env)), queue_(std::move(queue)), rng_(seed) {
  if (!env_) throw ConfigError("Broker: no environment");
}

bool Broker::start_episode() {
  auto dag = queue_.pop();
  if (!dag) {
    state_.reset();
    return false;
  }
  state_ = env_->reset(*dag).flat();
  return true;
}

std::optional<ExperienceBatch> Broker::collect(const Params& policy, std::size_t n_steps) {
  if (!state_ && !start_episode()) return std::nullopt;
  if (!recurrent_) recurrent_ = RecurrentState<double>::zeros(policy.config);

  ExperienceBatch batch;
  batch.broker_id = id_;
  batch.sequence = sequence_;
  batch.policy_version = policy.version;
  batch.initial_recurrent = *recurrent_;
  batch.tuples.reserve(n_steps);

  for (std::size_t i = 0; i < n_steps; ++i) {
    auto out = forward_step(policy, *state_, *recurrent_);
    const auto action = sample_action(out.action_probs, rng_);
    auto step = env_->step(action);

    ExperienceTuple t;
    t.state = std::move(*state_);
    t.action = action;
    t.behavior_prob = out.action_probs(static_cast<Eigen::Index>(action));
    t.reward = step.reward;
    t.feasible = step.action_feasible;
    t.episode_done = step.episode_done;
    batch.tuples.push_back(std::move(t));
    recurrent_ = std::move(out.next_recurrent);

    if (step.episode_done) {
      batch.episodes.push_back({id_, env_->assignment().size(), env_->episode_cost()});
      ++episodes_;
      recurrent_ = RecurrentState<double>::zeros(policy.config);
      if (!start_episode() && i + 1 < n_steps) return std::nullopt;
    } else {
      state_ = step.state.flat();
    }
  }
  batch.bootstrap_state = state_ ? *state_ : Eigen::VectorXd::Zero(batch.tuples.back().state.size());
  ++sequence_;
  return batch;
}

void broker_run(Broker& broker, const SnapshotCell& cell, BatchQueue& sink, std::size_t n_steps) {
  for (;;) {
    const auto snapshot = cell.fetch();
    auto batch = broker.collect(*snapshot, n_steps);
    if (!batch || !sink.push(std::move(*batch))) return;
  }
}

// ---------------------------------------------------------------------------

void ReplayRing::push(BatchPtr b) {
  if (capacity_ == 0) return;
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(b));
}

std::size_t fresh_needed(std::size_t replay_size, std::size_t tbs, double mix_ratio) {
  const auto want_fresh = std::min(tbs, static_cast<std::size_t>(std::ceil(mix_ratio * static_cast<double>(tbs) - 1e-9)));
  const auto want_replay = tbs - want_fresh;
  return tbs - std::min(want_replay, replay_size);
}

std::optional<TrainBatch> build_train_batch(std::deque<BatchPtr>& master, const ReplayRing& replay, std::size_t tbs,
                                            double mix_ratio, SplitMix64& rng) {
  const auto fresh = fresh_needed(replay.size(), tbs, mix_ratio);
  if (master.size() < fresh) return std::nullopt;
  TrainBatch tb;
  tb.fresh = fresh;
  tb.replayed = tbs - fresh;
  for (std::size_t i = 0; i < fresh; ++i) {
    tb.batches.push_back(master.front());
    master.pop_front();
  }
  // Partial Fisher-Yates over ring indices.
  std::vector<std::size_t> idx(replay.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < tb.replayed; ++i) {
    const auto j = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(idx.size() - 1)));
    std::swap(idx[i], idx[j]);
    tb.batches.push_back(replay[idx[i]]);
  }
  return tb;
}

// ---------------------------------------------------------------------------

Learner::Learner(Params initial, const AgentConfig& cfg) : params_(std::move(initial)), cfg_(cfg) {
  check_config(cfg_);
}

UpdateStats Learner::optimize(const std::vector<BatchPtr>& batches) {
  if (batches.empty()) throw Error("Learner::optimize: empty training batch");
  const auto N = batches.front()->tuples.size();
  const auto B = static_cast<Eigen::Index>(batches.size());
  const auto in = static_cast<Eigen::Index>(params_.config.input_dim);
  for (const auto& b : batches)
    if (b->tuples.size() != N) throw Error("Learner::optimize: trajectories differ in length");

  // Step N is the bootstrap state; it contributes a value but no loss.
  const std::size_t T = N + 1;
  std::vector<MatrixX<double>> inputs(T, MatrixX<double>(in, B));
  std::vector<RowVectorX<double>> carry(T, RowVectorX<double>::Ones(B));
  auto initial = RecurrentState<double>::zeros(params_.config, B);
  for (Eigen::Index b = 0; b < B; ++b) {
    const auto& batch = *batches[static_cast<std::size_t>(b)];
    for (std::size_t l = 0; l < 2; ++l) {
      initial.h[l].col(b) = batch.initial_recurrent.h[l].col(0);
      initial.c[l].col(b) = batch.initial_recurrent.c[l].col(0);
    }
    for (std::size_t t = 0; t < N; ++t) {
      if (batch.tuples[t].state.size() != in) throw Error("Learner::optimize: state size does not match the network");
      inputs[t].col(b) = batch.tuples[t].state;
      if (t > 0 && batch.tuples[t - 1].episode_done) carry[t](b) = 0;
    }
    inputs[N].col(b) = batch.bootstrap_state;
    if (batch.tuples[N - 1].episode_done) carry[N](b) = 0;
  }

  const auto tape = unroll(params_, inputs, initial, carry);

  LossTargets<double> tg;
  tg.actions.assign(T, std::vector<int>(static_cast<std::size_t>(B), 0));
  tg.value_target.assign(T, RowVectorX<double>::Zero(B));
  tg.rho.assign(T, RowVectorX<double>::Zero(B));
  tg.pg_advantage.assign(T, RowVectorX<double>::Zero(B));
  tg.weight.assign(T, RowVectorX<double>::Ones(B));
  tg.weight[N].setZero();

  double rho_sum = 0;
  for (Eigen::Index b = 0; b < B; ++b) {
    const auto& batch = *batches[static_cast<std::size_t>(b)];
    const auto n = static_cast<Eigen::Index>(N);
    VectorX<double> pi(n), mu(n), rewards(n), values(n);
    std::vector<bool> dones(N);
    for (std::size_t t = 0; t < N; ++t) {
      const auto& tu = batch.tuples[t];
      const auto ti = static_cast<Eigen::Index>(t);
      pi(ti) = tape.steps[t].probs(static_cast<Eigen::Index>(tu.action), b);
      mu(ti) = tu.behavior_prob;
      rewards(ti) = cfg_.reward_scale * tu.reward;
      values(ti) = tape.steps[t].value(b);
      dones[t] = tu.episode_done;
      tg.actions[t][static_cast<std::size_t>(b)] = static_cast<int>(tu.action);
    }
    const auto [rho, c] = is_weights<double>(pi, mu, cfg_.vtrace);
    const auto vt = vtrace_targets<double>(rewards, values, tape.steps[N].value(b), rho, c, cfg_.vtrace, dones);
    for (std::size_t t = 0; t < N; ++t) {
      const auto ti = static_cast<Eigen::Index>(t);
      tg.value_target[t](b) = vt.targets(ti);
      tg.rho[t](b) = vt.rho(ti);
      tg.pg_advantage[t](b) = vt.pg_advantage(ti);
    }
    rho_sum += rho.sum();
  }

  std::vector<MatrixX<double>> d_logits;
  std::vector<RowVectorX<double>> d_value;
  LossTerms<double> terms;
  try {
    terms = actor_critic_loss(tape, tg, cfg_.loss, &d_logits, &d_value);
  } catch (const Error& e) {
    throw Error(std::string(e.what()) + " (policy version " + std::to_string(params_.version) + ", " +
                std::to_string(batches.size()) + " trajectories of " + std::to_string(N) + " steps, mean rho " +
                format_number(rho_sum / static_cast<double>(B * static_cast<Eigen::Index>(N))) + ")");
  }
  const auto grad = backward(params_, tape, d_logits, d_value);
  params_ = adam_step(params_, grad, cfg_.lr, adam_);

  UpdateStats s;
  s.loss_total = terms.total;
  s.loss_value = terms.value;
  s.loss_policy = terms.policy;
  s.entropy = terms.steps > 0 ? terms.entropy / terms.steps : 0.0;
  s.mean_rho = rho_sum / static_cast<double>(B * static_cast<Eigen::Index>(N));
  s.version = params_.version;
  return s;
}

// ---------------------------------------------------------------------------

void write_history_csv(std::ostream& out, const std::vector<HistoryRow>& rows) {
  out << kHistoryHeader << '\n';
  for (const auto& r : rows) {
    out << r.update_index << ',' << format_number(r.wall_clock_s) << ',' << format_number(r.mean_episode_time_s) << ','
        << format_number(r.mean_episode_energy_j) << ',' << format_number(r.mean_episode_weighted) << ','
        << format_number(r.loss_value) << ',' << format_number(r.loss_policy) << ',' << format_number(r.entropy) << ','
        << r.batches_fresh << ',' << r.batches_replayed << '\n';
  }
}

void write_history_csv(const std::string& path, const std::vector<HistoryRow>& rows) {
  std::ofstream f(path);
  if (!f) throw Error("cannot open " + path + " for writing");
  write_history_csv(f, rows);
  if (!f) throw Error("failed writing " + path);
}

LearnerRunResult learner_run(Learner& learner, LearnerBuffers& buffers, const BatchSource& source, SnapshotCell& cell,
                             SplitMix64& rng, const std::function<void(const HistoryRow&)>& on_update) {
  using clock = std::chrono::steady_clock;
  const auto& cfg = learner.config();
  const auto start = clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - start).count(); };

  LearnerRunResult res;
  AppCost last_mean{std::nan(""), std::nan(""), std::nan("")};
  while (res.history.size() < cfg.max_updates || cfg.max_updates == 0) {
    if (cfg.wall_clock_budget_s > 0 && elapsed() >= cfg.wall_clock_budget_s) break;

    std::vector<BatchPtr> arrived;
    auto take = [&](std::optional<ExperienceBatch> b) {
      auto p = std::make_shared<const ExperienceBatch>(std::move(*b));
      buffers.master.push_back(p);
      arrived.push_back(std::move(p));
      ++res.counters.received;
    };
    const auto need = fresh_needed(buffers.replay.size(), buffers.tbs, cfg.mix_ratio);
    while (buffers.master.size() < need) {
      auto b = source(true);
      if (!b) break;
      take(std::move(b));
    }
    if (buffers.master.size() < need) {
      res.data_exhausted = true;
      break;
    }
    while (buffers.master.size() < buffers.mbs) {
      auto b = source(false);
      if (!b) break;
      take(std::move(b));
    }

    auto tb = build_train_batch(buffers.master, buffers.replay, buffers.tbs, cfg.mix_ratio, rng);
    if (!tb) throw Error("learner_run: training batch could not be built");
    const auto stats = learner.optimize(tb->batches);
    cell.publish(std::make_shared<const Params>(learner.params()));
    res.counters.trained_fresh += tb->fresh;
    res.counters.trained_replayed += tb->replayed;

    for (std::size_t i = 0; i < tb->fresh; ++i) buffers.replay.push(tb->batches[i]);
    for (auto& b : buffers.master) buffers.replay.push(b);
    buffers.master.clear();

    AppCost sum;
    std::size_t episodes = 0;
    for (const auto& b : arrived)
      for (const auto& e : b->episodes) {
        sum.time_s += e.cost.time_s;
        sum.energy_j += e.cost.energy_j;
        sum.weighted += e.cost.weighted;
        ++episodes;
      }
    if (episodes > 0) {
      const auto n = static_cast<double>(episodes);
      last_mean = {sum.time_s / n, sum.energy_j / n, sum.weighted / n};
    }

    HistoryRow row;
    row.update_index = res.history.size() + 1;
    row.wall_clock_s = elapsed();
    row.mean_episode_time_s = last_mean.time_s;
    row.mean_episode_energy_j = last_mean.energy_j;
    row.mean_episode_weighted = last_mean.weighted;
    row.loss_value = stats.loss_value;
    row.loss_policy = stats.loss_policy;
    row.entropy = stats.entropy;
    row.batches_fresh = tb->fresh;
    row.batches_replayed = tb->replayed;
    res.history.push_back(row);
    if (on_update) on_update(row);
  }
  return res;
}

// ---------------------------------------------------------------------------

TrainingResult train(const AgentConfig& cfg, std::shared_ptr<const Infrastructure> infra, const Weights& weights,
                     const EnvConfig& env_cfg, const std::vector<Dag>& train_dags,
                     const std::function<void(const HistoryRow&)>& on_update) {
  check_config(cfg);
  if (!infra) throw ConfigError("train: no infrastructure");
  if (train_dags.size() < cfg.broker_count)
    throw ConfigError("train: " + std::to_string(train_dags.size()) + " training DAGs cannot feed " +
                      std::to_string(cfg.broker_count) + " brokers");

  const auto M = infra->size();
  auto initial = init_parameters<double>(net_config(cfg, feature_dim(M, env_cfg), M));
  SnapshotCell cell(std::make_shared<const Params>(initial));
  Learner learner(std::move(initial), cfg);

  std::vector<std::unique_ptr<Broker>> brokers;
  for (std::size_t b = 0; b < cfg.broker_count; ++b) {
    AppQueue q(true);
    for (std::size_t i = b; i < train_dags.size(); i += cfg.broker_count) q.push(train_dags[i]);
    brokers.push_back(std::make_unique<Broker>(b, std::make_unique<PlacementEnv>(infra, weights, env_cfg),
                                               std::move(q), mix_seed(cfg.seed, 1000 + b)));
  }

  LearnerBuffers buffers;
  buffers.mbs = cfg.mbs;
  buffers.tbs = cfg.tbs;
  buffers.replay = ReplayRing(cfg.rbs);
  SplitMix64 rng(mix_seed(cfg.seed, 1));

  TrainingResult out;
  LearnerRunResult run;
  if (cfg.broker_count == 1) {
    auto& broker = *brokers.front();
    BatchSource source = [&](bool block) -> std::optional<ExperienceBatch> {
      if (!block) return std::nullopt;
      auto b = broker.collect(*cell.fetch(), cfg.n_steps);
      if (b) ++out.batches_generated;
      return b;
    };
    run = learner_run(learner, buffers, source, cell, rng, on_update);
  } else {
    BatchQueue queue(cfg.mbs);
    std::vector<std::jthread> threads;
    for (auto& b : brokers) threads.emplace_back([&, br = b.get()] { broker_run(*br, cell, queue, cfg.n_steps); });
    BatchSource source = [&](bool block) { return block ? queue.pop() : queue.try_pop(); };
    try {
      run = learner_run(learner, buffers, source, cell, rng, on_update);
    } catch (...) {
      queue.close();
      throw;
    }
    queue.close();
    threads.clear();
    out.batches_generated = queue.pushed();
  }
  out.params = learner.params();
  out.history = std::move(run.history);
  out.counters = run.counters;
  return out;
}

}  // namespace fogsched
