#pragma once

// Brokers (actors) generate fixed-length experience trajectories with a
// snapshot of the policy; a single learner trains on them with V-trace
// corrections and publishes new snapshots. Brokers and learner talk only
// through a bounded batch queue and a snapshot cell.

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fogsched/cost_model.hpp"
#include "fogsched/dag.hpp"
#include "fogsched/env.hpp"
#include "fogsched/policy_net.hpp"
#include "fogsched/rng.hpp"
#include "fogsched/vtrace.hpp"

namespace fogsched {

using Params = PolicyParameters<double>;
using ParamsPtr = std::shared_ptr<const Params>;

struct ExperienceTuple {
  Eigen::VectorXd state;
  std::size_t action = 0;
  double behavior_prob = 1;
  double reward = 0;
  bool feasible = true;
  bool episode_done = false;
};

// An application finished inside a trajectory.
struct EpisodeRecord {
  std::size_t broker_id = 0;
  std::size_t task_count = 0;
  AppCost cost;
};

struct ExperienceBatch {
  std::size_t broker_id = 0;
  std::uint64_t sequence = 0;  // per-broker batch counter
  std::uint64_t policy_version = 0;
  std::vector<ExperienceTuple> tuples;
  RecurrentState<double> initial_recurrent;
  Eigen::VectorXd bootstrap_state;
  std::vector<EpisodeRecord> episodes;
};

using BatchPtr = std::shared_ptr<const ExperienceBatch>;

struct AgentConfig {
  std::size_t n_steps = 50;  // N, tuples per batch
  std::size_t tbs = 8;       // batches per training batch
  std::size_t mbs = 64;      // master buffer capacity
  std::size_t rbs = 256;     // replay buffer capacity, 0 disables replay
  double mix_ratio = 0.5;    // fresh share of a training batch
  std::size_t broker_count = 8;
  double lr = 0.01;
  double reward_scale = 0.05;  // learner-side multiplier on rewards before V-trace
  VTraceConfig vtrace;
  LossCoefficients loss{0.5, 0.003};
  std::array<std::size_t, 2> dense_sizes{128, 128};
  std::array<std::size_t, 2> recurrent_sizes{64, 64};
  std::uint64_t seed = 0;
  std::size_t max_updates = 300;
  double wall_clock_budget_s = 0;  // 0 = unlimited
};

void check_config(const AgentConfig& cfg);

// ---------------------------------------------------------------------------
// application queue

// FIFO of placement requests. A cyclic queue re-appends every popped DAG, so
// a finite dataset becomes an endless request stream in a fixed order.
class AppQueue {
 public:
  explicit AppQueue(bool cyclic = false) : cyclic_(cyclic) {}
  void push(Dag dag) { items_.push_back(std::move(dag)); }
  std::optional<Dag> pop();
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }

 private:
  std::deque<Dag> items_;
  bool cyclic_;
};

// ---------------------------------------------------------------------------
// broker <-> learner channels

// Bounded many-producer single-consumer FIFO. push blocks while full and
// returns false once the queue is closed.
class BatchQueue {
 public:
  explicit BatchQueue(std::size_t capacity);

  bool push(ExperienceBatch batch);
  std::optional<ExperienceBatch> pop();  // blocks; nullopt once closed and drained
  std::optional<ExperienceBatch> try_pop();
  void close();

  std::size_t size() const;
  std::uint64_t pushed() const;
  std::uint64_t popped() const;

 private:
  mutable std::mutex mu_;
  std::condition_variable not_empty_, not_full_;
  std::deque<ExperienceBatch> items_;
  std::size_t capacity_;
  bool closed_ = false;
  std::uint64_t pushed_ = 0, popped_ = 0;
};

// Latest published parameters. Snapshots are immutable, so readers never see
// a partial update.
class SnapshotCell {
 public:
  explicit SnapshotCell(ParamsPtr initial) : current_(std::move(initial)) {}
  void publish(ParamsPtr p);
  ParamsPtr fetch() const;

 private:
  mutable std::mutex mu_;
  ParamsPtr current_;
};

// ---------------------------------------------------------------------------
// broker

class Broker {
 public:
  Broker(std::size_t id, std::unique_ptr<PlacementEnv> env, AppQueue queue, std::uint64_t seed);

  // Runs N steps under one policy snapshot. nullopt when the application queue
  // runs dry before the trajectory is complete (the partial trajectory is dropped).
  std::optional<ExperienceBatch> collect(const Params& policy, std::size_t n_steps);

  std::size_t id() const { return id_; }
  std::uint64_t episodes_finished() const { return episodes_; }

 private:
  bool start_episode();

  std::size_t id_;
  std::unique_ptr<PlacementEnv> env_;
  AppQueue queue_;
  SplitMix64 rng_;
  std::optional<Eigen::VectorXd> state_;
  std::optional<RecurrentState<double>> recurrent_;
  std::uint64_t sequence_ = 0;
  std::uint64_t episodes_ = 0;
};

// Fetch a snapshot, collect, ship; repeats until the queue closes or the
// application queue is exhausted.
void broker_run(Broker& broker, const SnapshotCell& cell, BatchQueue& sink, std::size_t n_steps);

// ---------------------------------------------------------------------------
// learner buffers

class ReplayRing {
 public:
  explicit ReplayRing(std::size_t capacity) : capacity_(capacity) {}
  void push(BatchPtr b);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const BatchPtr& operator[](std::size_t i) const { return items_[i]; }

 private:
  std::deque<BatchPtr> items_;
  std::size_t capacity_;
};

struct LearnerBuffers {
  std::deque<BatchPtr> master;
  std::size_t mbs = 64;
  ReplayRing replay{256};
  std::size_t tbs = 8;
};

struct TrainBatch {
  std::vector<BatchPtr> batches;
  std::size_t fresh = 0;
  std::size_t replayed = 0;
};

// ceil(mix_ratio * TBS) fresh batches from the front of the master buffer and
// the rest sampled uniformly without replacement from the replay ring. A short
// ring is topped up from the master buffer. Fresh batches are removed from
// `master`; nullopt (nothing removed) when the two buffers cannot fill TBS.
std::optional<TrainBatch> build_train_batch(std::deque<BatchPtr>& master, const ReplayRing& replay, std::size_t tbs,
                                            double mix_ratio, SplitMix64& rng);

// Fresh batches needed before build_train_batch can succeed.
std::size_t fresh_needed(std::size_t replay_size, std::size_t tbs, double mix_ratio);

// ---------------------------------------------------------------------------
// learner

struct UpdateStats {
  double loss_total = 0;
  double loss_value = 0;
  double loss_policy = 0;
  double entropy = 0;  // mean per step
  double mean_rho = 0;
  std::uint64_t version = 0;
};

class Learner {
 public:
  Learner(Params initial, const AgentConfig& cfg);

  // Re-forwards every trajectory under the current parameters, computes
  // V-trace targets and applies one Adam step.
  UpdateStats optimize(const std::vector<BatchPtr>& batches);

  const Params& params() const { return params_; }
  const AgentConfig& config() const { return cfg_; }

 private:
  Params params_;
  AdamState<double> adam_;
  AgentConfig cfg_;
};

struct HistoryRow {
  std::size_t update_index = 0;
  double wall_clock_s = 0;
  double mean_episode_time_s = 0;
  double mean_episode_energy_j = 0;
  double mean_episode_weighted = 0;
  double loss_value = 0;
  double loss_policy = 0;
  double entropy = 0;
  std::size_t batches_fresh = 0;
  std::size_t batches_replayed = 0;
};

inline constexpr const char* kHistoryHeader =
    "update_index,wall_clock_s,mean_episode_time_s,mean_episode_energy_j,mean_episode_weighted,loss_value,"
    "loss_policy,entropy,batches_fresh,batches_replayed";

void write_history_csv(std::ostream& out, const std::vector<HistoryRow>& rows);
void write_history_csv(const std::string& path, const std::vector<HistoryRow>& rows);

// Source of fresh batches for the learner. `next(block)` returns a batch or
// nullopt (non-blocking and empty, or no more data).
using BatchSource = std::function<std::optional<ExperienceBatch>(bool block)>;

struct LearnerCounters {
  std::uint64_t received = 0;
  std::uint64_t trained_fresh = 0;
  std::uint64_t trained_replayed = 0;
};

struct LearnerRunResult {
  std::vector<HistoryRow> history;
  LearnerCounters counters;
  bool data_exhausted = false;
};

// Loop: gather fresh batches into the master buffer, build a training batch,
// optimize, publish, move the master buffer into the replay ring. Stops at
// cfg.max_updates, the wall-clock budget or when the source runs dry.
LearnerRunResult learner_run(Learner& learner, LearnerBuffers& buffers, const BatchSource& source,
                             SnapshotCell& cell, SplitMix64& rng,
                             const std::function<void(const HistoryRow&)>& on_update = {});

// ---------------------------------------------------------------------------
// full training loop

struct TrainingResult {
  Params params;
  std::vector<HistoryRow> history;
  LearnerCounters counters;
  std::uint64_t batches_generated = 0;
};

// Deals `train_dags` round-robin into one cyclic queue per broker and trains.
// One broker runs in lockstep on the learner thread (bitwise reproducible);
// more brokers run on their own threads.
TrainingResult train(const AgentConfig& cfg, std::shared_ptr<const Infrastructure> infra, const Weights& weights,
                     const EnvConfig& env_cfg, const std::vector<Dag>& train_dags,
                     const std::function<void(const HistoryRow&)>& on_update = {});

NetConfig net_config(const AgentConfig& cfg, std::size_t input_dim, std::size_t action_count);

}  // namespace fogsched
