#pragma once

#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "fogsched/cost_model.hpp"
#include "fogsched/dag.hpp"
#include "fogsched/infra.hpp"
#include "fogsched/prescheduler.hpp"

namespace fogsched {

struct EnvConfig {
  double penalty = -1000.0;
  std::size_t l_max = 50;  // placement-vector slots
  std::size_t k_max = 8;   // parent slots
  // Normalization bounds for task features; values above are clamped to 1.
  double max_cycles = 1e9;
  double max_edge_bytes = 5e6;
  // Appends one locality value per server: the share of the current task's
  // input bytes produced by parents placed on that server.
  bool locality_features = true;
};

// Per-server feature layout, kServerFeatures values per server in ordinal order:
//   0 freq / max freq          4 latency to IoT / max latency to IoT
//   1 cores / max cores        5 p_cpu / max power    (IoT device only, else 0)
//   2 utilization              6 p_tra / max power    (IoT device only, else 0)
//   3 bandwidth to IoT / max   7 p_idle / max power   (IoT device only, else 0)
// The IoT device's own bandwidth and latency entries are 0.
inline constexpr std::size_t kServerFeatures = 8;

// Flat state: [server features, task features, locality]. Task feature
// layout: [cycles, ram, parent bytes x k_max, placement x l_max].
// Parent slots follow ascending parent id; unused slots are 0. Placement slot
// j holds ordinal / (M - 1) for placed task j and -1 otherwise.
struct EnvState {
  Eigen::VectorXd server_features;
  Eigen::VectorXd task_features;
  Eigen::VectorXd locality;  // empty unless EnvConfig::locality_features
  std::size_t step_index = 0;

  Eigen::VectorXd flat() const;
};

struct StepResult {
  EnvState state;
  double reward = 0;
  bool episode_done = false;
  bool action_feasible = true;
};

std::size_t feature_dim(std::size_t server_count, const EnvConfig& cfg);
Eigen::VectorXd server_features(const Infrastructure& infra);

// One episode places every task of one DAG in rank order. An infeasible
// action (server RAM too small) earns `penalty` and the task falls back to the
// IoT device so the episode always ends with a complete placement.
class PlacementEnv {
 public:
  PlacementEnv(std::shared_ptr<const Infrastructure> infra, Weights weights, EnvConfig cfg = {});

  EnvState reset(const Dag& dag);
  StepResult step(std::size_t action);

  // Critical-path totals of the finished placement; Error before the episode ends.
  AppCost episode_cost() const;
  Placement episode_placement() const;

  std::size_t action_count() const { return infra_->size(); }
  std::size_t feature_size() const { return feature_dim(infra_->size(), cfg_); }
  bool done() const { return step_ == order().size(); }
  std::optional<TaskId> current_task() const;
  const RankTable& ranks() const { return ranks_; }
  const Assignment& assignment() const { return assignment_; }
  const Infrastructure& infra() const { return *infra_; }
  const Weights& weights() const { return weights_; }
  const EnvConfig& config() const { return cfg_; }

 private:
  const std::vector<TaskId>& order() const { return ranks_.order; }
  EnvState observe() const;

  std::shared_ptr<const Infrastructure> infra_;
  Weights weights_;
  EnvConfig cfg_;
  Eigen::VectorXd server_features_;
  double max_server_ram_ = 1;

  std::optional<Dag> dag_;
  RankTable ranks_;
  Assignment assignment_;
  std::vector<TaskCost> costs_;
  std::size_t step_ = 0;
};

}  // namespace fogsched
