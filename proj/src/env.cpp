#include "fogsched/env.hpp"

#include <algorithm>

#include "fogsched/error.hpp"

namespace fogsched {

Eigen::VectorXd EnvState::flat() const {
  Eigen::VectorXd out(server_features.size() + task_features.size() + locality.size());
  out << server_features, task_features, locality;
  return out;
}

std::size_t feature_dim(std::size_t server_count, const EnvConfig& cfg) {
  return server_count * kServerFeatures + 2 + cfg.k_max + cfg.l_max + (cfg.locality_features ? server_count : 0);
}

Eigen::VectorXd server_features(const Infrastructure& infra) {
  const auto M = infra.size();
  const auto iot = infra.iot_ordinal();
  double max_freq = 0, max_bw = 0, max_lat = 0;
  int max_cores = 1;
  for (std::size_t s = 0; s < M; ++s) {
    max_freq = std::max(max_freq, infra.servers[s].freq_hz);
    max_cores = std::max(max_cores, infra.servers[s].cores);
    if (s != iot) {
      max_bw = std::max(max_bw, infra.bandwidth(s, iot));
      max_lat = std::max(max_lat, infra.latency(s, iot));
    }
  }
  const auto& p = infra.power;
  const double max_power = std::max({p.p_cpu_w, p.p_tra_w, p.p_idle_w});
  auto ratio = [](double v, double bound) { return bound > 0 ? v / bound : 0.0; };

  Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(M * kServerFeatures));
  for (std::size_t s = 0; s < M; ++s) {
    const auto& spec = infra.servers[s];
    auto block = f.segment(static_cast<Eigen::Index>(s * kServerFeatures), kServerFeatures);
    block[0] = ratio(spec.freq_hz, max_freq);
    block[1] = ratio(spec.cores, max_cores);
    block[2] = spec.utilization;
    if (s != iot) {
      block[3] = ratio(infra.bandwidth(s, iot), max_bw);
      block[4] = ratio(infra.latency(s, iot), max_lat);
    } else {
      block[5] = ratio(p.p_cpu_w, max_power);
      block[6] = ratio(p.p_tra_w, max_power);
      block[7] = ratio(p.p_idle_w, max_power);
    }
  }
  return f;
}

PlacementEnv::PlacementEnv(std::shared_ptr<const Infrastructure> infra, Weights weights, EnvConfig cfg)
    : infra_(std::move(infra)), weights_(weights), cfg_(cfg) {
  if (!infra_) throw ConfigError("PlacementEnv: no infrastructure");
  check_infrastructure(*infra_);
  check_weights(weights_);
  if (cfg_.l_max < 1) throw ConfigError("PlacementEnv: l_max must be >= 1");
  if (!(cfg_.max_cycles > 0) || !(cfg_.max_edge_bytes > 0))
    throw ConfigError("PlacementEnv: normalization bounds must be positive");
  server_features_ = server_features(*infra_);
  for (const auto& s : infra_->servers) max_server_ram_ = std::max(max_server_ram_, static_cast<double>(s.ram_bytes));
}

EnvState PlacementEnv::reset(const Dag& dag) {
  if (auto v = validate(dag); !v) throw ConfigError("PlacementEnv::reset: " + v.errors.front());
  if (dag.size() > cfg_.l_max)
    throw ConfigError("PlacementEnv::reset: dag has " + std::to_string(dag.size()) + " tasks, l_max is " +
                      std::to_string(cfg_.l_max));
  const auto& iot = infra_->servers[infra_->iot_ordinal()];
  for (const auto& t : dag.tasks())
    if (!ram_feasible(t, iot))
      throw ConfigError("PlacementEnv::reset: task " + std::to_string(t.id) +
                        " does not fit on the IoT device, so the infeasible-action fallback is undefined");
  dag_ = dag;
  ranks_ = rank(*dag_, *infra_, weights_);
  assignment_.assign(dag.size(), kUnassigned);
  costs_.assign(dag.size(), TaskCost{});
  step_ = 0;
  return observe();
}

std::optional<TaskId> PlacementEnv::current_task() const {
  if (!dag_ || done()) return std::nullopt;
  return order()[step_];
}

EnvState PlacementEnv::observe() const {
  EnvState s;
  s.server_features = server_features_;
  s.step_index = step_;
  s.task_features = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(2 + cfg_.k_max + cfg_.l_max));
  auto& tf = s.task_features;

  if (auto cur = current_task()) {
    const auto& task = dag_->task(*cur);
    tf[0] = std::min(1.0, static_cast<double>(task.cycles) / cfg_.max_cycles);
    tf[1] = std::min(1.0, static_cast<double>(task.ram) / max_server_ram_);
    std::vector<const Edge*> incoming;
    for (auto ei : dag_->in_edges(*cur)) incoming.push_back(&dag_->edges()[ei]);
    std::sort(incoming.begin(), incoming.end(), [](const Edge* a, const Edge* b) { return a->src < b->src; });
    for (std::size_t slot = 0; slot < std::min(cfg_.k_max, incoming.size()); ++slot)
      tf[static_cast<Eigen::Index>(2 + slot)] =
          std::min(1.0, static_cast<double>(incoming[slot]->bytes) / cfg_.max_edge_bytes);
    if (cfg_.locality_features) {
      s.locality = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(infra_->size()));
      double total = 0;
      for (const auto* e : incoming) {
        s.locality[assignment_[e->src]] += static_cast<double>(e->bytes);
        total += static_cast<double>(e->bytes);
      }
      if (total > 0) s.locality /= total;
    }
  }
  if (cfg_.locality_features && s.locality.size() == 0)
    s.locality = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(infra_->size()));

  const double denom = infra_->size() > 1 ? static_cast<double>(infra_->size() - 1) : 1.0;
  const auto base = static_cast<Eigen::Index>(2 + cfg_.k_max);
  for (std::size_t j = 0; j < cfg_.l_max; ++j) {
    const bool placed = dag_ && j < assignment_.size() && assignment_[j] != kUnassigned;
    tf[base + static_cast<Eigen::Index>(j)] = placed ? assignment_[j] / denom : -1.0;
  }
  return s;
}

StepResult PlacementEnv::step(std::size_t action) {
  if (!dag_) throw Error("PlacementEnv::step: reset() has not been called");
  if (done()) throw Error("PlacementEnv::step: episode already finished");
  if (action >= infra_->size())
    throw Error("PlacementEnv::step: action " + std::to_string(action) + " out of range [0, " +
                std::to_string(infra_->size()) + ")");

  const TaskId task = order()[step_];
  StepResult r;
  r.action_feasible = ram_feasible(dag_->task(task), infra_->servers[action]);
  assignment_[task] = static_cast<int>(r.action_feasible ? action : infra_->iot_ordinal());
  costs_[task] = task_cost(*dag_, *infra_, task, assignment_, weights_);
  r.reward = r.action_feasible ? -costs_[task].weighted : cfg_.penalty;
  ++step_;
  r.episode_done = done();
  r.state = observe();
  return r;
}

AppCost PlacementEnv::episode_cost() const {
  if (!dag_ || !done()) throw Error("PlacementEnv::episode_cost: episode not finished");
  return app_cost(costs_, weights_, ranks_.cp_mask);
}

Placement PlacementEnv::episode_placement() const {
  if (!dag_ || !done()) throw Error("PlacementEnv::episode_placement: episode not finished");
  return Placement{assignment_, costs_, episode_cost()};
}

}  // namespace fogsched
