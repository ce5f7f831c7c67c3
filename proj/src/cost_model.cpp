#include "fogsched/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fogsched/error.hpp"

namespace fogsched {

void check_weights(const Weights& w) {
  if (!(w.w1 >= 0 && w.w2 >= 0)) throw ConfigError("weights must be non-negative");
  if (std::abs(w.w1 + w.w2 - 1.0) > 1e-12) throw ConfigError("weights must sum to 1");
}

double proc_time(const Task& task, const ServerSpec& server) {
  return static_cast<double>(task.cycles) / server.freq_hz;
}

namespace {

std::size_t server_of(std::span<const int> assignment, TaskId id, const Infrastructure& infra) {
  if (id >= assignment.size() || assignment[id] == kUnassigned)
    throw Error("task " + std::to_string(id) + " is not assigned");
  const auto s = assignment[id];
  if (s < 0 || static_cast<std::size_t>(s) >= infra.size())
    throw Error("task " + std::to_string(id) + " assigned to unknown server ordinal " + std::to_string(s));
  return static_cast<std::size_t>(s);
}

// Transfer time of edge `e` given both endpoints' servers; zero when colocated.
double transfer_time(const Edge& e, std::size_t from, std::size_t to, const Infrastructure& infra) {
  if (from == to) return 0.0;
  return static_cast<double>(e.bytes) / infra.bandwidth(from, to) + infra.latency(from, to);
}

}  // namespace

double input_ready_time(const Dag& dag, const Infrastructure& infra, TaskId id, std::span<const int> assignment) {
  const auto here = server_of(assignment, id, infra);
  double t = 0.0;
  for (auto ei : dag.in_edges(id)) {
    const auto& e = dag.edges()[ei];
    t = std::max(t, transfer_time(e, server_of(assignment, e.src, infra), here, infra));
  }
  return t;
}

double task_time(const Dag& dag, const Infrastructure& infra, TaskId id, std::span<const int> assignment) {
  const auto here = server_of(assignment, id, infra);
  return proc_time(dag.task(id), infra.servers[here]) + input_ready_time(dag, infra, id, assignment);
}

double proc_energy(const Task& task, const Infrastructure& infra, std::size_t ordinal) {
  const double t = proc_time(task, infra.servers[ordinal]);
  return infra.is_iot(ordinal) ? t * infra.power.p_cpu_w : t * infra.power.p_idle_w;
}

TaskCost task_cost(const Dag& dag, const Infrastructure& infra, TaskId id, std::span<const int> assignment,
                   const Weights& w) {
  const auto here = server_of(assignment, id, infra);
  const auto& p = infra.power;
  TaskCost c;
  c.proc_time_s = proc_time(dag.task(id), infra.servers[here]);
  c.input_time_s = input_ready_time(dag, infra, id, assignment);
  c.time_s = c.proc_time_s + c.input_time_s;
  c.proc_energy_j = proc_energy(dag.task(id), infra, here);
  if (infra.is_iot(here)) {
    c.input_energy_j = c.input_time_s * p.p_tra_w;
  } else {
    // Only edges leaving the IoT device cost the device transmission energy.
    double sending = 0.0;
    for (auto ei : dag.in_edges(id)) {
      const auto& e = dag.edges()[ei];
      const auto from = server_of(assignment, e.src, infra);
      if (infra.is_iot(from)) sending = std::max(sending, transfer_time(e, from, here, infra));
    }
    c.input_energy_j = sending * p.p_tra_w + p.idle_time_s * p.p_idle_w;
  }
  c.energy_j = c.proc_energy_j + c.input_energy_j;
  c.weighted = w.w1 * c.time_s + w.w2 * c.energy_j;
  return c;
}

double task_energy(const Dag& dag, const Infrastructure& infra, TaskId id, std::span<const int> assignment) {
  return task_cost(dag, infra, id, assignment, Weights{}).energy_j;
}

AppCost app_cost(std::span<const TaskCost> per_task, const Weights& w, const CpMask& cp) {
  if (cp.size() != per_task.size()) throw Error("app_cost: critical-path mask does not match task count");
  AppCost a;
  for (std::size_t j = 0; j < per_task.size(); ++j)
    if (cp[j]) {
      a.time_s += per_task[j].time_s;
      a.energy_j += per_task[j].energy_j;
    }
  a.weighted = w.w1 * a.time_s + w.w2 * a.energy_j;
  return a;
}

AppCost app_cost(const Dag& dag, const Infrastructure& infra, std::span<const int> assignment, const Weights& w,
                 const CpMask& cp) {
  if (assignment.size() != dag.size()) throw Error("app_cost: assignment does not cover every task");
  std::vector<TaskCost> per_task;
  per_task.reserve(dag.size());
  for (TaskId j = 0; j < dag.size(); ++j) per_task.push_back(task_cost(dag, infra, j, assignment, w));
  return app_cost(per_task, w, cp);
}

Placement evaluate_placement(const Dag& dag, const Infrastructure& infra, Assignment assignment, const Weights& w,
                             const CpMask& cp) {
  if (assignment.size() != dag.size()) throw Error("evaluate_placement: assignment does not cover every task");
  Placement p;
  p.per_task.reserve(dag.size());
  for (TaskId j = 0; j < dag.size(); ++j) p.per_task.push_back(task_cost(dag, infra, j, assignment, w));
  p.totals = app_cost(p.per_task, w, cp);
  p.assignment = std::move(assignment);
  return p;
}

bool ram_feasible(const Task& task, const ServerSpec& server) { return task.ram <= server.ram_bytes; }

std::vector<double> cumulative_cost(const Dag& dag, const Infrastructure& infra, std::span<const int> assignment,
                                    const Weights& w) {
  std::vector<double> cum(dag.size(), 0.0);
  for (TaskId v : topological_order(dag)) {
    double best = 0.0;
    for (auto ei : dag.in_edges(v)) best = std::max(best, cum[dag.edges()[ei].src]);
    cum[v] = best + task_cost(dag, infra, v, assignment, w).weighted;
  }
  return cum;
}

ConstraintReport check_constraints(const Dag& dag, const Infrastructure& infra, std::span<const int> assignment,
                                   const Weights& w) {
  ConstraintReport r;
  bool complete = assignment.size() == dag.size();
  if (!complete) {
    r.c1 = false;
    r.violations.push_back("C1: assignment covers " + std::to_string(assignment.size()) + " of " +
                           std::to_string(dag.size()) + " tasks");
  }
  for (TaskId j = 0; j < std::min(assignment.size(), dag.size()); ++j) {
    const int s = assignment[j];
    if (s < 0 || static_cast<std::size_t>(s) >= infra.size()) {
      r.c1 = false;
      complete = false;
      r.violations.push_back("C1: task " + std::to_string(j) + " has no valid server");
      continue;
    }
    const auto& server = infra.servers[static_cast<std::size_t>(s)];
    if (!ram_feasible(dag.task(j), server)) {
      r.c3 = false;
      r.violations.push_back("C3: task " + std::to_string(j) + " needs " + std::to_string(dag.task(j).ram) +
                             " bytes but server " + to_string(server.id) + " has " + std::to_string(server.ram_bytes));
    }
  }
  if (!(w.w1 >= 0 && w.w2 >= 0) || std::abs(w.w1 + w.w2 - 1.0) > 1e-12) {
    r.c4 = false;
    r.violations.push_back("C4: weights (" + std::to_string(w.w1) + ", " + std::to_string(w.w2) +
                           ") must be non-negative and sum to 1");
  }
  if (complete) {
    const auto cum = cumulative_cost(dag, infra, assignment, w);
    for (const auto& e : dag.edges())
      if (cum[e.dst] < cum[e.src]) {
        r.c2 = false;
        r.violations.push_back("C2: cumulative cost of task " + std::to_string(e.dst) + " is below its parent " +
                               std::to_string(e.src));
      }
  }
  return r;
}

Placement brute_force_optimal(const Dag& dag, const Infrastructure& infra, const Weights& w, const CpMask& cp,
                              const std::function<void(std::span<const int>, double)>& visit) {
  const auto L = dag.size();
  const auto M = infra.size();
  if (std::pow(static_cast<double>(M), static_cast<double>(L)) > kBruteForceLimit)
    throw Error("brute_force_optimal: " + std::to_string(M) + "^" + std::to_string(L) + " assignments exceed the limit");

  // feasible[j] lists RAM-feasible ordinals for task j, ascending.
  std::vector<std::vector<int>> feasible(L);
  for (TaskId j = 0; j < L; ++j) {
    for (std::size_t s = 0; s < M; ++s)
      if (ram_feasible(dag.task(j), infra.servers[s])) feasible[j].push_back(static_cast<int>(s));
    if (feasible[j].empty()) throw Error("brute_force_optimal: task " + std::to_string(j) + " fits on no server");
  }

  Assignment current(L);
  std::vector<std::size_t> digit(L, 0);
  for (TaskId j = 0; j < L; ++j) current[j] = feasible[j][0];

  Assignment best;
  double best_phi = std::numeric_limits<double>::infinity();
  while (true) {
    const double phi = app_cost(dag, infra, current, w, cp).weighted;
    if (visit) visit(current, phi);
    if (phi < best_phi) {
      best_phi = phi;
      best = current;
    }
    // Odometer increment, last task least significant.
    std::size_t k = L;
    while (k > 0) {
      --k;
      if (++digit[k] < feasible[k].size()) {
        current[k] = feasible[k][digit[k]];
        break;
      }
      digit[k] = 0;
      current[k] = feasible[k][0];
      if (k == 0) return evaluate_placement(dag, infra, std::move(best), w, cp);
    }
    if (L == 0) break;
  }
  return evaluate_placement(dag, infra, std::move(best), w, cp);
}

}  // namespace fogsched
