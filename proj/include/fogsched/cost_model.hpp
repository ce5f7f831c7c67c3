#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fogsched/dag.hpp"
#include "fogsched/infra.hpp"

namespace fogsched {

// Importance of execution time (w1) versus IoT energy (w2).
struct Weights {
  double w1 = 0.5;
  double w2 = 0.5;
};

// Throws ConfigError unless w1, w2 >= 0 and w1 + w2 == 1 (to 1e-12).
void check_weights(const Weights& w);

struct TaskCost {
  double proc_time_s = 0;
  double input_time_s = 0;
  double time_s = 0;
  double proc_energy_j = 0;
  double input_energy_j = 0;
  double energy_j = 0;
  double weighted = 0;
};

// Application-level totals over critical-path tasks.
struct AppCost {
  double time_s = 0;    // Psi
  double energy_j = 0;  // Omega
  double weighted = 0;  // Phi
};

// Server ordinal per task, kUnassigned for tasks not yet placed.
using Assignment = std::vector<int>;
inline constexpr int kUnassigned = -1;

struct Placement {
  Assignment assignment;
  std::vector<TaskCost> per_task;
  AppCost totals;
};

// Critical-path indicator per task.
using CpMask = std::vector<bool>;

double proc_time(const Task& task, const ServerSpec& server);

// The remaining functions require `id` and all of its predecessors to be
// assigned (Error otherwise).
double input_ready_time(const Dag& dag, const Infrastructure& infra, TaskId id, std::span<const int> assignment);
double task_time(const Dag& dag, const Infrastructure& infra, TaskId id, std::span<const int> assignment);
double task_energy(const Dag& dag, const Infrastructure& infra, TaskId id, std::span<const int> assignment);
TaskCost task_cost(const Dag& dag, const Infrastructure& infra, TaskId id, std::span<const int> assignment,
                   const Weights& w);

// Proc-only energy of running `task` on server `ordinal` (local: P_cpu, remote: P_idle).
double proc_energy(const Task& task, const Infrastructure& infra, std::size_t ordinal);

// Sums over tasks flagged in `cp`; requires a complete assignment.
AppCost app_cost(const Dag& dag, const Infrastructure& infra, std::span<const int> assignment, const Weights& w,
                 const CpMask& cp);
AppCost app_cost(std::span<const TaskCost> per_task, const Weights& w, const CpMask& cp);

Placement evaluate_placement(const Dag& dag, const Infrastructure& infra, Assignment assignment, const Weights& w,
                             const CpMask& cp);

struct ConstraintReport {
  bool c1 = true;  // one server per task
  bool c2 = true;  // cumulative cost non-decreasing along every edge
  bool c3 = true;  // task ram fits the server
  bool c4 = true;  // w1 + w2 == 1, both non-negative
  std::vector<std::string> violations;

  bool ok() const { return c1 && c2 && c3 && c4; }
};

// Cumulative cost of a task: its weighted cost plus the largest cumulative
// cost among its parents (costliest root-to-task path). Requires a complete,
// in-range assignment.
std::vector<double> cumulative_cost(const Dag& dag, const Infrastructure& infra, std::span<const int> assignment,
                                    const Weights& w);

ConstraintReport check_constraints(const Dag& dag, const Infrastructure& infra, std::span<const int> assignment,
                                   const Weights& w);

bool ram_feasible(const Task& task, const ServerSpec& server);

inline constexpr double kBruteForceLimit = 1e7;

// Exhaustive search over all M^L assignments that satisfy C3; returns the
// argmin of Phi, first in lexicographic order (task 0 most significant) on
// ties. `visit`, when set, sees every feasible assignment with its Phi.
Placement brute_force_optimal(const Dag& dag, const Infrastructure& infra, const Weights& w, const CpMask& cp,
                              const std::function<void(std::span<const int>, double)>& visit = {});

}  // namespace fogsched
