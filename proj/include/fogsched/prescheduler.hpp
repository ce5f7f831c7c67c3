#pragma once

#include <vector>

#include "fogsched/cost_model.hpp"
#include "fogsched/dag.hpp"
#include "fogsched/infra.hpp"

namespace fogsched {

struct RankTable {
  std::vector<double> rank;      // upward rank per task
  std::vector<double> avg_cost;  // mean weighted execution cost over all servers
  std::vector<TaskId> order;     // execution order
  std::vector<TaskId> cp_set;    // critical path, entry to exit
  CpMask cp_mask;
};

// Mean over servers of w1 * proc_time + w2 * proc_energy. Communication is
// excluded: parents have no placement yet when the ranking is computed.
double avg_task_cost(const Task& task, const Infrastructure& infra, const Weights& w);

// Upward rank: rank(v) = avg(v) + max over children of rank(child), exit tasks
// rank(v) = avg(v). Fills every field of the table.
RankTable rank(const Dag& dag, const Infrastructure& infra, const Weights& w);

// Ready-list order: among tasks whose parents are all scheduled, the highest
// rank goes first (ties: smaller id).
std::vector<TaskId> sort_tasks(const Dag& dag, const std::vector<double>& rank);

// Starts from the highest-ranked entry task and follows the highest-ranked
// child until an exit task (ties: smaller id).
std::vector<TaskId> critical_path(const Dag& dag, const std::vector<double>& rank);

}  // namespace fogsched
