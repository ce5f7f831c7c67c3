#include "fogsched/prescheduler.hpp"

#include <queue>

#include "fogsched/error.hpp"

namespace fogsched {

double avg_task_cost(const Task& task, const Infrastructure& infra, const Weights& w) {
  if (infra.size() == 0) throw Error("avg_task_cost: no servers");
  double sum = 0.0;
  for (std::size_t s = 0; s < infra.size(); ++s)
    sum += w.w1 * proc_time(task, infra.servers[s]) + w.w2 * proc_energy(task, infra, s);
  return sum / static_cast<double>(infra.size());
}

RankTable rank(const Dag& dag, const Infrastructure& infra, const Weights& w) {
  RankTable t;
  const auto n = dag.size();
  t.avg_cost.resize(n);
  t.rank.assign(n, 0.0);
  for (TaskId v = 0; v < n; ++v) t.avg_cost[v] = avg_task_cost(dag.task(v), infra, w);

  const auto topo = topological_order(dag);
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    double best = 0.0;
    for (auto e : dag.out_edges(*it)) best = std::max(best, t.rank[dag.edges()[e].dst]);
    t.rank[*it] = t.avg_cost[*it] + best;
  }

  t.order = sort_tasks(dag, t.rank);
  t.cp_set = critical_path(dag, t.rank);
  t.cp_mask.assign(n, false);
  for (auto v : t.cp_set) t.cp_mask[v] = true;
  return t;
}

std::vector<TaskId> sort_tasks(const Dag& dag, const std::vector<double>& rank) {
  const auto n = dag.size();
  auto lower_priority = [&](TaskId a, TaskId b) {
    if (rank[a] != rank[b]) return rank[a] < rank[b];
    return a > b;
  };
  std::priority_queue<TaskId, std::vector<TaskId>, decltype(lower_priority)> ready(lower_priority);
  std::vector<std::size_t> waiting(n);
  for (TaskId v = 0; v < n; ++v) {
    waiting[v] = dag.in_edges(v).size();
    if (waiting[v] == 0) ready.push(v);
  }
  std::vector<TaskId> order;
  order.reserve(n);
  while (!ready.empty()) {
    const auto v = ready.top();
    ready.pop();
    order.push_back(v);
    for (auto e : dag.out_edges(v))
      if (--waiting[dag.edges()[e].dst] == 0) ready.push(dag.edges()[e].dst);
  }
  if (order.size() != n) throw Error("sort_tasks: dag contains a cycle");
  return order;
}

std::vector<TaskId> critical_path(const Dag& dag, const std::vector<double>& rank) {
  if (dag.size() == 0) return {};
  auto better = [&](TaskId a, TaskId b) { return rank[a] > rank[b] || (rank[a] == rank[b] && a < b); };

  const auto entries = entry_tasks(dag);
  TaskId cur = entries.front();
  for (auto v : entries)
    if (better(v, cur)) cur = v;

  std::vector<TaskId> path{cur};
  while (!dag.out_edges(cur).empty()) {
    TaskId next = dag.edges()[dag.out_edges(cur).front()].dst;
    for (auto e : dag.out_edges(cur))
      if (better(dag.edges()[e].dst, next)) next = dag.edges()[e].dst;
    cur = next;
    path.push_back(cur);
  }
  return path;
}

}  // namespace fogsched
