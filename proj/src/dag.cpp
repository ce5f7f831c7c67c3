#include "fogsched/dag.hpp"

#include <algorithm>
#include <queue>
#include <set>
#include <stdexcept>
#include <utility>

#include "fogsched/error.hpp"

namespace fogsched {

Dag::Dag(std::vector<Task> tasks, std::vector<Edge> edges)
    : tasks_(std::move(tasks)), edges_(std::move(edges)), in_(tasks_.size()), out_(tasks_.size()) {
  const auto n = tasks_.size();
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const auto& edge = edges_[e];
    // Dangling endpoints are kept in edges() for validate() to report.
    if (edge.src < n && edge.dst < n) {
      out_[edge.src].push_back(e);
      in_[edge.dst].push_back(e);
    }
  }
}

namespace {

bool has_cycle(const Dag& dag) {
  const auto n = dag.size();
  std::vector<std::size_t> indegree(n, 0);
  for (TaskId v = 0; v < n; ++v) indegree[v] = dag.in_edges(v).size();
  std::vector<TaskId> stack;
  for (TaskId v = 0; v < n; ++v)
    if (indegree[v] == 0) stack.push_back(v);
  std::size_t seen = 0;
  while (!stack.empty()) {
    const TaskId v = stack.back();
    stack.pop_back();
    ++seen;
    for (auto e : dag.out_edges(v))
      if (--indegree[dag.edges()[e].dst] == 0) stack.push_back(dag.edges()[e].dst);
  }
  return seen != n;
}

}  // namespace

ValidationResult validate(const Dag& dag) {
  ValidationResult r;
  const auto n = dag.size();
  if (n == 0) r.errors.emplace_back("dag has no tasks");

  for (std::size_t i = 0; i < n; ++i) {
    const auto& t = dag.tasks()[i];
    if (t.id != i)
      r.errors.push_back("task at position " + std::to_string(i) + " has id " + std::to_string(t.id) +
                         " (ids must be dense 0..L-1)");
    if (t.cycles <= 0) r.errors.push_back("task " + std::to_string(t.id) + ": cycles must be > 0");
    if (t.ram < 0) r.errors.push_back("task " + std::to_string(t.id) + ": ram must be >= 0");
  }

  std::set<std::pair<TaskId, TaskId>> pairs;
  bool dangling = false;
  for (const auto& e : dag.edges()) {
    const auto name = "edge (" + std::to_string(e.src) + "," + std::to_string(e.dst) + ")";
    if (e.src >= n || e.dst >= n) {
      r.errors.push_back(name + ": dangling endpoint, dag has " + std::to_string(n) + " tasks");
      dangling = true;
      continue;
    }
    if (e.src == e.dst) r.errors.push_back(name + ": self loop");
    if (e.bytes < 0) r.errors.push_back(name + ": bytes must be >= 0");
    if (!pairs.emplace(e.src, e.dst).second) r.errors.push_back(name + ": duplicate edge");
  }

  if (!dangling && n > 0 && has_cycle(dag)) r.errors.emplace_back("dag contains a cycle");
  return r;
}

std::vector<TaskId> predecessors(const Dag& dag, TaskId id) {
  if (id >= dag.size()) throw std::out_of_range("unknown task id " + std::to_string(id));
  std::vector<TaskId> out;
  for (auto e : dag.in_edges(id)) out.push_back(dag.edges()[e].src);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<TaskId> successors(const Dag& dag, TaskId id) {
  if (id >= dag.size()) throw std::out_of_range("unknown task id " + std::to_string(id));
  std::vector<TaskId> out;
  for (auto e : dag.out_edges(id)) out.push_back(dag.edges()[e].dst);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<TaskId> entry_tasks(const Dag& dag) {
  std::vector<TaskId> out;
  for (TaskId v = 0; v < dag.size(); ++v)
    if (dag.in_edges(v).empty()) out.push_back(v);
  return out;
}

std::vector<TaskId> exit_tasks(const Dag& dag) {
  std::vector<TaskId> out;
  for (TaskId v = 0; v < dag.size(); ++v)
    if (dag.out_edges(v).empty()) out.push_back(v);
  return out;
}

std::vector<TaskId> topological_order(const Dag& dag) {
  const auto n = dag.size();
  std::vector<std::size_t> indegree(n);
  std::priority_queue<TaskId, std::vector<TaskId>, std::greater<>> ready;
  for (TaskId v = 0; v < n; ++v) {
    indegree[v] = dag.in_edges(v).size();
    if (indegree[v] == 0) ready.push(v);
  }
  std::vector<TaskId> order;
  order.reserve(n);
  while (!ready.empty()) {
    const TaskId v = ready.top();
    ready.pop();
    order.push_back(v);
    for (auto e : dag.out_edges(v))
      if (--indegree[dag.edges()[e].dst] == 0) ready.push(dag.edges()[e].dst);
  }
  if (order.size() != n) throw Error("topological_order: dag contains a cycle");
  return order;
}

}  // namespace fogsched
