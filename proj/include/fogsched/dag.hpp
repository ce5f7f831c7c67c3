#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace fogsched {

using TaskId = std::size_t;

struct Task {
  TaskId id = 0;
  std::int64_t cycles = 0;  // CPU cycles
  std::int64_t ram = 0;     // bytes

  bool operator==(const Task&) const = default;
};

struct Edge {
  TaskId src = 0;
  TaskId dst = 0;
  std::int64_t bytes = 0;  // data sent from src to dst

  bool operator==(const Edge&) const = default;
};

struct ValidationResult {
  std::vector<std::string> errors;

  bool ok() const { return errors.empty(); }
  explicit operator bool() const { return ok(); }
};

// An application DAG. Task ids are dense 0..L-1 and equal to the task's
// position in `tasks()`. Adjacency is built once at construction; the object
// is immutable afterwards and safe to share between threads.
class Dag {
 public:
  Dag() = default;
  Dag(std::vector<Task> tasks, std::vector<Edge> edges);

  const std::vector<Task>& tasks() const { return tasks_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t size() const { return tasks_.size(); }
  const Task& task(TaskId id) const { return tasks_.at(id); }

  // Indices into edges() of incoming/outgoing edges; empty for ill-formed ids.
  const std::vector<std::size_t>& in_edges(TaskId id) const { return in_.at(id); }
  const std::vector<std::size_t>& out_edges(TaskId id) const { return out_.at(id); }

  bool operator==(const Dag& o) const { return tasks_ == o.tasks_ && edges_ == o.edges_; }

 private:
  std::vector<Task> tasks_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> in_;
  std::vector<std::vector<std::size_t>> out_;
};

ValidationResult validate(const Dag& dag);

// Sources of edges ending at `id`, ascending. Throws std::out_of_range for unknown ids.
std::vector<TaskId> predecessors(const Dag& dag, TaskId id);
std::vector<TaskId> successors(const Dag& dag, TaskId id);

std::vector<TaskId> entry_tasks(const Dag& dag);
std::vector<TaskId> exit_tasks(const Dag& dag);

// Kahn's algorithm, smallest ready id first. Throws Error on a cycle.
std::vector<TaskId> topological_order(const Dag& dag);

}  // namespace fogsched
