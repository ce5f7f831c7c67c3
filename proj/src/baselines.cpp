#include "fogsched/baselines.hpp"

#include "fogsched/prescheduler.hpp"

namespace fogsched {

Placement greedy_place(const Dag& dag, const Infrastructure& infra, const Weights& w) {
  const auto ranks = rank(dag, infra, w);
  const auto iot = static_cast<int>(infra.iot_ordinal());
  Assignment a(dag.size(), kUnassigned);
  for (auto v : ranks.order) {
    a[v] = iot;
    const double local = task_cost(dag, infra, v, a, w).weighted;
    int best = iot;
    double best_cost = local;
    for (std::size_t s = 0; s < infra.size(); ++s) {
      if (static_cast<int>(s) == iot || !ram_feasible(dag.task(v), infra.servers[s])) continue;
      a[v] = static_cast<int>(s);
      const double c = task_cost(dag, infra, v, a, w).weighted;
      if (c < best_cost) {
        best_cost = c;
        best = static_cast<int>(s);
      }
    }
    a[v] = best;
  }
  return evaluate_placement(dag, infra, std::move(a), w, ranks.cp_mask);
}

Placement random_place(const Dag& dag, const Infrastructure& infra, const Weights& w, SplitMix64& rng) {
  const auto ranks = rank(dag, infra, w);
  const auto M = static_cast<std::int64_t>(infra.size());
  Assignment a(dag.size(), static_cast<int>(infra.iot_ordinal()));
  for (auto v : ranks.order) {
    for (std::int64_t tries = 0; tries < M; ++tries) {
      const auto s = rng.uniform_int(0, M - 1);
      if (ram_feasible(dag.task(v), infra.servers[static_cast<std::size_t>(s)])) {
        a[v] = static_cast<int>(s);
        break;
      }
    }
  }
  return evaluate_placement(dag, infra, std::move(a), w, ranks.cp_mask);
}

Placement local_only(const Dag& dag, const Infrastructure& infra, const Weights& w) {
  const auto ranks = rank(dag, infra, w);
  Assignment a(dag.size(), static_cast<int>(infra.iot_ordinal()));
  return evaluate_placement(dag, infra, std::move(a), w, ranks.cp_mask);
}

}  // namespace fogsched
