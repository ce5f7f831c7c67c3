#pragma once

// Straight-from-the-formulas recomputation of the application cost, written
// without any of the library's cost helpers. Used as a test oracle.

#include <algorithm>
#include <vector>

#include "fogsched/cost_model.hpp"
#include "fogsched/dag.hpp"
#include "fogsched/infra.hpp"

namespace fogsched::oracle {

struct Terms {
  double time = 0, energy = 0;
};

inline Terms task_terms(const Dag& d, const Infrastructure& in, TaskId j, const std::vector<int>& x) {
  const auto& srv = in.servers[x[j]];
  const bool local = srv.id.tier == Tier::Iot;
  const double proc = double(d.task(j).cycles) / srv.freq_hz;
  double input = 0, sent = 0;
  for (const auto& e : d.edges()) {
    if (e.dst != j || x[e.src] == x[j]) continue;
    const double t = double(e.bytes) / in.network.bandwidth(x[e.src], x[j]) + in.network.latency(x[e.src], x[j]);
    input = std::max(input, t);
    if (in.servers[x[e.src]].id.tier == Tier::Iot) sent = std::max(sent, t);
  }
  const auto& p = in.power;
  Terms out;
  out.time = proc + input;
  out.energy = local ? proc * p.p_cpu_w + input * p.p_tra_w : proc * p.p_idle_w + sent * p.p_tra_w + p.idle_time_s * p.p_idle_w;
  return out;
}

inline AppCost app(const Dag& d, const Infrastructure& in, const std::vector<int>& x, const Weights& w,
                   const std::vector<bool>& cp) {
  AppCost c;
  for (TaskId j = 0; j < d.size(); ++j)
    if (cp[j]) {
      const auto t = task_terms(d, in, j, x);
      c.time_s += t.time;
      c.energy_j += t.energy;
    }
  c.weighted = w.w1 * c.time_s + w.w2 * c.energy_j;
  return c;
}

inline double relative_error(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0 ? 0 : std::abs(a - b) / scale;
}

}  // namespace fogsched::oracle
