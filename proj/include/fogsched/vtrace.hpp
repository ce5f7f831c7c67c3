#pragma once

// Truncated importance-sampling value targets for off-policy actor-critic.
// Scalar-templated free functions over Eigen vectors; one trajectory at a time.

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "fogsched/error.hpp"

namespace fogsched {

struct VTraceConfig {
  double rho_bar = 1.0;
  double c_bar = 1.0;
  double gamma = 0.99;
};

inline void check_config(const VTraceConfig& c) {
  if (!(c.rho_bar > 0) || !(c.c_bar > 0)) throw ConfigError("VTraceConfig: rho_bar and c_bar must be positive");
  if (c.c_bar > c.rho_bar) throw ConfigError("VTraceConfig: c_bar must not exceed rho_bar");
  if (!(c.gamma >= 0 && c.gamma <= 1)) throw ConfigError("VTraceConfig: gamma must lie in [0, 1]");
}

template <typename Scalar>
using TraceVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct VTraceOutput {
  TraceVector<Scalar> targets;       // vbar_i
  TraceVector<Scalar> rho;           // truncated rho_t
  TraceVector<Scalar> pg_advantage;  // r_i + gamma * vbar_{i+1} - V(s_i)
};

// rho_t = min(rho_bar, pi/mu), c_t = min(c_bar, pi/mu) for the taken actions.
template <typename Scalar>
std::pair<TraceVector<Scalar>, TraceVector<Scalar>> is_weights(const TraceVector<Scalar>& target_probs,
                                                               const TraceVector<Scalar>& behavior_probs,
                                                               const VTraceConfig& cfg) {
  if (target_probs.size() != behavior_probs.size()) throw Error("is_weights: length mismatch");
  if ((behavior_probs.array() <= Scalar(0)).any()) throw Error("is_weights: behavior probability must be positive");
  const TraceVector<Scalar> ratio = target_probs.cwiseQuotient(behavior_probs);
  return {ratio.cwiseMin(static_cast<Scalar>(cfg.rho_bar)), ratio.cwiseMin(static_cast<Scalar>(cfg.c_bar))};
}

// Backward recursion
//   vbar_t = V_t + delta_t + gamma_t c_t (vbar_{t+1} - V_{t+1}),
//   delta_t = rho_t (r_t + gamma_t V_{t+1} - V_t),
// with V_N = bootstrap and gamma_t = 0 where dones[t] is set, so neither delta
// nor the c-product crosses an episode boundary. `dones` may be empty.
template <typename Scalar>
VTraceOutput<Scalar> vtrace_targets(const TraceVector<Scalar>& rewards, const TraceVector<Scalar>& values,
                                    Scalar bootstrap_value, const TraceVector<Scalar>& rho,
                                    const TraceVector<Scalar>& c, const VTraceConfig& cfg,
                                    const std::vector<bool>& dones = {}) {
  const auto N = rewards.size();
  if (values.size() != N || rho.size() != N || c.size() != N)
    throw Error("vtrace_targets: rewards, values, rho and c must have equal length");
  if (!dones.empty() && static_cast<Eigen::Index>(dones.size()) != N)
    throw Error("vtrace_targets: dones length mismatch");

  VTraceOutput<Scalar> out;
  out.rho = rho;
  out.targets.resize(N);
  out.pg_advantage.resize(N);
  Scalar next_value = bootstrap_value;
  Scalar next_target = bootstrap_value;
  for (Eigen::Index t = N; t-- > 0;) {
    const bool done = !dones.empty() && dones[static_cast<std::size_t>(t)];
    const Scalar g = done ? Scalar(0) : static_cast<Scalar>(cfg.gamma);
    const Scalar delta = rho(t) * (rewards(t) + g * next_value - values(t));
    out.targets(t) = values(t) + delta + g * c(t) * (next_target - next_value);
    out.pg_advantage(t) = rewards(t) + g * next_target - values(t);
    next_value = values(t);
    next_target = out.targets(t);
  }
  if (!out.targets.allFinite() || !out.pg_advantage.allFinite()) throw Error("vtrace_targets: non-finite result");
  return out;
}

// pi_rho(a) = min(rho_bar mu(a), pi(a)) / sum_b min(rho_bar mu(b), pi(b)). For logging.
template <typename Scalar>
TraceVector<Scalar> target_policy_diagnostic(const TraceVector<Scalar>& target_probs,
                                             const TraceVector<Scalar>& behavior_probs, double rho_bar) {
  if (target_probs.size() != behavior_probs.size()) throw Error("target_policy_diagnostic: length mismatch");
  const TraceVector<Scalar> m = (static_cast<Scalar>(rho_bar) * behavior_probs).cwiseMin(target_probs);
  const Scalar z = m.sum();
  if (!(z > Scalar(0))) throw Error("target_policy_diagnostic: zero normalizer");
  return m / z;
}

}  // namespace fogsched
