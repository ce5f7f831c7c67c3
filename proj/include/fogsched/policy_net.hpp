#pragma once

// Shared-trunk policy/value network: two tanh dense layers, two LSTM layers,
// a softmax policy head and a linear value head. All parameters live in one
// flat vector so optimizers, checkpoints and finite-difference checks can
// treat them uniformly; per-layer views are Eigen::Maps into it.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fogsched/error.hpp"
#include "fogsched/rng.hpp"

namespace fogsched {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

struct NetConfig {
  std::size_t input_dim = 0;
  std::array<std::size_t, 2> dense_sizes{128, 128};
  std::array<std::size_t, 2> recurrent_sizes{64, 64};
  std::size_t action_count = 0;
  std::uint64_t init_seed = 0;

  bool operator==(const NetConfig&) const = default;
};

inline void check_config(const NetConfig& c) {
  if (c.input_dim < 1) throw ConfigError("NetConfig: input_dim must be >= 1");
  for (auto d : c.dense_sizes)
    if (d < 1) throw ConfigError("NetConfig: dense sizes must be >= 1");
  for (auto r : c.recurrent_sizes)
    if (r < 1) throw ConfigError("NetConfig: recurrent sizes must be >= 1");
  if (c.action_count < 2) throw ConfigError("NetConfig: action_count must be >= 2");
}

// Parameter blocks in storage order. LSTM gate rows are stacked as
// [input, forget, output, candidate].
enum Block : std::size_t {
  kDense0W, kDense0B, kDense1W, kDense1B,
  kLstm0Wx, kLstm0Wh, kLstm0B,
  kLstm1Wx, kLstm1Wh, kLstm1B,
  kPolicyW, kPolicyB, kValueW, kValueB,
  kBlockCount
};

struct BlockShape {
  const char* name;
  Eigen::Index rows;
  Eigen::Index cols;
  Eigen::Index offset;
  bool bias;
  Eigen::Index fan_in;

  Eigen::Index size() const { return rows * cols; }
};

using ParameterLayout = std::array<BlockShape, kBlockCount>;

inline ParameterLayout make_layout(const NetConfig& c) {
  const auto in = static_cast<Eigen::Index>(c.input_dim);
  const auto d0 = static_cast<Eigen::Index>(c.dense_sizes[0]);
  const auto d1 = static_cast<Eigen::Index>(c.dense_sizes[1]);
  const auto r0 = static_cast<Eigen::Index>(c.recurrent_sizes[0]);
  const auto r1 = static_cast<Eigen::Index>(c.recurrent_sizes[1]);
  const auto A = static_cast<Eigen::Index>(c.action_count);
  ParameterLayout l{{
      {"dense0.W", d0, in, 0, false, in},
      {"dense0.b", d0, 1, 0, true, in},
      {"dense1.W", d1, d0, 0, false, d0},
      {"dense1.b", d1, 1, 0, true, d0},
      {"lstm0.Wx", 4 * r0, d1, 0, false, d1 + r0},
      {"lstm0.Wh", 4 * r0, r0, 0, false, d1 + r0},
      {"lstm0.b", 4 * r0, 1, 0, true, d1 + r0},
      {"lstm1.Wx", 4 * r1, r0, 0, false, r0 + r1},
      {"lstm1.Wh", 4 * r1, r1, 0, false, r0 + r1},
      {"lstm1.b", 4 * r1, 1, 0, true, r0 + r1},
      {"policy.W", A, r1, 0, false, r1},
      {"policy.b", A, 1, 0, true, r1},
      {"value.W", 1, r1, 0, false, r1},
      {"value.b", 1, 1, 0, true, r1},
  }};
  Eigen::Index off = 0;
  for (auto& b : l) {
    b.offset = off;
    off += b.size();
  }
  return l;
}

inline Eigen::Index parameter_count(const ParameterLayout& l) { return l.back().offset + l.back().size(); }

template <typename Scalar>
struct PolicyParameters {
  NetConfig config;
  ParameterLayout layout{};
  VectorX<Scalar> values;
  std::uint64_t version = 0;

  Eigen::Map<const MatrixX<Scalar>> block(Block b) const {
    const auto& s = layout[b];
    return {values.data() + s.offset, s.rows, s.cols};
  }
  Eigen::Map<MatrixX<Scalar>> block(Block b) {
    const auto& s = layout[b];
    return {values.data() + s.offset, s.rows, s.cols};
  }
};

// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)) drawn block by block in
// column-major order from SplitMix64(init_seed); biases zero.
template <typename Scalar>
PolicyParameters<Scalar> init_parameters(const NetConfig& config) {
  check_config(config);
  PolicyParameters<Scalar> p;
  p.config = config;
  p.layout = make_layout(config);
  p.values = VectorX<Scalar>::Zero(parameter_count(p.layout));
  SplitMix64 rng(config.init_seed);
  for (const auto& b : p.layout) {
    if (b.bias) continue;
    const double bound = 1.0 / std::sqrt(static_cast<double>(b.fan_in));
    for (Eigen::Index i = 0; i < b.size(); ++i) p.values[b.offset + i] = static_cast<Scalar>(rng.uniform(-bound, bound));
  }
  return p;
}

template <typename Scalar>
struct RecurrentState {
  std::array<MatrixX<Scalar>, 2> h;  // r_l x B
  std::array<MatrixX<Scalar>, 2> c;

  static RecurrentState zeros(const NetConfig& cfg, Eigen::Index batch = 1) {
    RecurrentState s;
    for (std::size_t l = 0; l < 2; ++l) {
      const auto r = static_cast<Eigen::Index>(cfg.recurrent_sizes[l]);
      s.h[l] = MatrixX<Scalar>::Zero(r, batch);
      s.c[l] = MatrixX<Scalar>::Zero(r, batch);
    }
    return s;
  }

  bool operator==(const RecurrentState&) const = default;
};

template <typename Scalar>
struct ForwardOutput {
  VectorX<Scalar> action_probs;
  Scalar value = 0;
  RecurrentState<Scalar> next_recurrent;
};

namespace detail {

template <typename Derived>
auto sigmoid(const Eigen::MatrixBase<Derived>& z) {
  using S = typename Derived::Scalar;
  return (S(1) + (-z.array()).exp()).inverse().matrix();
}

// Column-wise softmax.
template <typename Scalar>
MatrixX<Scalar> softmax(const MatrixX<Scalar>& logits) {
  MatrixX<Scalar> p = (logits.rowwise() - logits.colwise().maxCoeff()).array().exp().matrix();
  return p.array().rowwise() / p.colwise().sum().array();
}

template <typename Scalar>
struct LstmStep {
  MatrixX<Scalar> input, h_prev, c_prev;
  MatrixX<Scalar> i, f, o, g;
  MatrixX<Scalar> c, tanh_c, h;
};

template <typename Scalar>
LstmStep<Scalar> lstm_forward(const PolicyParameters<Scalar>& p, std::size_t layer, const MatrixX<Scalar>& input,
                              const MatrixX<Scalar>& h_prev, const MatrixX<Scalar>& c_prev) {
  const auto wx = p.block(layer == 0 ? kLstm0Wx : kLstm1Wx);
  const auto wh = p.block(layer == 0 ? kLstm0Wh : kLstm1Wh);
  const auto b = p.block(layer == 0 ? kLstm0B : kLstm1B);
  const auto r = static_cast<Eigen::Index>(p.config.recurrent_sizes[layer]);
  LstmStep<Scalar> s;
  s.input = input;
  s.h_prev = h_prev;
  s.c_prev = c_prev;
  MatrixX<Scalar> z = wx * input + wh * h_prev;
  z.colwise() += b.col(0);
  s.i = sigmoid(z.topRows(r));
  s.f = sigmoid(z.middleRows(r, r));
  s.o = sigmoid(z.middleRows(2 * r, r));
  s.g = z.bottomRows(r).array().tanh().matrix();
  s.c = (s.f.array() * c_prev.array() + s.i.array() * s.g.array()).matrix();
  s.tanh_c = s.c.array().tanh().matrix();
  s.h = (s.o.array() * s.tanh_c.array()).matrix();
  return s;
}

}  // namespace detail

// Everything the backward pass needs from one time step of a batched unroll.
template <typename Scalar>
struct StepTape {
  MatrixX<Scalar> x, a0, a1;
  std::array<detail::LstmStep<Scalar>, 2> lstm;
  MatrixX<Scalar> probs;   // A x B
  RowVectorX<Scalar> value;  // 1 x B
};

template <typename Scalar>
struct Tape {
  std::vector<StepTape<Scalar>> steps;
  std::vector<RowVectorX<Scalar>> carry;  // per step, 0 where the recurrent state was reset
  RecurrentState<Scalar> final_state;
};

// Batched unroll over T steps and B independent sequences (columns). Before
// step t the recurrent state of column b is multiplied by carry[t](b), so a 0
// starts a fresh episode; an empty `carry` keeps the state throughout.
template <typename Scalar>
Tape<Scalar> unroll(const PolicyParameters<Scalar>& p, const std::vector<MatrixX<Scalar>>& inputs,
                    const RecurrentState<Scalar>& initial, std::vector<RowVectorX<Scalar>> carry = {}) {
  const auto T = inputs.size();
  const Eigen::Index B = T ? inputs.front().cols() : initial.h[0].cols();
  if (carry.empty()) carry.assign(T, RowVectorX<Scalar>::Ones(B));
  if (carry.size() != T) throw Error("unroll: carry length does not match sequence length");

  Tape<Scalar> tape;
  tape.carry = std::move(carry);
  tape.steps.resize(T);
  auto state = initial;
  for (std::size_t t = 0; t < T; ++t) {
    const auto& x = inputs[t];
    if (x.rows() != static_cast<Eigen::Index>(p.config.input_dim) || x.cols() != B)
      throw Error("unroll: input has shape " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()));
    if (!x.allFinite()) throw Error("unroll: non-finite input at step " + std::to_string(t));
    auto& s = tape.steps[t];
    s.x = x;
    s.a0 = p.block(kDense0W) * x;
    s.a0.colwise() += p.block(kDense0B).col(0);
    s.a0 = s.a0.array().tanh().matrix();
    s.a1 = p.block(kDense1W) * s.a0;
    s.a1.colwise() += p.block(kDense1B).col(0);
    s.a1 = s.a1.array().tanh().matrix();

    const auto keep = tape.carry[t].asDiagonal();
    const MatrixX<Scalar>* layer_in = &s.a1;
    for (std::size_t l = 0; l < 2; ++l) {
      MatrixX<Scalar> h_prev = state.h[l] * keep;
      MatrixX<Scalar> c_prev = state.c[l] * keep;
      s.lstm[l] = detail::lstm_forward(p, l, *layer_in, h_prev, c_prev);
      state.h[l] = s.lstm[l].h;
      state.c[l] = s.lstm[l].c;
      layer_in = &s.lstm[l].h;
    }
    MatrixX<Scalar> logits = p.block(kPolicyW) * s.lstm[1].h;
    logits.colwise() += p.block(kPolicyB).col(0);
    s.probs = detail::softmax<Scalar>(logits);
    s.value = (p.block(kValueW) * s.lstm[1].h).array() + p.block(kValueB)(0, 0);
  }
  tape.final_state = std::move(state);
  return tape;
}

// One step for a single sequence (B = 1).
template <typename Scalar>
ForwardOutput<Scalar> forward_step(const PolicyParameters<Scalar>& p, const VectorX<Scalar>& x,
                                   const RecurrentState<Scalar>& state) {
  std::vector<MatrixX<Scalar>> in{x};
  auto tape = unroll(p, in, state);
  ForwardOutput<Scalar> out;
  out.action_probs = tape.steps[0].probs.col(0);
  out.value = tape.steps[0].value(0);
  out.next_recurrent = std::move(tape.final_state);
  return out;
}

// Single-sequence forward: one output per input, recurrent state carried throughout.
template <typename Scalar>
std::vector<ForwardOutput<Scalar>> forward(const PolicyParameters<Scalar>& p, const std::vector<VectorX<Scalar>>& states,
                                           const RecurrentState<Scalar>& initial) {
  std::vector<ForwardOutput<Scalar>> outs;
  outs.reserve(states.size());
  auto state = initial;
  for (const auto& x : states) {
    outs.push_back(forward_step(p, x, state));
    state = outs.back().next_recurrent;
  }
  return outs;
}

// Reverse-mode pass over a tape given dL/dlogits (A x B) and dL/dvalue
// (1 x B) per step. Returns dL/dparameters in the flat layout.
template <typename Scalar>
VectorX<Scalar> backward(const PolicyParameters<Scalar>& p, const Tape<Scalar>& tape,
                         const std::vector<MatrixX<Scalar>>& d_logits, const std::vector<RowVectorX<Scalar>>& d_value) {
  const auto T = tape.steps.size();
  if (d_logits.size() != T || d_value.size() != T) throw Error("backward: gradient sequence length mismatch");
  VectorX<Scalar> grad_values = VectorX<Scalar>::Zero(p.values.size());
  PolicyParameters<Scalar> grad{p.config, p.layout, {}, 0};
  grad.values.swap(grad_values);

  const Eigen::Index B = T ? tape.steps[0].x.cols() : 0;
  std::array<MatrixX<Scalar>, 2> dh_next, dc_next;
  for (std::size_t l = 0; l < 2; ++l) {
    const auto r = static_cast<Eigen::Index>(p.config.recurrent_sizes[l]);
    dh_next[l] = MatrixX<Scalar>::Zero(r, B);
    dc_next[l] = MatrixX<Scalar>::Zero(r, B);
  }

  static constexpr Block kWx[2] = {kLstm0Wx, kLstm1Wx};
  static constexpr Block kWh[2] = {kLstm0Wh, kLstm1Wh};
  static constexpr Block kB[2] = {kLstm0B, kLstm1B};

  for (std::size_t t = T; t-- > 0;) {
    const auto& s = tape.steps[t];
    const auto& top = s.lstm[1].h;
    grad.block(kPolicyW).noalias() += d_logits[t] * top.transpose();
    grad.block(kPolicyB).col(0) += d_logits[t].rowwise().sum();
    grad.block(kValueW).noalias() += d_value[t] * top.transpose();
    grad.block(kValueB)(0, 0) += d_value[t].sum();

    MatrixX<Scalar> dh = p.block(kPolicyW).transpose() * d_logits[t];
    dh.noalias() += p.block(kValueW).transpose() * d_value[t];
    dh += dh_next[1];

    const auto keep = tape.carry[t].asDiagonal();
    MatrixX<Scalar> d_input;
    for (std::size_t l = 2; l-- > 0;) {
      const auto& ls = s.lstm[l];
      const auto r = static_cast<Eigen::Index>(p.config.recurrent_sizes[l]);
      MatrixX<Scalar> dc = (dh.array() * ls.o.array() * (Scalar(1) - ls.tanh_c.array().square())).matrix() + dc_next[l];
      MatrixX<Scalar> dz(4 * r, B);
      dz.topRows(r) = (dc.array() * ls.g.array() * ls.i.array() * (Scalar(1) - ls.i.array())).matrix();
      dz.middleRows(r, r) = (dc.array() * ls.c_prev.array() * ls.f.array() * (Scalar(1) - ls.f.array())).matrix();
      dz.middleRows(2 * r, r) = (dh.array() * ls.tanh_c.array() * ls.o.array() * (Scalar(1) - ls.o.array())).matrix();
      dz.bottomRows(r) = (dc.array() * ls.i.array() * (Scalar(1) - ls.g.array().square())).matrix();

      grad.block(kWx[l]).noalias() += dz * ls.input.transpose();
      grad.block(kWh[l]).noalias() += dz * ls.h_prev.transpose();
      grad.block(kB[l]).col(0) += dz.rowwise().sum();

      d_input = p.block(kWx[l]).transpose() * dz;
      dh_next[l] = (p.block(kWh[l]).transpose() * dz) * keep;
      dc_next[l] = (dc.array() * ls.f.array()).matrix() * keep;
      if (l == 1) dh = d_input + dh_next[0];
    }

    MatrixX<Scalar> dz1 = (d_input.array() * (Scalar(1) - s.a1.array().square())).matrix();
    grad.block(kDense1W).noalias() += dz1 * s.a0.transpose();
    grad.block(kDense1B).col(0) += dz1.rowwise().sum();
    MatrixX<Scalar> dz0 = ((p.block(kDense1W).transpose() * dz1).array() * (Scalar(1) - s.a0.array().square())).matrix();
    grad.block(kDense0W).noalias() += dz0 * s.x.transpose();
    grad.block(kDense0B).col(0) += dz0.rowwise().sum();
  }
  return std::move(grad.values);
}

// ---------------------------------------------------------------------------
// actor-critic loss

struct LossCoefficients {
  double value_weight = 0.5;
  double entropy_beta = 0.01;
};

// Per-step, per-column quantities held constant during differentiation.
template <typename Scalar>
struct LossTargets {
  std::vector<std::vector<int>> actions;  // [t][b]
  std::vector<RowVectorX<Scalar>> value_target;
  std::vector<RowVectorX<Scalar>> rho;
  std::vector<RowVectorX<Scalar>> pg_advantage;
  std::vector<RowVectorX<Scalar>> weight;  // 1 for loss-bearing steps, 0 otherwise
};

template <typename Scalar>
struct LossTerms {
  Scalar total = 0;
  Scalar value = 0;    // value_weight * sum (target - V)^2
  Scalar policy = 0;   // -sum rho * A * log pi(a)
  Scalar entropy = 0;  // sum of per-step entropies (not scaled by beta)
  Scalar steps = 0;    // number of loss-bearing steps
};

// L = w_v * sum (vbar - V)^2 - sum rho * A * log pi(a) - beta * sum H(pi).
// Fills d_logits/d_value when non-null.
template <typename Scalar>
LossTerms<Scalar> actor_critic_loss(const Tape<Scalar>& tape, const LossTargets<Scalar>& tg, const LossCoefficients& k,
                                    std::vector<MatrixX<Scalar>>* d_logits = nullptr,
                                    std::vector<RowVectorX<Scalar>>* d_value = nullptr) {
  const auto T = tape.steps.size();
  if (tg.actions.size() != T || tg.value_target.size() != T || tg.rho.size() != T || tg.pg_advantage.size() != T ||
      tg.weight.size() != T)
    throw Error("actor_critic_loss: target length does not match the tape");
  const auto beta = static_cast<Scalar>(k.entropy_beta);
  const auto wv = static_cast<Scalar>(k.value_weight);
  constexpr Scalar tiny = std::numeric_limits<Scalar>::min();

  LossTerms<Scalar> out;
  if (d_logits) d_logits->assign(T, MatrixX<Scalar>());
  if (d_value) d_value->assign(T, RowVectorX<Scalar>());
  for (std::size_t t = 0; t < T; ++t) {
    const auto& probs = tape.steps[t].probs;
    const auto& V = tape.steps[t].value;
    const auto B = probs.cols();
    MatrixX<Scalar> dl = MatrixX<Scalar>::Zero(probs.rows(), B);
    RowVectorX<Scalar> dv = RowVectorX<Scalar>::Zero(B);
    for (Eigen::Index b = 0; b < B; ++b) {
      const Scalar w = tg.weight[t](b);
      if (w == Scalar(0)) continue;
      const auto a = tg.actions[t][static_cast<std::size_t>(b)];
      const auto pcol = probs.col(b);
      const VectorX<Scalar> logp = pcol.array().max(tiny).log().matrix();
      const Scalar H = -(pcol.array() * logp.array()).sum();
      const Scalar diff = tg.value_target[t](b) - V(b);
      const Scalar coef = tg.rho[t](b) * tg.pg_advantage[t](b);

      out.value += w * wv * diff * diff;
      out.policy -= w * coef * logp(a);
      out.entropy += w * H;
      out.steps += w;

      dv(b) = w * Scalar(2) * wv * (V(b) - tg.value_target[t](b));
      // d(-coef log pi_a)/dlogit = -coef (onehot - pi); d(-beta H)/dlogit = beta pi (log pi + H)
      VectorX<Scalar> g = coef * pcol;
      g(a) -= coef;
      g.array() += beta * pcol.array() * (logp.array() + H);
      dl.col(b) = w * g;
    }
    if (d_logits) (*d_logits)[t] = std::move(dl);
    if (d_value) (*d_value)[t] = std::move(dv);
  }
  out.total = out.value + out.policy - beta * out.entropy;
  if (!std::isfinite(static_cast<double>(out.total))) throw Error("actor_critic_loss: non-finite loss");
  return out;
}

// ---------------------------------------------------------------------------
// optimizer

template <typename Scalar>
struct AdamState {
  VectorX<Scalar> m;
  VectorX<Scalar> v;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam update; increments the parameter version.
template <typename Scalar>
PolicyParameters<Scalar> adam_step(const PolicyParameters<Scalar>& params, const VectorX<Scalar>& grads, double lr,
                                   AdamState<Scalar>& state) {
  if (grads.size() != params.values.size()) throw Error("adam_step: gradient size mismatch");
  if (!grads.allFinite()) throw Error("adam_step: non-finite gradient");
  if (state.m.size() != grads.size()) {
    state.m = VectorX<Scalar>::Zero(grads.size());
    state.v = VectorX<Scalar>::Zero(grads.size());
    state.step = 0;
  }
  ++state.step;
  const auto b1 = static_cast<Scalar>(state.beta1);
  const auto b2 = static_cast<Scalar>(state.beta2);
  state.m = b1 * state.m + (Scalar(1) - b1) * grads;
  state.v = b2 * state.v + (Scalar(1) - b2) * grads.cwiseProduct(grads);
  const auto c1 = Scalar(1) - static_cast<Scalar>(std::pow(state.beta1, static_cast<double>(state.step)));
  const auto c2 = Scalar(1) - static_cast<Scalar>(std::pow(state.beta2, static_cast<double>(state.step)));

  PolicyParameters<Scalar> next = params;
  next.values.array() -= static_cast<Scalar>(lr) * (state.m.array() / c1) /
                         ((state.v.array() / c2).sqrt() + static_cast<Scalar>(state.eps));
  if (!next.values.allFinite()) throw Error("adam_step: non-finite parameters after update");
  ++next.version;
  return next;
}

// Categorical draw from `probs` by inverse CDF with rng.uniform01().
template <typename Scalar>
std::size_t sample_action(const VectorX<Scalar>& probs, SplitMix64& rng) {
  if (probs.size() == 0 || !probs.allFinite() || (probs.array() < Scalar(0)).any())
    throw Error("sample_action: probabilities are not a valid distribution");
  const double u = rng.uniform01() * static_cast<double>(probs.sum());
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    if (probs(i) <= Scalar(0)) continue;
    acc += static_cast<double>(probs(i));
    last_positive = static_cast<std::size_t>(i);
    if (u < acc) return last_positive;
  }
  return last_positive;
}

template <typename Scalar>
std::size_t argmax_action(const VectorX<Scalar>& probs) {
  Eigen::Index best = 0;
  probs.maxCoeff(&best);
  return static_cast<std::size_t>(best);
}

// ---------------------------------------------------------------------------
// checkpoints (double precision)

// JSON: {"format":"fogsched-policy","format_version":1,"version":...,"config":{...},"weights":[...]}.
std::string checkpoint_to_string(const PolicyParameters<double>& params);
PolicyParameters<double> checkpoint_from_string(const std::string& text);
void save_checkpoint(const PolicyParameters<double>& params, const std::string& path);
PolicyParameters<double> load_checkpoint(const std::string& path);
// Throws ConfigError when `params` cannot drive an environment with these dimensions.
void check_compatible(const PolicyParameters<double>& params, std::size_t input_dim, std::size_t action_count);

}  // namespace fogsched
