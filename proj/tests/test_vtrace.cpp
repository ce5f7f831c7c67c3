#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fogsched/rng.hpp"
#include "fogsched/vtrace.hpp"
#include "vtrace_oracle.hpp"

using namespace fogsched;
using Vec = TraceVector<double>;

namespace {

Vec random_vec(Eigen::Index n, SplitMix64& rng, double lo, double hi) {
  Vec v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

}  // namespace

TEST_CASE("is_weights") {
  const VTraceConfig cfg{1, 1, 0.99};
  const Vec pi = (Vec(3) << 0.2, 0.6, 0.1).finished();
  auto [rho, c] = is_weights<double>(pi, pi, cfg);
  CHECK(rho.isOnes(0));
  CHECK(c.isOnes(0));

  const Vec mu = (Vec(3) << 0.2, 0.2, 0.2).finished();
  std::tie(rho, c) = is_weights<double>(pi, mu, cfg);
  CHECK(rho(1) == 1.0);
  CHECK(rho(2) == 0.5);
  CHECK(c(2) == 0.5);

  const VTraceConfig loose{4, 2, 0.99};
  std::tie(rho, c) = is_weights<double>(pi, mu, loose);
  CHECK(rho(1) == doctest::Approx(3.0));
  CHECK(c(1) == 2.0);

  CHECK_THROWS_AS(is_weights<double>(pi, (Vec(3) << 0.2, 0.0, 0.2).finished(), cfg), Error);
  CHECK_THROWS_AS(is_weights<double>(pi, Vec::Ones(2), cfg), Error);
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(check_config(VTraceConfig{1, 2, 0.99}), ConfigError);
  CHECK_THROWS_AS(check_config(VTraceConfig{1, 1, 1.5}), ConfigError);
  CHECK_NOTHROW(check_config(VTraceConfig{1, 1, 1.0}));
}

TEST_CASE("targets: hand examples") {
  const VTraceConfig cfg{1, 1, 0.99};
  const auto two = vtrace_targets<double>(Vec::Ones(2), Vec::Zero(2), 0.0, Vec::Ones(2), Vec::Ones(2), cfg);
  CHECK(two.targets(0) == doctest::Approx(1.99).epsilon(1e-14));

  const auto zero = vtrace_targets<double>(Vec::Ones(3), (Vec(3) << 0.3, -1, 2).finished(), 5.0, Vec::Zero(3),
                                           Vec::Zero(3), cfg);
  CHECK(zero.targets == (Vec(3) << 0.3, -1, 2).finished());

  const double V = 0.4, r = -0.7, boot = 1.3, rho = 0.6;
  const auto one = vtrace_targets<double>(Vec::Constant(1, r), Vec::Constant(1, V), boot, Vec::Constant(1, rho),
                                          Vec::Constant(1, rho), cfg);
  CHECK(one.targets(0) == doctest::Approx(V + rho * (r + 0.99 * boot - V)).epsilon(1e-14));
  CHECK(one.pg_advantage(0) == doctest::Approx(r + 0.99 * boot - V).epsilon(1e-14));

  CHECK_THROWS_AS(vtrace_targets<double>(Vec::Ones(2), Vec::Ones(3), 0.0, Vec::Ones(2), Vec::Ones(2), cfg), Error);
}

TEST_CASE("property: on-policy reduction to n-step returns") {
  SplitMix64 rng(1);
  for (int k = 0; k < 100; ++k) {
    const auto N = rng.uniform_int(1, 10);
    const VTraceConfig cfg{1, 1, rng.uniform(0.5, 1.0)};
    const Vec r = random_vec(N, rng, -1, 1);
    const Vec v = random_vec(N, rng, -1, 1);
    const double boot = rng.uniform(-1, 1);
    const Vec pi = random_vec(N, rng, 0.05, 1);
    const auto [rho, c] = is_weights<double>(pi, pi, cfg);
    const auto out = vtrace_targets<double>(r, v, boot, rho, c, cfg);
    const auto expect = oracle::n_step_returns(r, boot, cfg.gamma);
    CHECK((out.targets - expect).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("property: recursion equals the double sum") {
  SplitMix64 rng(2);
  for (int k = 0; k < 200; ++k) {
    const auto N = rng.uniform_int(1, 12);
    const VTraceConfig cfg{rng.uniform(0.5, 2.0), 0.5, rng.uniform(0, 1)};
    const Vec r = random_vec(N, rng, -2, 2);
    const Vec v = random_vec(N, rng, -2, 2);
    const double boot = rng.uniform(-2, 2);
    const auto [rho, c] = is_weights<double>(random_vec(N, rng, 0.01, 1), random_vec(N, rng, 0.01, 1), cfg);
    const auto out = vtrace_targets<double>(r, v, boot, rho, c, cfg);
    const auto expect = oracle::vtrace_double_sum(r, v, boot, rho, c, cfg.gamma);
    CHECK((out.targets - expect).cwiseAbs().maxCoeff() <= 1e-12);
    for (Eigen::Index i = 0; i < N; ++i) {
      const double next = i + 1 < N ? out.targets(i + 1) : boot;
      CHECK(out.pg_advantage(i) == doctest::Approx(r(i) + cfg.gamma * next - v(i)).epsilon(1e-14));
    }
  }
}

TEST_CASE("property: lowering rho_bar never increases |delta|") {
  SplitMix64 rng(3);
  for (int k = 0; k < 200; ++k) {
    const double pi = rng.uniform(0.01, 1), mu = rng.uniform(0.01, 1);
    const double td = rng.uniform(-3, 3);
    double prev = INFINITY;
    for (double bar : {4.0, 2.0, 1.0, 0.5, 0.1}) {
      const auto [rho, c] = is_weights<double>(Vec::Constant(1, pi), Vec::Constant(1, mu), {bar, std::min(bar, 1.0), 0.9});
      const double delta = std::abs(rho(0) * td);
      CHECK(delta <= prev);
      prev = delta;
    }
  }
}

TEST_CASE("property: episode boundaries cut the trace") {
  SplitMix64 rng(4);
  for (int k = 0; k < 50; ++k) {
    const Eigen::Index N = 8;
    const VTraceConfig cfg{1, 1, 0.95};
    const Vec r = random_vec(N, rng, -1, 1);
    const Vec v = random_vec(N, rng, -1, 1);
    const Vec rho = random_vec(N, rng, 0.2, 1);
    std::vector<bool> dones(N, false);
    dones[3] = true;
    const auto out = vtrace_targets<double>(r, v, rng.uniform(-1, 1), rho, rho, cfg, dones);
    // steps 0..3 form a closed episode: identical to a 4-step trace with a zero bootstrap
    const auto head = oracle::vtrace_double_sum(r.head(4), v.head(4), 0.0, rho.head(4), rho.head(4), cfg.gamma);
    CHECK((out.targets.head(4) - head).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(out.targets(3) == doctest::Approx(v(3) + rho(3) * (r(3) - v(3))).epsilon(1e-14));
    CHECK(out.pg_advantage(3) == doctest::Approx(r(3) - v(3)).epsilon(1e-14));
    // changing anything after the boundary leaves the first episode untouched
    Vec r2 = r;
    r2.tail(4).array() += 10;
    const auto moved = vtrace_targets<double>(r2, v, 3.0, rho, rho, cfg, dones);
    CHECK(moved.targets.head(4) == out.targets.head(4));
  }
}

TEST_CASE("target_policy_diagnostic") {
  const Vec pi = (Vec(4) << 0.1, 0.2, 0.3, 0.4).finished();
  const Vec mu = (Vec(4) << 0.4, 0.3, 0.2, 0.1).finished();
  CHECK((target_policy_diagnostic<double>(pi, mu, 1e9) - pi).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK((target_policy_diagnostic<double>(mu, mu, 1.0) - mu).cwiseAbs().maxCoeff() <= 1e-15);
  const Vec hot = (Vec(4) << 1, 0, 0, 0).finished();
  const Vec uni = Vec::Constant(4, 0.25);
  // min(0.25, 1) = 0.25 on the hot action, 0 elsewhere
  CHECK(target_policy_diagnostic<double>(hot, uni, 1.0) == hot);
  // min(mu, pi) = (0.1, 0.2, 0.2, 0.1), sum 0.6
  const Vec expect = (Vec(4) << 1.0 / 6, 2.0 / 6, 2.0 / 6, 1.0 / 6).finished();
  CHECK((target_policy_diagnostic<double>(pi, mu, 1.0) - expect).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("long double instantiation agrees with double") {
  const VTraceConfig cfg{1, 1, 0.9};
  SplitMix64 rng(5);
  const Vec r = random_vec(6, rng, -1, 1), v = random_vec(6, rng, -1, 1), rho = random_vec(6, rng, 0.1, 1);
  const auto d = vtrace_targets<double>(r, v, 0.5, rho, rho, cfg);
  const auto l = vtrace_targets<long double>(r.cast<long double>(), v.cast<long double>(), 0.5L,
                                             rho.cast<long double>(), rho.cast<long double>(), cfg);
  CHECK((d.targets - l.targets.cast<double>()).cwiseAbs().maxCoeff() <= 1e-14);
}
