#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>
#include <limits>

#include "fogsched/cost_model.hpp"
#include "fogsched/error.hpp"
#include "fogsched/prescheduler.hpp"
#include "fogsched/rng.hpp"
#include "fogsched/workload.hpp"
#include "oracle.hpp"

using namespace fogsched;

namespace {

// IoT @1 GHz plus one remote server per entry of `freqs`; every link 8 MB/s, 10 ms.
Infrastructure toy(std::vector<double> freqs, std::int64_t remote_ram = 16'000'000'000) {
  Infrastructure in;
  in.servers.push_back({{Tier::Iot, 0}, 1e9, 1, 512'000'000, 0});
  for (std::size_t i = 0; i < freqs.size(); ++i)
    in.servers.push_back({{Tier::Cloud, int(i)}, freqs[i], 8, remote_ram, 0});
  const auto M = Eigen::Index(in.servers.size());
  in.network.bandwidth = Eigen::MatrixXd::Constant(M, M, 8e6);
  in.network.latency = Eigen::MatrixXd::Constant(M, M, 0.01);
  in.network.bandwidth.diagonal().setZero();
  in.network.latency.diagonal().setZero();
  check_infrastructure(in);
  return in;
}

Dag chain(std::vector<std::int64_t> cycles, std::int64_t bytes = 8'000'000) {
  std::vector<Task> t;
  std::vector<Edge> e;
  for (std::size_t i = 0; i < cycles.size(); ++i) {
    t.push_back({i, cycles[i], 1000});
    if (i > 0) e.push_back({i - 1, i, bytes});
  }
  return Dag(t, e);
}

std::vector<int> random_assignment(std::size_t L, std::size_t M, SplitMix64& rng) {
  std::vector<int> a(L);
  for (auto& x : a) x = int(rng.uniform_int(0, std::int64_t(M) - 1));
  return a;
}

// Largest sum of weighted cost over all root-to-v paths, by explicit path enumeration.
double path_max(const Dag& d, const std::vector<double>& phi, TaskId v) {
  double best = 0;
  for (auto p : predecessors(d, v)) best = std::max(best, path_max(d, phi, p));
  return best + phi[v];
}

}  // namespace

TEST_CASE("proc_time") {
  const auto in = toy({2e9, 1.5e9});
  CHECK(proc_time({0, 1'000'000'000, 0}, {{Tier::Iot, 0}, 1e9, 1, 1, 0}) == 1.0);
  CHECK(proc_time({0, 3'000'000'000, 0}, in.servers[2]) == 2.0);
  CHECK(proc_time({0, 1'000'000'000, 0}, in.servers[0]) == 1.0);
  CHECK(proc_time({0, 1'000'000'000, 0}, in.servers[1]) == 0.5);
}

TEST_CASE("input_ready_time and task_time") {
  const auto in = toy({2e9});
  const auto d = chain({1'000'000'000, 1'000'000'000});
  CHECK(input_ready_time(d, in, 0, std::vector<int>{0, 1}) == 0.0);
  CHECK(input_ready_time(d, in, 1, std::vector<int>{1, 1}) == 0.0);
  CHECK(input_ready_time(d, in, 1, std::vector<int>{0, 1}) == doctest::Approx(1.01).epsilon(1e-12));
  CHECK(task_time(d, in, 0, std::vector<int>{0, 1}) == 1.0);
  CHECK(task_time(d, in, 1, std::vector<int>{0, 1}) == doctest::Approx(1.51).epsilon(1e-12));
  CHECK_THROWS_AS(input_ready_time(d, in, 1, std::vector<int>{kUnassigned, 1}), Error);
}

TEST_CASE("colocated chain: time over the critical path is the sum of proc times") {
  const auto in = toy({2e9});
  const auto d = chain({1'000'000'000, 500'000'000, 300'000'000});
  const Weights w{1, 0};
  const auto cp = rank(d, in, w).cp_mask;
  for (int s : {0, 1}) {
    std::vector<int> a(3, s);
    const auto c = app_cost(d, in, a, w, cp);
    double proc = 0;
    for (const auto& t : d.tasks()) proc += proc_time(t, in.servers[s]);
    CHECK(c.time_s == doctest::Approx(proc).epsilon(1e-12));
  }
}

TEST_CASE("task_energy branches") {
  const auto in = toy({2e9});
  const auto d = chain({1'000'000'000, 1'000'000'000});
  CHECK(task_energy(d, in, 0, std::vector<int>{0, 0}) == doctest::Approx(0.5).epsilon(1e-12));
  // remote entry task, proc 0.5 s: 0.5 * 0.002 + 0.01 * 0.002
  CHECK(task_energy(d, in, 0, std::vector<int>{1, 1}) == doctest::Approx(0.00102).epsilon(1e-12));
  // remote child of a remote parent: no transmission from the device
  CHECK(task_energy(d, in, 1, std::vector<int>{1, 1}) == doctest::Approx(0.00102).epsilon(1e-12));
  // remote child of an IoT parent: adds 1.01 s of transmission at 0.2 W
  CHECK(task_energy(d, in, 1, std::vector<int>{0, 1}) == doctest::Approx(0.00102 + 0.202).epsilon(1e-12));
}

TEST_CASE("task_cost weighted combinations") {
  const auto in = toy({2e9});
  const auto d = chain({1'000'000'000, 1'000'000'000});
  const std::vector<int> a{0, 1};
  for (TaskId j : {0, 1}) {
    const auto t = task_cost(d, in, j, a, {1, 0});
    CHECK(t.weighted == t.time_s);
    const auto e = task_cost(d, in, j, a, {0, 1});
    CHECK(e.weighted == e.energy_j);
  }
  const auto half = task_cost(d, in, 0, std::vector<int>{0, 0}, {0.5, 0.5});
  CHECK(half.time_s == 1.0);
  CHECK(half.energy_j == 0.5);
  CHECK(half.weighted == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("app_cost: chain and diamond") {
  const auto in = toy({2e9});
  const Weights w{1, 0};
  const auto c = chain({1'000'000'000, 2'000'000'000, 1'000'000'000});
  const std::vector<int> mixed{0, 1, 0};
  double sum = 0;
  for (TaskId j = 0; j < 3; ++j) sum += task_time(c, in, j, mixed);
  CHECK(app_cost(c, in, mixed, w, rank(c, in, w).cp_mask).time_s == doctest::Approx(sum).epsilon(1e-12));

  // entry 0 -> {1 (1 s), 2 (2 s)} -> 3; all local, so the 2-second branch is critical
  Dag dia({{0, 1'000'000'000, 0}, {1, 1'000'000'000, 0}, {2, 2'000'000'000, 0}, {3, 1'000'000'000, 0}},
          {{0, 1, 1}, {0, 2, 1}, {1, 3, 1}, {2, 3, 1}});
  const std::vector<int> local(4, 0);
  const auto cp = rank(dia, in, w).cp_mask;
  CHECK(cp == std::vector<bool>{true, false, true, true});
  const auto a = app_cost(dia, in, local, w, cp);
  CHECK(a.time_s == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(a.weighted == a.time_s);
  CHECK_THROWS_AS(app_cost(dia, in, std::vector<int>{0, 0}, w, cp), Error);
}

TEST_CASE("check_constraints") {
  auto in = default_testbed();
  const auto fog0 = *in.ordinal_of({Tier::Fog, 0});
  Dag d({{0, 1'000'000, 2'000'000'000}}, {});
  const auto r = check_constraints(d, in, std::vector<int>{int(fog0)}, {0.5, 0.5});
  CHECK_FALSE(r.c3);
  REQUIRE(r.violations.size() == 1);
  CHECK(r.violations[0].find("task 0") != std::string::npos);
  CHECK(r.violations[0].find(to_string(in.servers[fog0].id)) != std::string::npos);

  CHECK_FALSE(check_constraints(d, in, std::vector<int>{0}, {0.7, 0.7}).c4);
  CHECK_FALSE(check_constraints(d, in, std::vector<int>{}, {0.5, 0.5}).c1);
  const Dag small({{0, 1'000'000, 1'000'000}}, {});
  CHECK(check_constraints(small, in, std::vector<int>{0}, {0.5, 0.5}).ok());
  CHECK(check_constraints(small, in, std::vector<int>{int(fog0)}, {0.5, 0.5}).ok());
}

TEST_CASE("property: C2 holds on 1000 random feasible placements") {
  const auto in = default_testbed();
  const Weights w{0.5, 0.5};
  SplitMix64 rng(11);
  DagGenParams p;
  int tested = 0;
  for (std::uint64_t i = 0; tested < 1000; ++i) {
    p.L = 3 + i % 10;
    const auto d = generate_dag(p, i);
    auto a = random_assignment(d.size(), in.size(), rng);
    if (!check_constraints(d, in, a, w).c3) continue;
    const auto r = check_constraints(d, in, a, w);
    REQUIRE(r.ok());
    std::vector<double> phi(d.size());
    for (TaskId j = 0; j < d.size(); ++j) phi[j] = oracle::task_terms(d, in, j, a).time * 0.5 + oracle::task_terms(d, in, j, a).energy * 0.5;
    const auto cum = cumulative_cost(d, in, a, w);
    for (TaskId j = 0; j < d.size(); ++j) REQUIRE(cum[j] == doctest::Approx(path_max(d, phi, j)).epsilon(1e-12));
    for (const auto& e : d.edges()) REQUIRE(cum[e.dst] >= cum[e.src]);
    ++tested;
  }
}

TEST_CASE("brute force: L=1 on two servers picks the cheaper") {
  const auto in = toy({2e9});
  Dag d({{0, 1'000'000'000, 0}}, {});
  const Weights w{0.5, 0.5};
  const auto cp = rank(d, in, w).cp_mask;
  const auto best = brute_force_optimal(d, in, w, cp);
  const double local = app_cost(d, in, std::vector<int>{0}, w, cp).weighted;
  const double remote = app_cost(d, in, std::vector<int>{1}, w, cp).weighted;
  CHECK(best.totals.weighted == std::min(local, remote));
  CHECK(best.assignment == std::vector<int>{remote < local ? 1 : 0});
}

TEST_CASE("brute force: L=3 chain on M=3 equals the minimum of 27 enumerations") {
  const auto in = toy({2e9, 1.5e9});
  const auto d = chain({800'000'000, 300'000'000, 900'000'000}, 2'000'000);
  const Weights w{0.5, 0.5};
  const auto cp = rank(d, in, w).cp_mask;
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> arg;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c) {
        const std::vector<int> x{a, b, c};
        const double phi = oracle::app(d, in, x, w, cp).weighted;
        if (phi < best) best = phi, arg = x;
      }
  const auto bf = brute_force_optimal(d, in, w, cp);
  CHECK(oracle::relative_error(bf.totals.weighted, best) <= 1e-12);
  CHECK(oracle::relative_error(oracle::app(d, in, bf.assignment, w, cp).weighted, bf.totals.weighted) <= 1e-12);
  CHECK(bf.assignment == arg);
}

TEST_CASE("brute force: time-only and energy-only weights disagree on a crafted instance") {
  // The remote server is slower than the device, so time favors staying
  // local while energy favors idling the device.
  const auto in = toy({0.5e9});
  const auto d = chain({2'000'000'000, 2'000'000'000}, 100'000);
  const auto cp_t = rank(d, in, {1, 0}).cp_mask;
  const auto cp_e = rank(d, in, {0, 1}).cp_mask;
  const auto fast = brute_force_optimal(d, in, {1, 0}, cp_t);
  const auto frugal = brute_force_optimal(d, in, {0, 1}, cp_e);
  CHECK(fast.assignment == std::vector<int>{0, 0});
  CHECK(frugal.assignment == std::vector<int>{1, 1});
}

TEST_CASE("brute force: guards") {
  const auto in = default_testbed();
  DagGenParams p;
  p.L = 10;
  CHECK_THROWS_AS(brute_force_optimal(generate_dag(p, 1), in, {0.5, 0.5}, CpMask(10, true)), Error);
  const auto small = toy({2e9}, 1000);
  Dag d({{0, 1, 600'000'000}}, {});
  CHECK_THROWS_AS(brute_force_optimal(d, small, {0.5, 0.5}, CpMask(1, true)), Error);
}

TEST_CASE("property: additivity, degenerate weights and colocation") {
  const auto in = default_testbed();
  SplitMix64 rng(5);
  DagGenParams p;
  for (std::uint64_t i = 0; i < 200; ++i) {
    const auto d = generate_dag(p, i);
    const auto a = random_assignment(d.size(), in.size(), rng);
    const auto cp = rank(d, in, {0.5, 0.5}).cp_mask;
    for (TaskId j = 0; j < d.size(); ++j) {
      const auto t = task_cost(d, in, j, a, {0.3, 0.7});
      REQUIRE(t.time_s == t.proc_time_s + t.input_time_s);
      REQUIRE(t.energy_j == t.proc_energy_j + t.input_energy_j);
    }
    const auto ct = app_cost(d, in, a, {1, 0}, cp);
    const auto ce = app_cost(d, in, a, {0, 1}, cp);
    REQUIRE(ct.weighted == ct.time_s);
    REQUIRE(ce.weighted == ce.energy_j);

    const std::vector<int> same(d.size(), int(i % in.size()));
    for (TaskId j = 0; j < d.size(); ++j) {
      const auto t = task_cost(d, in, j, same, {0.5, 0.5});
      REQUIRE(t.input_time_s == 0);
      if (in.is_iot(same[j])) REQUIRE(t.input_energy_j == 0);
      else REQUIRE(t.input_energy_j == in.power.idle_time_s * in.power.p_idle_w);
    }
  }
}

TEST_CASE("property: every enumerated assignment matches the oracle") {
  const auto in = toy({2e9, 1.43e9});
  DagGenParams p;
  p.L = 5;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const auto d = generate_dag(p, i);
    const Weights w{0.5, 0.5};
    const auto cp = rank(d, in, w).cp_mask;
    std::size_t visited = 0;
    brute_force_optimal(d, in, w, cp, [&](std::span<const int> a, double phi) {
      ++visited;
      const std::vector<int> x(a.begin(), a.end());
      REQUIRE(oracle::relative_error(oracle::app(d, in, x, w, cp).weighted, phi) <= 1e-12);
    });
    CHECK(visited == 243);
  }
}

TEST_CASE("check_weights") {
  CHECK_NOTHROW(check_weights({0.5, 0.5}));
  CHECK_NOTHROW(check_weights({1, 0}));
  CHECK_THROWS_AS(check_weights({0.6, 0.6}), ConfigError);
  CHECK_THROWS_AS(check_weights({-0.5, 1.5}), ConfigError);
}
