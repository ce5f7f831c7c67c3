#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include "fogsched/error.hpp"
#include "fogsched/infra.hpp"

using namespace fogsched;
using nlohmann::json;

namespace {

json minimal_config() {
  return {
      {"servers",
       {{{"tier", 0}, {"index", 0}, {"freq_hz", 1e9}, {"cores", 1}, {"ram_bytes", 512000000}},
        {{"tier", 1}, {"index", 0}, {"freq_hz", 1.2e9}, {"cores", 4}, {"ram_bytes", 1000000000}}}},
      {"power", {{"p_cpu_w", 0.5}, {"p_idle_w", 0.002}, {"p_tra_w", 0.2}}},
      {"network",
       {{"mode", "explicit"},
        {"links", {{{"a", {{"tier", 0}, {"index", 0}}}, {"b", {{"tier", 1}, {"index", 0}}}, {"bandwidth", 1e7}, {"latency", 0.001}}}}}}};
}

std::size_t count_tier(const Infrastructure& infra, Tier t) {
  std::size_t n = 0;
  for (const auto& s : infra.servers) n += s.id.tier == t;
  return n;
}

}  // namespace

TEST_CASE("load: minimal explicit config") {
  const auto infra = load_infrastructure(minimal_config().dump());
  CHECK(infra.size() == 2);
  CHECK(infra.iot_ordinal() == 0);
  CHECK(infra.bandwidth(0, 1) == 1e7);
  CHECK(infra.bandwidth(1, 0) == 1e7);
  CHECK(infra.latency(1, 0) == 0.001);
  CHECK(infra.power.idle_time_s == 0.01);
}

TEST_CASE("load: missing latency names the pair") {
  auto cfg = minimal_config();
  cfg["network"]["links"][0].erase("latency");
  try {
    load_infrastructure(cfg.dump());
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("missing latency") != std::string::npos);
    CHECK(msg.find(to_string(ServerId{Tier::Iot, 0})) != std::string::npos);
    CHECK(msg.find(to_string(ServerId{Tier::Fog, 0})) != std::string::npos);
  }
}

TEST_CASE("load: schema violations") {
  auto cfg = minimal_config();
  cfg["servers"][1]["freq_hz"] = -1;
  CHECK_THROWS_AS(load_infrastructure(cfg.dump()), ConfigError);

  cfg = minimal_config();
  cfg["servers"][1]["tier"] = 0;
  CHECK_THROWS_AS(load_infrastructure(cfg.dump()), ConfigError);

  cfg = minimal_config();
  cfg["servers"][1]["index"] = 0;
  cfg["servers"][1]["tier"] = 0;
  CHECK_THROWS_AS(load_infrastructure(cfg.dump()), ConfigError);

  cfg = minimal_config();
  cfg["power"].erase("p_tra_w");
  CHECK_THROWS_AS(load_infrastructure(cfg.dump()), ConfigError);

  cfg = minimal_config();
  cfg["power"]["p_idle_w"] = -0.1;
  CHECK_THROWS_AS(load_infrastructure(cfg.dump()), ConfigError);

  cfg = minimal_config();
  cfg["surprise"] = 1;
  CHECK_THROWS_AS(load_infrastructure(cfg.dump()), ConfigError);

  CHECK_THROWS_AS(load_infrastructure("{not json"), ParseError);
}

TEST_CASE("default testbed") {
  const auto infra = default_testbed();
  CHECK(infra.size() == 13);
  CHECK(count_tier(infra, Tier::Iot) == 1);
  CHECK(count_tier(infra, Tier::Fog) == 4);
  CHECK(count_tier(infra, Tier::Cloud) == 8);
  CHECK(infra.power.p_cpu_w == 0.5);
  CHECK(infra.power.p_idle_w == 0.002);
  CHECK(infra.power.p_tra_w == 0.2);

  const auto iot = infra.iot_ordinal();
  const auto fog0 = *infra.ordinal_of({Tier::Fog, 0});
  const auto cloud0 = *infra.ordinal_of({Tier::Cloud, 0});
  CHECK(infra.latency(iot, fog0) == 0.001);
  CHECK(infra.latency(iot, cloud0) == 0.010);
  CHECK(infra.bandwidth(iot, fog0) >= 1.0e7);
  CHECK(infra.bandwidth(iot, fog0) <= 1.2e7);
  CHECK(infra.bandwidth(iot, cloud0) >= 4e6);
  CHECK(infra.bandwidth(iot, cloud0) <= 8e6);

  const auto& s = infra.servers;
  CHECK(s[iot].freq_hz == 1.0e9);
  CHECK(s[iot].cores == 1);
  CHECK(s[iot].ram_bytes == 512'000'000);
  int fast_cloud = 0, slow_cloud = 0;
  for (const auto& x : s)
    if (x.id.tier == Tier::Cloud) {
      CHECK(x.cores == 8);
      fast_cloud += x.freq_hz == 2.4e9 && x.ram_bytes == 24'000'000'000;
      slow_cloud += x.freq_hz == 2.0e9 && x.ram_bytes == 16'000'000'000;
    }
  CHECK(fast_cloud == 2);
  CHECK(slow_cloud == 6);
}

TEST_CASE("scaled testbed sizes") {
  CHECK(scaled_testbed(2).size() - 1 == 24);
  CHECK(scaled_testbed(4).size() - 1 == 48);
  CHECK(scaled_testbed(1) == default_testbed());
  CHECK_THROWS_AS(scaled_testbed(3), ConfigError);
  const auto big = scaled_testbed(4);
  CHECK(count_tier(big, Tier::Iot) == 1);
  CHECK_NOTHROW(check_infrastructure(big));
}

TEST_CASE("round trip through JSON, generated and explicit") {
  const auto infra = default_testbed(77);
  CHECK(load_infrastructure(infrastructure_to_json(infra)) == infra);
  const auto explicit_copy = load_infrastructure(infrastructure_to_json(infra, true));
  CHECK(explicit_copy.servers == infra.servers);
  CHECK(explicit_copy.power == infra.power);
  CHECK(explicit_copy.network.bandwidth == infra.network.bandwidth);
  CHECK(explicit_copy.network.latency == infra.network.latency);
}

TEST_CASE("property: bandwidth draws stay in their intervals over 1000 seeds") {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto infra = default_testbed(seed);
    for (std::size_t a = 0; a < infra.size(); ++a)
      for (std::size_t b = a + 1; b < infra.size(); ++b) {
        const bool cloud = infra.servers[a].id.tier == Tier::Cloud || infra.servers[b].id.tier == Tier::Cloud;
        const double bw = infra.bandwidth(a, b);
        REQUIRE(bw == infra.bandwidth(b, a));
        if (cloud) {
          REQUIRE(bw >= 4e6);
          REQUIRE(bw <= 8e6);
          REQUIRE(infra.latency(a, b) == 0.010);
        } else {
          REQUIRE(bw >= 10e6);
          REQUIRE(bw <= 12e6);
          REQUIRE(infra.latency(a, b) == 0.001);
        }
      }
    REQUIRE(count_tier(infra, Tier::Iot) == 1);
  }
}

TEST_CASE("exactly one IoT device is enforced") {
  auto infra = default_testbed();
  infra.servers[1].id = {Tier::Iot, 1};
  CHECK_THROWS_AS(check_infrastructure(infra), ConfigError);
}
