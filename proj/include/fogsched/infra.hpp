#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace fogsched {

enum class Tier : int { Iot = 0, Fog = 1, Cloud = 2 };

struct ServerId {
  Tier tier = Tier::Iot;
  int index = 0;

  bool operator==(const ServerId&) const = default;
  auto operator<=>(const ServerId&) const = default;
};

std::string to_string(ServerId id);

struct ServerSpec {
  ServerId id;
  double freq_hz = 1e9;  // per-core speed, cycles/s
  int cores = 1;
  std::int64_t ram_bytes = 0;
  double utilization = 0.0;

  bool operator==(const ServerSpec&) const = default;
};

// IoT-device power profile. idle_time_s is the constant idle interval charged
// once per remotely executed task.
struct PowerProfile {
  double p_cpu_w = 0.5;
  double p_idle_w = 0.002;
  double p_tra_w = 0.2;
  double idle_time_s = 0.01;

  bool operator==(const PowerProfile&) const = default;
};

// Generation ranges for "generated" networks. Links touching a cloud server
// use the cloud figures; every other link (IoT<->fog, fog<->fog) uses the
// fog figures.
struct NetworkRanges {
  double fog_bandwidth_min = 10e6;  // bytes/s
  double fog_bandwidth_max = 12e6;
  double cloud_bandwidth_min = 4e6;
  double cloud_bandwidth_max = 8e6;
  double fog_latency_s = 0.001;
  double cloud_latency_s = 0.010;

  bool operator==(const NetworkRanges&) const = default;
};

// Symmetric pairwise tables indexed by server ordinal. The diagonal is
// unused (same-server transfers cost nothing) and holds 0.
struct NetworkModel {
  Eigen::MatrixXd bandwidth;  // bytes/s
  Eigen::MatrixXd latency;    // s
  // Provenance, kept so the infrastructure can be written back out.
  std::optional<std::uint64_t> seed;
  NetworkRanges ranges;

  bool operator==(const NetworkModel& o) const {
    return bandwidth == o.bandwidth && latency == o.latency && seed == o.seed && ranges == o.ranges;
  }
};

// A set of servers with exactly one IoT device. Server ordinals (positions in
// `servers`) are the action space of the placement environment.
struct Infrastructure {
  std::vector<ServerSpec> servers;
  PowerProfile power;
  NetworkModel network;

  std::size_t size() const { return servers.size(); }
  std::size_t iot_ordinal() const;
  bool is_iot(std::size_t ordinal) const { return servers[ordinal].id.tier == Tier::Iot; }
  std::optional<std::size_t> ordinal_of(ServerId id) const;

  double bandwidth(std::size_t a, std::size_t b) const { return network.bandwidth(a, b); }
  double latency(std::size_t a, std::size_t b) const { return network.latency(a, b); }

  bool operator==(const Infrastructure&) const = default;
};

// Throws ConfigError naming the first violation.
void check_infrastructure(const Infrastructure& infra);

NetworkModel generate_network(const std::vector<ServerSpec>& servers, const NetworkRanges& ranges,
                              std::uint64_t seed);

// JSON config: {"servers":[...], "power":{...}, "network":{"mode":"generated"|"explicit", ...}}.
Infrastructure load_infrastructure(const std::string& config);
Infrastructure load_infrastructure_file(const std::string& path);
// Generated networks are written in generated mode (seed + ranges) unless
// `explicit_links` is set, in which case every pair is listed.
std::string infrastructure_to_json(const Infrastructure& infra, bool explicit_links = false);

inline constexpr std::uint64_t kDefaultNetworkSeed = 2021;

// 1 IoT device, 4 fog servers and 8 cloud servers with profiled bandwidth and latency.
Infrastructure default_testbed(std::uint64_t seed = kDefaultNetworkSeed);

// Fog and cloud lists replicated `factor` times (factor in {1, 2, 4}).
Infrastructure scaled_testbed(int factor, std::uint64_t seed = kDefaultNetworkSeed);

}  // namespace fogsched
