#include "fogsched/infra.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fogsched/error.hpp"
#include "fogsched/rng.hpp"

namespace fogsched {

using nlohmann::json;

std::string to_string(ServerId id) {
  static const char* names[] = {"iot", "fog", "cloud"};
  return std::string(names[static_cast<int>(id.tier)]) + "/" + std::to_string(id.index);
}

std::size_t Infrastructure::iot_ordinal() const {
  for (std::size_t i = 0; i < servers.size(); ++i)
    if (servers[i].id.tier == Tier::Iot) return i;
  throw Error("infrastructure has no IoT device");
}

std::optional<std::size_t> Infrastructure::ordinal_of(ServerId id) const {
  for (std::size_t i = 0; i < servers.size(); ++i)
    if (servers[i].id == id) return i;
  return std::nullopt;
}

void check_infrastructure(const Infrastructure& infra) {
  const auto M = infra.servers.size();
  if (M < 2) throw ConfigError("infrastructure needs at least 2 servers");
  std::set<ServerId> ids;
  std::size_t iot = 0;
  for (const auto& s : infra.servers) {
    const auto name = "server " + to_string(s.id);
    if (s.id.index < 0) throw ConfigError(name + ": index must be >= 0");
    if (!ids.insert(s.id).second) throw ConfigError(name + ": duplicate server id");
    if (!(s.freq_hz > 0)) throw ConfigError(name + ": freq_hz must be > 0");
    if (s.cores < 1) throw ConfigError(name + ": cores must be >= 1");
    if (s.ram_bytes <= 0) throw ConfigError(name + ": ram_bytes must be > 0");
    if (!(s.utilization >= 0 && s.utilization <= 1)) throw ConfigError(name + ": utilization must be in [0,1]");
    if (s.id.tier == Tier::Iot) ++iot;
  }
  if (iot != 1) throw ConfigError("infrastructure must contain exactly one IoT device, found " + std::to_string(iot));

  const auto& p = infra.power;
  if (p.p_cpu_w < 0 || p.p_idle_w < 0 || p.p_tra_w < 0 || p.idle_time_s < 0)
    throw ConfigError("power: all values must be >= 0");
  if (p.p_idle_w > p.p_cpu_w) throw ConfigError("power: p_idle_w must not exceed p_cpu_w");

  const auto& n = infra.network;
  if (n.bandwidth.rows() != static_cast<Eigen::Index>(M) || n.bandwidth.cols() != static_cast<Eigen::Index>(M) ||
      n.latency.rows() != static_cast<Eigen::Index>(M) || n.latency.cols() != static_cast<Eigen::Index>(M))
    throw ConfigError("network tables must be " + std::to_string(M) + "x" + std::to_string(M));
  for (std::size_t a = 0; a < M; ++a)
    for (std::size_t b = a + 1; b < M; ++b) {
      const auto pair = to_string(infra.servers[a].id) + " <-> " + to_string(infra.servers[b].id);
      if (!(n.bandwidth(a, b) > 0) || n.bandwidth(a, b) != n.bandwidth(b, a))
        throw ConfigError("network: bandwidth for " + pair + " must be positive and symmetric");
      if (!(n.latency(a, b) >= 0) || n.latency(a, b) != n.latency(b, a))
        throw ConfigError("network: latency for " + pair + " must be non-negative and symmetric");
    }
}

NetworkModel generate_network(const std::vector<ServerSpec>& servers, const NetworkRanges& r, std::uint64_t seed) {
  const auto M = static_cast<Eigen::Index>(servers.size());
  NetworkModel net;
  net.bandwidth = Eigen::MatrixXd::Zero(M, M);
  net.latency = Eigen::MatrixXd::Zero(M, M);
  net.seed = seed;
  net.ranges = r;
  SplitMix64 rng(seed);
  for (Eigen::Index a = 0; a < M; ++a)
    for (Eigen::Index b = a + 1; b < M; ++b) {
      const bool cloud = servers[a].id.tier == Tier::Cloud || servers[b].id.tier == Tier::Cloud;
      const double bw = cloud ? rng.uniform(r.cloud_bandwidth_min, r.cloud_bandwidth_max)
                              : rng.uniform(r.fog_bandwidth_min, r.fog_bandwidth_max);
      const double lat = cloud ? r.cloud_latency_s : r.fog_latency_s;
      net.bandwidth(a, b) = net.bandwidth(b, a) = bw;
      net.latency(a, b) = net.latency(b, a) = lat;
    }
  return net;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

[[noreturn]] void schema(const std::string& msg) { throw ConfigError("infrastructure config: " + msg); }

const json& need(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) schema(where + " must be an object");
  auto it = obj.find(key);
  if (it == obj.end()) schema(where + ": missing field '" + key + "'");
  return *it;
}

double need_number(const json& obj, const char* key, const std::string& where) {
  const auto& v = need(obj, key, where);
  if (!v.is_number()) schema(where + ": field '" + key + "' must be a number");
  return v.get<double>();
}

std::int64_t need_int(const json& obj, const char* key, const std::string& where) {
  const auto& v = need(obj, key, where);
  if (!v.is_number_integer()) schema(where + ": field '" + key + "' must be an integer");
  return v.get<std::int64_t>();
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (auto k : known) ok = ok || it.key() == k;
    if (!ok) schema(where + ": unknown field '" + it.key() + "'");
  }
}

ServerId parse_id(const json& j, const std::string& where) {
  const auto tier = need_int(j, "tier", where);
  if (tier < 0 || tier > 2) schema(where + ": tier must be 0, 1 or 2");
  const auto index = need_int(j, "index", where);
  if (index < 0) schema(where + ": index must be >= 0");
  return {static_cast<Tier>(tier), static_cast<int>(index)};
}

json id_json(ServerId id) { return {{"tier", static_cast<int>(id.tier)}, {"index", id.index}}; }

}  // namespace

Infrastructure load_infrastructure(const std::string& config) {
  json root;
  try {
    root = json::parse(config);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("infrastructure config: malformed JSON: ") + e.what());
  }
  reject_unknown(root, {"servers", "power", "network"}, "root");

  Infrastructure infra;
  const auto& servers = need(root, "servers", "root");
  if (!servers.is_array()) schema("'servers' must be an array");
  for (std::size_t i = 0; i < servers.size(); ++i) {
    const auto where = "servers[" + std::to_string(i) + "]";
    const auto& s = servers[i];
    reject_unknown(s, {"tier", "index", "freq_hz", "cores", "ram_bytes", "utilization"}, where);
    ServerSpec spec;
    spec.id = parse_id(s, where);
    spec.freq_hz = need_number(s, "freq_hz", where);
    spec.cores = static_cast<int>(need_int(s, "cores", where));
    spec.ram_bytes = need_int(s, "ram_bytes", where);
    spec.utilization = s.contains("utilization") ? need_number(s, "utilization", where) : 0.0;
    infra.servers.push_back(spec);
  }

  const auto& power = need(root, "power", "root");
  reject_unknown(power, {"p_cpu_w", "p_idle_w", "p_tra_w", "idle_time_s"}, "power");
  infra.power.p_cpu_w = need_number(power, "p_cpu_w", "power");
  infra.power.p_idle_w = need_number(power, "p_idle_w", "power");
  infra.power.p_tra_w = need_number(power, "p_tra_w", "power");
  if (power.contains("idle_time_s")) infra.power.idle_time_s = need_number(power, "idle_time_s", "power");

  const auto& net = need(root, "network", "root");
  const auto& mode = need(net, "mode", "network");
  if (!mode.is_string()) schema("network: 'mode' must be a string");
  const auto M = static_cast<Eigen::Index>(infra.servers.size());

  if (mode == "generated") {
    reject_unknown(net, {"mode", "seed", "ranges"}, "network");
    const auto& seed = need(net, "seed", "network");
    if (!seed.is_number_integer() || (seed.is_number_integer() && !seed.is_number_unsigned() && seed.get<std::int64_t>() < 0))
      schema("network: 'seed' must be a non-negative integer");
    NetworkRanges r;
    if (net.contains("ranges")) {
      const auto& jr = net["ranges"];
      reject_unknown(jr, {"fog_bandwidth", "cloud_bandwidth", "fog_latency_s", "cloud_latency_s"}, "network.ranges");
      auto pair = [&](const char* key, double& lo, double& hi) {
        if (!jr.contains(key)) return;
        const auto& v = jr[key];
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
          schema(std::string("network.ranges: '") + key + "' must be [min, max]");
        lo = v[0].get<double>();
        hi = v[1].get<double>();
        if (!(lo > 0) || lo > hi) schema(std::string("network.ranges: '") + key + "' must satisfy 0 < min <= max");
      };
      pair("fog_bandwidth", r.fog_bandwidth_min, r.fog_bandwidth_max);
      pair("cloud_bandwidth", r.cloud_bandwidth_min, r.cloud_bandwidth_max);
      if (jr.contains("fog_latency_s")) r.fog_latency_s = need_number(jr, "fog_latency_s", "network.ranges");
      if (jr.contains("cloud_latency_s")) r.cloud_latency_s = need_number(jr, "cloud_latency_s", "network.ranges");
    }
    infra.network = generate_network(infra.servers, r, seed.get<std::uint64_t>());
  } else if (mode == "explicit") {
    reject_unknown(net, {"mode", "links"}, "network");
    const auto& links = need(net, "links", "network");
    if (!links.is_array()) schema("network: 'links' must be an array");
    infra.network.bandwidth = Eigen::MatrixXd::Constant(M, M, -1.0);
    infra.network.latency = Eigen::MatrixXd::Constant(M, M, -1.0);
    for (std::size_t i = 0; i < links.size(); ++i) {
      const auto where = "network.links[" + std::to_string(i) + "]";
      const auto& l = links[i];
      reject_unknown(l, {"a", "b", "bandwidth", "latency"}, where);
      const auto a = infra.ordinal_of(parse_id(need(l, "a", where), where + ".a"));
      const auto b = infra.ordinal_of(parse_id(need(l, "b", where), where + ".b"));
      if (!a || !b) schema(where + ": link references an unknown server");
      if (*a == *b) schema(where + ": link endpoints must differ");
      if (l.contains("bandwidth")) {
        const double bw = need_number(l, "bandwidth", where);
        if (!(bw > 0)) schema(where + ": bandwidth must be > 0");
        infra.network.bandwidth(*a, *b) = infra.network.bandwidth(*b, *a) = bw;
      }
      if (l.contains("latency")) {
        const double lat = need_number(l, "latency", where);
        if (!(lat >= 0)) schema(where + ": latency must be >= 0");
        infra.network.latency(*a, *b) = infra.network.latency(*b, *a) = lat;
      }
    }
    for (Eigen::Index a = 0; a < M; ++a) {
      infra.network.bandwidth(a, a) = 0.0;
      infra.network.latency(a, a) = 0.0;
      for (Eigen::Index b = a + 1; b < M; ++b) {
        const auto pair = to_string(infra.servers[a].id) + " <-> " + to_string(infra.servers[b].id);
        if (infra.network.bandwidth(a, b) < 0) schema("network: missing bandwidth for pair " + pair);
        if (infra.network.latency(a, b) < 0) schema("network: missing latency for pair " + pair);
      }
    }
  } else {
    schema("network: mode must be \"generated\" or \"explicit\"");
  }

  check_infrastructure(infra);
  return infra;
}

Infrastructure load_infrastructure_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open infrastructure config " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_infrastructure(buf.str());
}

std::string infrastructure_to_json(const Infrastructure& infra, bool explicit_links) {
  json servers = json::array();
  for (const auto& s : infra.servers)
    servers.push_back({{"tier", static_cast<int>(s.id.tier)},
                       {"index", s.id.index},
                       {"freq_hz", s.freq_hz},
                       {"cores", s.cores},
                       {"ram_bytes", s.ram_bytes},
                       {"utilization", s.utilization}});
  json power = {{"p_cpu_w", infra.power.p_cpu_w},
                {"p_idle_w", infra.power.p_idle_w},
                {"p_tra_w", infra.power.p_tra_w},
                {"idle_time_s", infra.power.idle_time_s}};
  json network;
  if (infra.network.seed && !explicit_links) {
    const auto& r = infra.network.ranges;
    network = {{"mode", "generated"},
               {"seed", *infra.network.seed},
               {"ranges",
                {{"fog_bandwidth", {r.fog_bandwidth_min, r.fog_bandwidth_max}},
                 {"cloud_bandwidth", {r.cloud_bandwidth_min, r.cloud_bandwidth_max}},
                 {"fog_latency_s", r.fog_latency_s},
                 {"cloud_latency_s", r.cloud_latency_s}}}};
  } else {
    json links = json::array();
    for (std::size_t a = 0; a < infra.size(); ++a)
      for (std::size_t b = a + 1; b < infra.size(); ++b)
        links.push_back({{"a", id_json(infra.servers[a].id)},
                         {"b", id_json(infra.servers[b].id)},
                         {"bandwidth", infra.bandwidth(a, b)},
                         {"latency", infra.latency(a, b)}});
    network = {{"mode", "explicit"}, {"links", std::move(links)}};
  }
  return json{{"servers", std::move(servers)}, {"power", std::move(power)}, {"network", std::move(network)}}.dump(2);
}

namespace {

ServerSpec make(Tier tier, int index, double freq, int cores, std::int64_t ram) {
  return {{tier, index}, freq, cores, ram, 0.0};
}

constexpr std::int64_t kMB = 1'000'000;
constexpr std::int64_t kGB = 1'000'000'000;

}  // namespace

Infrastructure scaled_testbed(int factor, std::uint64_t seed) {
  if (factor != 1 && factor != 2 && factor != 4)
    throw ConfigError("scaled_testbed: factor must be 1, 2 or 4, got " + std::to_string(factor));
  Infrastructure infra;
  infra.servers.push_back(make(Tier::Iot, 0, 1.0e9, 1, 512 * kMB));
  int fog = 0;
  for (int r = 0; r < factor; ++r) {
    infra.servers.push_back(make(Tier::Fog, fog++, 1.2e9, 4, 1 * kGB));
    infra.servers.push_back(make(Tier::Fog, fog++, 1.2e9, 4, 1 * kGB));
    infra.servers.push_back(make(Tier::Fog, fog++, 1.5e9, 4, 4 * kGB));
    infra.servers.push_back(make(Tier::Fog, fog++, 1.43e9, 4, 4 * kGB));
  }
  int cloud = 0;
  for (int r = 0; r < factor; ++r) {
    for (int i = 0; i < 6; ++i) infra.servers.push_back(make(Tier::Cloud, cloud++, 2.0e9, 8, 16 * kGB));
    for (int i = 0; i < 2; ++i) infra.servers.push_back(make(Tier::Cloud, cloud++, 2.4e9, 8, 24 * kGB));
  }
  infra.power = PowerProfile{};
  infra.network = generate_network(infra.servers, NetworkRanges{}, seed);
  check_infrastructure(infra);
  return infra;
}

Infrastructure default_testbed(std::uint64_t seed) { return scaled_testbed(1, seed); }

}  // namespace fogsched
