#include "fogsched/workload.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "fogsched/error.hpp"
#include "fogsched/rng.hpp"

namespace fogsched {

using nlohmann::json;

void check_params(const DagGenParams& p) {
  if (p.L < 1) throw ConfigError("DagGenParams: L must be >= 1");
  if (!(p.fat > 0.0 && p.fat <= 1.0)) throw ConfigError("DagGenParams: fat must be in (0, 1]");
  if (!(p.density > 0.0 && p.density <= 1.0)) throw ConfigError("DagGenParams: density must be in (0, 1]");
  if (p.cycles_range.min <= 0 || p.cycles_range.min > p.cycles_range.max)
    throw ConfigError("DagGenParams: cycles_range must satisfy 0 < min <= max");
  if (p.ram_range.min < 0 || p.ram_range.min > p.ram_range.max)
    throw ConfigError("DagGenParams: ram_range must satisfy 0 <= min <= max");
  if (p.edge_bytes_range.min < 0 || p.edge_bytes_range.min > p.edge_bytes_range.max)
    throw ConfigError("DagGenParams: edge_bytes_range must satisfy 0 <= min <= max");
}

namespace {

std::vector<std::size_t> level_widths(std::size_t L, double fat, SplitMix64& rng) {
  const double root = std::sqrt(static_cast<double>(L));
  auto H = static_cast<std::size_t>(std::max(1.0, std::round(root / fat)));
  H = std::min(H, L);

  std::vector<double> raw(H);
  for (auto& r : raw) r = fat * root * rng.uniform(0.5, 1.5);
  const double scale = static_cast<double>(L) / std::accumulate(raw.begin(), raw.end(), 0.0);

  std::vector<std::size_t> width(H);
  std::vector<double> frac(H);
  std::size_t total = 0;
  for (std::size_t k = 0; k < H; ++k) {
    const double w = raw[k] * scale;
    width[k] = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(w)));
    frac[k] = w - std::floor(w);
    total += width[k];
  }

  if (total < L) {
    std::vector<std::size_t> idx(H);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return frac[a] > frac[b]; });
    for (std::size_t i = 0; total < L; i = (i + 1) % H, ++total) ++width[idx[i]];
  }
  while (total > L) {
    auto widest = std::max_element(width.begin(), width.end());  // first max = lowest level
    --*widest;
    --total;
  }
  return width;
}

}  // namespace

Dag generate_dag(const DagGenParams& params, std::uint64_t instance_seed) {
  check_params(params);
  SplitMix64 rng(instance_seed);
  const auto widths = level_widths(params.L, params.fat, rng);

  std::vector<std::vector<TaskId>> levels;
  TaskId next = 0;
  for (auto w : widths) {
    auto& level = levels.emplace_back();
    for (std::size_t i = 0; i < w; ++i) level.push_back(next++);
  }

  std::vector<Task> tasks(params.L);
  for (TaskId v = 0; v < params.L; ++v) {
    tasks[v].id = v;
    tasks[v].cycles = rng.uniform_int(params.cycles_range.min, params.cycles_range.max);
    tasks[v].ram = rng.uniform_int(params.ram_range.min, params.ram_range.max);
  }

  std::vector<Edge> edges;
  for (std::size_t k = 1; k < levels.size(); ++k) {
    const auto& prev = levels[k - 1];
    for (TaskId v : levels[k]) {
      const auto anchor = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(prev.size()) - 1));
      edges.push_back({prev[anchor], v, 0});
      for (std::size_t u = 0; u < prev.size(); ++u) {
        if (u == anchor) continue;
        if (rng.bernoulli(params.density)) edges.push_back({prev[u], v, 0});
      }
    }
  }
  std::sort(edges.begin(), edges.end(),
            [](const Edge& a, const Edge& b) { return std::tie(a.src, a.dst) < std::tie(b.src, b.dst); });
  for (auto& e : edges) e.bytes = rng.uniform_int(params.edge_bytes_range.min, params.edge_bytes_range.max);

  return Dag(std::move(tasks), std::move(edges));
}

std::vector<std::size_t> task_levels(const Dag& dag) {
  std::vector<std::size_t> level(dag.size(), 0);
  for (TaskId v : topological_order(dag))
    for (auto e : dag.out_edges(v)) {
      const auto dst = dag.edges()[e].dst;
      level[dst] = std::max(level[dst], level[v] + 1);
    }
  return level;
}

DagDataset generate_dataset(const DagGenParams& params, std::size_t count, std::string name) {
  check_params(params);
  if (count < 1) throw ConfigError("generate_dataset: count must be >= 1");
  DagDataset ds;
  ds.params = params;
  if (name.empty()) {
    std::ostringstream os;
    os << "L" << params.L << "_fat" << params.fat << "_density" << params.density << "_seed" << params.seed;
    name = os.str();
  }
  ds.name = std::move(name);
  ds.dags.reserve(count);
  for (std::size_t i = 0; i < count; ++i) ds.dags.push_back(generate_dag(params, params.seed + i));
  return ds;
}

std::vector<DagGenParams> topology_grid(std::size_t L, const DagGenParams& base) {
  std::vector<DagGenParams> grid;
  for (int f = 4; f <= 8; ++f)
    for (int d = 4; d <= 8; ++d) {
      DagGenParams p = base;
      p.L = L;
      p.fat = f / 10.0;
      p.density = d / 10.0;
      grid.push_back(p);
    }
  return grid;
}

// ---------------------------------------------------------------------------
// serialization

namespace {

json range_json(const Range<std::int64_t>& r) { return json::array({r.min, r.max}); }

json params_json(const DagGenParams& p) {
  return {{"L", p.L},
          {"fat", p.fat},
          {"density", p.density},
          {"cycles_range", range_json(p.cycles_range)},
          {"ram_range", range_json(p.ram_range)},
          {"edge_bytes_range", range_json(p.edge_bytes_range)},
          {"seed", p.seed}};
}

json dag_json(const Dag& dag) {
  json tasks = json::array();
  for (const auto& t : dag.tasks()) tasks.push_back({{"id", t.id}, {"cycles", t.cycles}, {"ram", t.ram}});
  json edges = json::array();
  for (const auto& e : dag.edges()) edges.push_back({{"src", e.src}, {"dst", e.dst}, {"bytes", e.bytes}});
  return {{"tasks", std::move(tasks)}, {"edges", std::move(edges)}};
}

struct LineContext {
  std::size_t line;
  std::string what;  // record name used in diagnostics
};

[[noreturn]] void fail(const LineContext& ctx, const std::string& msg) {
  throw ParseError("line " + std::to_string(ctx.line) + " (" + ctx.what + "): " + msg);
}

const json& field(const json& obj, const char* key, const LineContext& ctx) {
  if (!obj.is_object()) fail(ctx, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(ctx, std::string("missing field '") + key + "'");
  return *it;
}

std::int64_t int_field(const json& obj, const char* key, const LineContext& ctx) {
  const auto& v = field(obj, key, ctx);
  if (!v.is_number_integer()) fail(ctx, std::string("field '") + key + "' must be an integer");
  return v.get<std::int64_t>();
}

double num_field(const json& obj, const char* key, const LineContext& ctx) {
  const auto& v = field(obj, key, ctx);
  if (!v.is_number()) fail(ctx, std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

Range<std::int64_t> range_field(const json& obj, const char* key, const LineContext& ctx) {
  const auto& v = field(obj, key, ctx);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer())
    fail(ctx, std::string("field '") + key + "' must be [min, max] integers");
  return {v[0].get<std::int64_t>(), v[1].get<std::int64_t>()};
}

DagGenParams parse_params(const json& j, const LineContext& ctx) {
  DagGenParams p;
  const auto L = int_field(j, "L", ctx);
  if (L < 1) fail(ctx, "field 'L' must be >= 1");
  p.L = static_cast<std::size_t>(L);
  p.fat = num_field(j, "fat", ctx);
  p.density = num_field(j, "density", ctx);
  p.cycles_range = range_field(j, "cycles_range", ctx);
  p.ram_range = range_field(j, "ram_range", ctx);
  p.edge_bytes_range = range_field(j, "edge_bytes_range", ctx);
  const auto& seed = field(j, "seed", ctx);
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0))
    fail(ctx, "field 'seed' must be a non-negative integer");
  p.seed = seed.get<std::uint64_t>();
  return p;
}

Dag parse_dag(const json& j, const LineContext& ctx) {
  const auto& jt = field(j, "tasks", ctx);
  const auto& je = field(j, "edges", ctx);
  if (!jt.is_array() || !je.is_array()) fail(ctx, "'tasks' and 'edges' must be arrays");
  std::vector<Task> tasks;
  for (const auto& t : jt) {
    const auto id = int_field(t, "id", ctx);
    if (id < 0) fail(ctx, "task id must be >= 0");
    tasks.push_back({static_cast<TaskId>(id), int_field(t, "cycles", ctx), int_field(t, "ram", ctx)});
  }
  std::vector<Edge> edges;
  for (const auto& e : je) {
    const auto src = int_field(e, "src", ctx);
    const auto dst = int_field(e, "dst", ctx);
    if (src < 0 || dst < 0) fail(ctx, "edge endpoints must be >= 0");
    edges.push_back({static_cast<TaskId>(src), static_cast<TaskId>(dst), int_field(e, "bytes", ctx)});
  }
  Dag dag(std::move(tasks), std::move(edges));
  if (auto v = validate(dag); !v) fail(ctx, "invalid dag: " + v.errors.front());
  return dag;
}

}  // namespace

std::string dataset_to_string(const DagDataset& ds) {
  std::string out;
  json header = {{"name", ds.name}, {"params", params_json(ds.params)}, {"count", ds.dags.size()}};
  out += header.dump();
  out += '\n';
  for (const auto& d : ds.dags) {
    out += dag_json(d).dump();
    out += '\n';
  }
  return out;
}

DagDataset dataset_from_string(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  DagDataset ds;
  std::size_t lineno = 0;
  std::size_t expected = 0;
  bool have_header = false;

  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const LineContext ctx{lineno, have_header ? "dag record " + std::to_string(ds.dags.size()) : "header"};
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(ctx, std::string("malformed JSON: ") + e.what());
    }
    if (!have_header) {
      const auto& name = field(j, "name", ctx);
      if (!name.is_string()) fail(ctx, "field 'name' must be a string");
      ds.name = name.get<std::string>();
      ds.params = parse_params(field(j, "params", ctx), ctx);
      const auto count = int_field(j, "count", ctx);
      if (count < 1) fail(ctx, "field 'count' must be >= 1");
      expected = static_cast<std::size_t>(count);
      have_header = true;
    } else {
      ds.dags.push_back(parse_dag(j, ctx));
    }
  }
  if (!have_header) throw ParseError("line 1 (header): missing dataset header");
  if (ds.dags.size() != expected)
    throw ParseError("line " + std::to_string(lineno + 1) + " (dag record " + std::to_string(ds.dags.size()) +
                     "): expected " + std::to_string(expected) + " dag records, found " +
                     std::to_string(ds.dags.size()));
  return ds;
}

void save_dataset(const DagDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << dataset_to_string(ds);
  if (!out) throw Error("write failed: " + path.string());
}

DagDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open dataset " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return dataset_from_string(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace fogsched
