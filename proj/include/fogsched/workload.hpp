#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "fogsched/dag.hpp"

namespace fogsched {

template <typename T>
struct Range {
  T min{};
  T max{};

  bool operator==(const Range&) const = default;
};

struct DagGenParams {
  std::size_t L = 10;
  double fat = 0.4;
  double density = 0.4;
  Range<std::int64_t> cycles_range{100'000'000, 1'000'000'000};
  Range<std::int64_t> ram_range{10'000'000, 200'000'000};
  Range<std::int64_t> edge_bytes_range{100'000, 5'000'000};
  std::uint64_t seed = 0;

  bool operator==(const DagGenParams&) const = default;
};

// Throws ConfigError listing the first violated invariant.
void check_params(const DagGenParams& params);

struct DagDataset {
  std::string name;
  DagGenParams params;
  std::vector<Dag> dags;

  bool operator==(const DagDataset&) const = default;
};

// Layered generator.
//
// Levels: H = max(1, round(sqrt(L) / fat)), capped at L. Raw level widths are
// fat*sqrt(L)*U(0.5, 1.5), scaled to sum to L, floored with a minimum of one;
// the shortfall is handed out one task at a time to levels in order of
// decreasing fractional part (ties: lower level), and any excess is taken
// from the currently widest level (ties: lower level). Ids are assigned level
// by level, so id order is a topological order.
//
// Draw order for a given instance seed (SplitMix64):
//   1. H width factors;
//   2. per task in id order: cycles, then ram (uniform_int over the ranges);
//   3. per level k >= 1, per task v in the level: one parent index from level
//      k-1 (uniform_int), then one bernoulli(density) for every other task of
//      level k-1 in id order;
//   4. edge bytes for every edge, edges sorted by (src, dst).
Dag generate_dag(const DagGenParams& params, std::uint64_t instance_seed);

// Level index per task for DAGs built by generate_dag (longest path from an
// entry task, which coincides with the generator's level assignment).
std::vector<std::size_t> task_levels(const Dag& dag);

// Instance seeds are params.seed + 0 .. params.seed + count - 1.
DagDataset generate_dataset(const DagGenParams& params, std::size_t count, std::string name = {});

// The (L, fat, density) grid: L in {10, 15, ..., 50}, fat and density in
// {0.4, 0.5, ..., 0.8}. Returns 25 parameter sets for the given L.
std::vector<DagGenParams> topology_grid(std::size_t L, const DagGenParams& base = {});

// Line-delimited JSON: one header object {"name","params","count"} followed
// by one {"tasks":[{id,cycles,ram}],"edges":[{src,dst,bytes}]} object per line.
void save_dataset(const DagDataset& ds, const std::filesystem::path& path);
DagDataset load_dataset(const std::filesystem::path& path);

std::string dataset_to_string(const DagDataset& ds);
DagDataset dataset_from_string(const std::string& text);

}  // namespace fogsched
