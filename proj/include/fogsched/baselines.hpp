#pragma once

#include "fogsched/cost_model.hpp"
#include "fogsched/dag.hpp"
#include "fogsched/infra.hpp"
#include "fogsched/rng.hpp"

namespace fogsched {

// Tasks in rank order; each goes to the cheapest RAM-feasible remote server
// whose weighted cost (given the already placed parents) is below the local
// cost, otherwise it stays on the IoT device. Ties: smallest ordinal.
Placement greedy_place(const Dag& dag, const Infrastructure& infra, const Weights& w);

// Uniform server per task; a RAM-infeasible draw is redrawn, and after M
// failed draws the task stays local.
Placement random_place(const Dag& dag, const Infrastructure& infra, const Weights& w, SplitMix64& rng);

// Every task on the IoT device.
Placement local_only(const Dag& dag, const Infrastructure& infra, const Weights& w);

}  // namespace fogsched
