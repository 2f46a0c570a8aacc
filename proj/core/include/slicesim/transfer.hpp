#pragma once

#include <vector>

#include "slicesim/agents.hpp"

namespace slicesim::transfer {

/// Grow a trained N-agent population to M = new placements. Existing actors
/// are copied verbatim (their input is slice-local and width-fixed); each
/// existing critic's input layer gains zero columns at the new slices'
/// observation blocks and action slots, so its output is unchanged whenever
/// those blocks are zero. New agents start from the element-wise mean of
/// the existing agents (or fresh random with average_init=false), with the
/// averaged critic zero-extended the same way. Optimizer states are reset
/// and targets set equal to the online networks.
agents::MaddpgPopulation expand(const agents::MaddpgPopulation& pop,
                                std::vector<int> new_slice_node,
                                std::vector<int> new_slice_link, bool average_init = true,
                                sim::SeededRng* fresh_rng = nullptr);

/// Keep only the listed slices, in the order given (new index i is old
/// index survivors[i]). Critic input columns belonging to removed slices
/// are deleted; optimizer states reset; targets set to online.
agents::MaddpgPopulation contract(const agents::MaddpgPopulation& pop,
                                  const std::vector<int>& survivors);

} // namespace slicesim::transfer
