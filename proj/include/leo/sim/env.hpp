#pragma once

#include <cstdint>
#include <vector>

#include "leo/sim/navgraph.hpp"

namespace leo::sim {

// Sentinel action index for STOP; always the last candidate.
constexpr int kStopAction = -1;

struct EnvState {
  int node = 0;
  double heading = 0.0;
  int step_count = 0;
  bool done = false;
};

// One selectable action: either a linked view slot or STOP (view_index ==
// kStopAction, feature null).
struct Candidate {
  int view_index = kStopAction;
  int neighbor = -1;
  const View* view = nullptr;  // borrowed from the immutable graph
  double heading = 0.0;
  double elevation = 0.0;
  bool is_stop() const { return view_index == kStopAction; }
};

// Exactly the linked view slots in slot order, then STOP. Deterministic.
std::vector<Candidate> navigable_actions(const NavGraph& g,
                                         const EnvState& state);

// Deterministic transition. STOP leaves the position unchanged and marks
// the episode terminal. Throws ContractError if the action is not a
// candidate for this state.
EnvState step(const NavGraph& g, const EnvState& state,
              const Candidate& action);

struct Trajectory {
  std::vector<int> nodes;    // n_0 .. n_T
  std::vector<int> actions;  // chosen view indices; kStopAction terminates
  double length_m = 0.0;     // sum of traversed edge lengths

  bool ends_with_stop() const {
    return !actions.empty() && actions.back() == kStopAction;
  }
  std::size_t hops() const { return nodes.size() - 1; }
  int start() const { return nodes.front(); }
  int goal() const { return nodes.back(); }
};

// Start/goal pair whose shortest path has a hop count within
// [min_hops, max_hops]; the node sequence is that shortest path, actions
// follow its view slots and end with STOP. Throws SamplingError when no
// pair satisfies the bounds within the retry budget.
Trajectory sample_expert_trajectory(const NavGraph& g, std::uint64_t seed,
                                    std::size_t min_hops,
                                    std::size_t max_hops);

// Rebuilds the action list for a node path (used by dataset loading);
// validates adjacency.
Trajectory trajectory_from_nodes(const NavGraph& g,
                                 const std::vector<int>& nodes);

}  // namespace leo::sim
