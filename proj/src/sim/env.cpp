#include "leo/sim/env.hpp"

#include <string>

#include "leo/rng.hpp"

namespace leo::sim {

std::vector<Candidate> navigable_actions(const NavGraph& g,
                                         const EnvState& state) {
  if (state.node < 0 || state.node >= static_cast<int>(g.nodes.size())) {
    throw LookupError("navigable_actions: node index " +
                      std::to_string(state.node) + " out of range");
  }
  std::vector<Candidate> out;
  const auto& slots = g.views[state.node];
  for (std::size_t j = 0; j < slots.size(); ++j) {
    const View& v = slots[j];
    if (v.neighbor < 0) continue;
    out.push_back(Candidate{static_cast<int>(j), v.neighbor, &v, v.heading,
                            v.elevation});
  }
  out.push_back(Candidate{});  // STOP
  return out;
}

EnvState step(const NavGraph& g, const EnvState& state,
              const Candidate& action) {
  if (state.done) {
    throw ContractError("step: episode already terminal");
  }
  if (action.is_stop()) {
    EnvState next = state;
    next.done = true;
    return next;
  }
  const auto& slots = g.views[state.node];
  if (action.view_index < 0 ||
      action.view_index >= static_cast<int>(slots.size()) ||
      slots[action.view_index].neighbor < 0 ||
      slots[action.view_index].neighbor != action.neighbor) {
    throw ContractError("step: action view " +
                        std::to_string(action.view_index) +
                        " is not navigable from node " +
                        g.nodes[state.node].id);
  }
  EnvState next;
  next.node = action.neighbor;
  next.heading = slots[action.view_index].heading;
  next.step_count = state.step_count + 1;
  next.done = false;
  return next;
}

Trajectory trajectory_from_nodes(const NavGraph& g,
                                 const std::vector<int>& nodes) {
  if (nodes.empty()) throw DataError("trajectory: empty node sequence");
  Trajectory t;
  t.nodes = nodes;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    const auto& slots = g.views[nodes[i]];
    int view_index = -1;
    for (std::size_t j = 0; j < slots.size(); ++j) {
      if (slots[j].neighbor == nodes[i + 1]) {
        view_index = static_cast<int>(j);
        break;
      }
    }
    if (view_index < 0) {
      throw DataError("trajectory: nodes " + g.nodes[nodes[i]].id + " and " +
                      g.nodes[nodes[i + 1]].id + " are not adjacent");
    }
    t.actions.push_back(view_index);
    t.length_m += g.edge_length(nodes[i], nodes[i + 1]);
  }
  t.actions.push_back(kStopAction);
  return t;
}

Trajectory sample_expert_trajectory(const NavGraph& g, std::uint64_t seed,
                                    std::size_t min_hops,
                                    std::size_t max_hops) {
  if (min_hops < 1) {
    throw ConfigError("sample_expert_trajectory: min_hops >= 1");
  }
  if (max_hops < min_hops) {
    throw ConfigError("sample_expert_trajectory: max_hops >= min_hops");
  }
  Rng rng(mix_seed(seed, "expert"));
  const std::size_t n = g.nodes.size();
  for (int attempt = 0; attempt < 400; ++attempt) {
    if (n < 2) break;
    const int a = static_cast<int>(rng.uniform_index(n));
    const int b = static_cast<int>(rng.uniform_index(n));
    if (a == b) continue;
    const std::vector<int> path = shortest_path(g, a, b);
    const std::size_t hops = path.size() - 1;
    if (hops < min_hops || hops > max_hops) continue;
    return trajectory_from_nodes(g, path);
  }
  throw SamplingError(
      "sample_expert_trajectory: no start/goal pair with hop count in [" +
      std::to_string(min_hops) + ", " + std::to_string(max_hops) +
      "] found in graph " + g.graph_id);
}

}  // namespace leo::sim
