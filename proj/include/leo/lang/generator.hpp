#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "leo/lang/vocab.hpp"
#include "leo/sim/env.hpp"
#include "leo/sim/navgraph.hpp"

namespace leo::lang {

// Number of paraphrase template banks available to describe_trajectory.
std::size_t n_styles();

struct Description {
  std::vector<int> tokens;          // BOS ... EOS
  std::string text;                 // detokenized, no specials
  std::vector<bool> hop_mentioned;  // one flag per hop of the trajectory
};

// Walks the trajectory emitting one templated clause per hop ("turn left ,
// go to the sofa") plus a terminal clause at the goal. Each hop clause is
// independently elided with probability elide_p; the terminal clause always
// stays. Deterministic in (seed, style). Turn direction comes from the
// signed heading change; |d| < 1e-9 reads as straight and d == pi as
// around.
Description describe_trajectory(const sim::NavGraph& g,
                                const sim::Trajectory& traj,
                                std::uint64_t seed, double elide_p,
                                std::size_t style,
                                double start_heading = 0.0);

struct DatasetItem {
  std::string path_id;
  std::string graph_id;
  std::string split;  // train | val_seen | val_unseen
  double heading = 0.0;
  std::vector<std::string> path;                 // node ids
  std::vector<std::vector<int>> instructions;    // M token-id sequences
  std::vector<std::string> instr_text;
};

struct Dataset {
  std::vector<DatasetItem> items;  // sorted by path_id

  std::vector<const DatasetItem*> split(const std::string& name) const;
};

// Multi-instruction view of one dataset item, resolved against its graph.
struct InstructionSet {
  std::string path_id;
  const sim::NavGraph* graph = nullptr;
  sim::Trajectory trajectory;
  double start_heading = 0.0;
  std::vector<std::vector<int>> instructions;
};

struct GenDataParams {
  std::size_t n_train_per_graph = 50;
  std::size_t n_valseen_per_graph = 10;
  std::size_t n_valunseen_per_graph = 25;
  std::size_t m = 3;
  double elide_p = 0.4;
  std::uint64_t seed = 0;
  std::size_t min_hops = 2;
  std::size_t max_hops = 4;
};

// Train and val_seen trajectories come from train_worlds (fresh samples
// each), val_unseen from the held-out worlds. Each trajectory carries M
// instructions with distinct style banks and independent elision draws;
// styles repeat with distinct sub-seeds when M exceeds the bank count.
Dataset generate_dataset(const std::vector<sim::NavGraph>& train_worlds,
                         const std::vector<sim::NavGraph>& unseen_worlds,
                         const GenDataParams& params);

// JSON-lines serialization, one canonical object per item, sorted by
// path_id.
std::string to_jsonl(const Dataset& ds);
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

// Resolves an item against its graph (graphs keyed by graph_id).
InstructionSet bind_item(const DatasetItem& item,
                         const std::vector<sim::NavGraph>& graphs);

}  // namespace leo::lang
