#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "leo/errors.hpp"

namespace leo::sim {

// One panoramic view slot. Slots with no neighbor are walls and carry the
// reserved wall feature (landmark category 0).
struct View {
  double heading = 0.0;    // radians in [0, 2pi)
  double elevation = 0.0;  // radians in [-pi/2, pi/2]
  int neighbor = -1;       // node index, -1 for wall
  std::vector<double> feature;
};

struct GraphNode {
  std::string id;
  std::array<double, 3> pos{};  // meters
  int landmark = 0;             // small-integer category, 0 reserved: wall
};

struct WorldParams {
  std::uint64_t seed = 0;
  std::size_t n_nodes = 30;
  std::size_t k_views = 8;
  std::size_t feat_dim = 20;
  double density = 3.0;  // target mean degree
  // Landmark categories including the reserved wall category 0. The
  // effective count shrinks if feat_dim cannot fit both one-hot blocks.
  std::size_t n_landmarks = 12;
};

// Immutable after generation or load; safe for concurrent readers.
struct NavGraph {
  std::string graph_id;
  std::vector<GraphNode> nodes;
  std::vector<std::pair<int, int>> edges;  // a < b, node indices
  std::vector<std::vector<View>> views;    // per node, k_views slots

  // Derived, rebuilt on load: neighbor -> (node, length) adjacency.
  std::vector<std::vector<std::pair<int, double>>> adjacency;

  std::size_t k_views() const { return views.empty() ? 0 : views[0].size(); }
  std::size_t feat_dim() const;
  int index_of(const std::string& node_id) const;  // LookupError if unknown
  double edge_length(int a, int b) const;

  void rebuild_adjacency();
};

// Deterministic synthetic world: positions in a bounded box scaled so
// typical edges run 2-4 m, a Euclidean MST for connectivity plus short
// extra edges up to the density target, and per-view features that are a
// function of (viewed landmark, heading bucket, seeded noise).
NavGraph generate_world(const WorldParams& params);

// Shortest-path distance in meters (Dijkstra over Euclidean edge lengths).
double geodesic(const NavGraph& g, int a, int b);
double geodesic(const NavGraph& g, const std::string& a,
                const std::string& b);

// Shortest path as a node-index sequence, deterministic tie-breaking.
std::vector<int> shortest_path(const NavGraph& g, int a, int b);

// Canonical serialization: keys sorted, floats with 17 significant digits.
std::string to_canonical_json(const NavGraph& g);
void save_world(const NavGraph& g, const std::filesystem::path& path);
NavGraph load_world(const std::filesystem::path& path);

// Checks the structural invariants; throws DataError on violation.
void validate_graph(const NavGraph& g);

}  // namespace leo::sim
