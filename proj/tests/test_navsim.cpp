#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "leo/rng.hpp"
#include "leo/sim/env.hpp"
#include "leo/sim/navgraph.hpp"
#include "leo/util.hpp"

using namespace leo;
using namespace leo::sim;

namespace {

// Independent distance oracle: Bellman-Ford over the edge list.
double bellman_ford(const NavGraph& g, int src, int dst) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(g.nodes.size(), inf);
  dist[src] = 0.0;
  for (std::size_t pass = 0; pass + 1 < g.nodes.size(); ++pass) {
    bool changed = false;
    for (const auto& [a, b] : g.edges) {
      const double len = g.edge_length(a, b);
      if (dist[a] + len < dist[b]) {
        dist[b] = dist[a] + len;
        changed = true;
      }
      if (dist[b] + len < dist[a]) {
        dist[a] = dist[b] + len;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return dist[dst];
}

// Unweighted hop-count oracle (breadth-first layers via Bellman-Ford on
// unit weights).
int min_hops_oracle(const NavGraph& g, int src, int dst) {
  const int inf = 1 << 28;
  std::vector<int> hops(g.nodes.size(), inf);
  hops[src] = 0;
  for (std::size_t pass = 0; pass + 1 < g.nodes.size(); ++pass) {
    for (const auto& [a, b] : g.edges) {
      hops[b] = std::min(hops[b], hops[a] + 1);
      hops[a] = std::min(hops[a], hops[b] + 1);
    }
  }
  return hops[dst];
}

WorldParams desk_params(std::uint64_t seed, std::size_t n_nodes = 30) {
  WorldParams p;
  p.seed = seed;
  p.n_nodes = n_nodes;
  return p;
}

}  // namespace

TEST_CASE("identical seed and params give byte-identical worlds") {
  const NavGraph g1 = generate_world(desk_params(7));
  const NavGraph g2 = generate_world(desk_params(7));
  CHECK(to_canonical_json(g1) == to_canonical_json(g2));

  const NavGraph g3 = generate_world(desk_params(8));
  CHECK(to_canonical_json(g1) != to_canonical_json(g3));
}

TEST_CASE("single-node world has no edges and only STOP") {
  const NavGraph g = generate_world(desk_params(3, 1));
  CHECK(g.edges.empty());
  const auto actions = navigable_actions(g, EnvState{});
  REQUIRE(actions.size() == 1);
  CHECK(actions[0].is_stop());
}

TEST_CASE("seed 7 world of 30 nodes is connected (BFS oracle)") {
  const NavGraph g = generate_world(desk_params(7));
  REQUIRE(g.nodes.size() == 30);
  std::vector<char> seen(g.nodes.size(), 0);
  std::vector<int> queue{0};
  seen[0] = 1;
  std::size_t reached = 1;
  while (!queue.empty()) {
    const int u = queue.back();
    queue.pop_back();
    for (const auto& [a, b] : g.edges) {
      const int w = (a == u) ? b : (b == u ? a : -1);
      if (w >= 0 && !seen[w]) {
        seen[w] = 1;
        ++reached;
        queue.push_back(w);
      }
    }
  }
  CHECK(reached == g.nodes.size());
  CHECK_NOTHROW(validate_graph(g));
}

TEST_CASE("typical edge lengths fall in the 2-4 m band") {
  const NavGraph g = generate_world(desk_params(7));
  REQUIRE(!g.edges.empty());
  std::size_t in_band = 0;
  for (const auto& [a, b] : g.edges) {
    const double len = g.edge_length(a, b);
    CHECK(len > 0.5);
    in_band += (len >= 1.8 && len <= 4.8);
  }
  CHECK(in_band * 10 >= g.edges.size() * 9);
}

TEST_CASE("navigable actions expose linked views plus STOP, features intact") {
  const NavGraph g = generate_world(desk_params(7));
  int checked_nodes = 0;
  for (std::size_t node = 0; node < g.nodes.size(); ++node) {
    EnvState s;
    s.node = static_cast<int>(node);
    const auto actions = navigable_actions(g, s);
    std::size_t linked = 0;
    for (const View& v : g.views[node]) linked += (v.neighbor >= 0);
    REQUIRE(actions.size() == linked + 1);
    CHECK(actions.back().is_stop());
    for (std::size_t i = 0; i + 1 < actions.size(); ++i) {
      const auto& c = actions[i];
      if (i) CHECK(c.view_index > actions[i - 1].view_index);
      REQUIRE(c.view == &g.views[node][c.view_index]);
      CHECK(c.view->feature == g.views[node][c.view_index].feature);
    }
    ++checked_nodes;
  }
  CHECK(checked_nodes == 30);
}

TEST_CASE("step semantics: STOP, reversal, step counting") {
  const NavGraph g = generate_world(desk_params(7));
  EnvState s;
  s.node = 0;

  const auto actions = navigable_actions(g, s);
  const EnvState stopped = step(g, s, actions.back());
  CHECK(stopped.node == s.node);
  CHECK(stopped.done);
  CHECK(stopped.step_count == 0);

  REQUIRE(actions.size() >= 2);
  const Candidate& move = actions.front();
  const EnvState after = step(g, s, move);
  CHECK(after.node == move.neighbor);
  CHECK(after.heading == move.heading);
  CHECK(after.step_count == 1);

  // reverse along the same edge
  const auto back_actions = navigable_actions(g, after);
  bool reversed = false;
  for (const Candidate& c : back_actions) {
    if (!c.is_stop() && c.neighbor == s.node) {
      const EnvState home = step(g, after, c);
      CHECK(home.node == s.node);
      CHECK(home.step_count == 2);
      reversed = true;
    }
  }
  CHECK(reversed);
}

TEST_CASE("step rejects foreign actions") {
  const NavGraph g = generate_world(desk_params(7));
  EnvState s;
  s.node = 0;
  Candidate bogus;
  bogus.view_index = 5;
  bogus.neighbor = 2;
  // only throws if slot 5 does not actually link node 0 to node 2
  if (g.views[0][5].neighbor != 2) {
    CHECK_THROWS_AS(step(g, s, bogus), ContractError);
  }
}

TEST_CASE("geodesic identities and Bellman-Ford agreement") {
  const NavGraph g = generate_world(desk_params(7));
  CHECK(geodesic(g, 4, 4) == 0.0);

  Rng rng(99);
  for (int i = 0; i < 20; ++i) {
    const int a = static_cast<int>(rng.uniform_index(g.nodes.size()));
    const int b = static_cast<int>(rng.uniform_index(g.nodes.size()));
    const double d = geodesic(g, a, b);
    CHECK(d == doctest::Approx(geodesic(g, b, a)).epsilon(1e-12));
    CHECK(d == doctest::Approx(bellman_ford(g, a, b)).epsilon(1e-9));
  }
}

TEST_CASE("geodesic triangle inequality on sampled triples") {
  const NavGraph g = generate_world(desk_params(11));
  Rng rng(5);
  for (int i = 0; i < 40; ++i) {
    const int a = static_cast<int>(rng.uniform_index(g.nodes.size()));
    const int b = static_cast<int>(rng.uniform_index(g.nodes.size()));
    const int c = static_cast<int>(rng.uniform_index(g.nodes.size()));
    CHECK(geodesic(g, a, c) <= geodesic(g, a, b) + geodesic(g, b, c) + 1e-9);
  }
}

TEST_CASE("geodesic unknown node is a lookup error") {
  const NavGraph g = generate_world(desk_params(7));
  CHECK_THROWS_AS(geodesic(g, "bogus", g.nodes[0].id), LookupError);
}

TEST_CASE("expert trajectories are optimal shortest paths") {
  const NavGraph g = generate_world(desk_params(7));
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const Trajectory t = sample_expert_trajectory(g, seed, 2, 5);
    REQUIRE(t.nodes.size() >= 3);
    CHECK(t.hops() >= 2);
    CHECK(t.hops() <= 5);
    CHECK(t.ends_with_stop());

    // bookkeeping identity: stored length equals the sum of edge lengths
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < t.nodes.size(); ++i) {
      total += g.edge_length(t.nodes[i], t.nodes[i + 1]);
    }
    CHECK(t.length_m == doctest::Approx(total).epsilon(1e-12));

    // shortest in meters and in hops, against the oracles
    CHECK(t.length_m ==
          doctest::Approx(geodesic(g, t.start(), t.goal())).epsilon(1e-9));
    CHECK(static_cast<int>(t.hops()) ==
          min_hops_oracle(g, t.start(), t.goal()));
  }
}

TEST_CASE("single-hop expert request yields a 2-node trajectory") {
  const NavGraph g = generate_world(desk_params(7));
  const Trajectory t = sample_expert_trajectory(g, 1, 1, 1);
  CHECK(t.nodes.size() == 2);
  CHECK(t.actions.size() == 2);
  CHECK(t.actions.back() == kStopAction);
}

TEST_CASE("unsatisfiable hop bounds raise a sampling error") {
  const NavGraph g = generate_world(desk_params(3, 2));
  CHECK_THROWS_AS(sample_expert_trajectory(g, 1, 50, 60), SamplingError);
}

TEST_CASE("world file round-trip is canonical and exact") {
  const NavGraph g = generate_world(desk_params(7));
  const auto path =
      std::filesystem::temp_directory_path() / "leonav_test_world.json";
  save_world(g, path);
  const NavGraph loaded = load_world(path);
  CHECK(to_canonical_json(loaded) == to_canonical_json(g));
  std::filesystem::remove(path);
}

TEST_CASE("world file with bad JSON is a format error") {
  const auto path =
      std::filesystem::temp_directory_path() / "leonav_bad_world.json";
  write_file(path, "{not json");
  CHECK_THROWS_AS(load_world(path), FormatError);
  std::filesystem::remove(path);
}
