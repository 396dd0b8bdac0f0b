#include "leo/sim/navgraph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <sstream>

#include <json.hpp>

#include "leo/rng.hpp"
#include "leo/util.hpp"

namespace leo::sim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double dist3(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

std::string node_name(std::size_t index, std::size_t n_nodes) {
  std::size_t width = 2;
  for (std::size_t v = 100; v < n_nodes; v *= 10) ++width;
  std::string digits = std::to_string(index);
  return "n" + std::string(width - digits.size(), '0') + digits;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(std::size_t n) : parent(n) {
    for (std::size_t i = 0; i < n; ++i) parent[i] = static_cast<int>(i);
  }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[a] = b;
    return true;
  }
};

}  // namespace

std::size_t NavGraph::feat_dim() const {
  for (const auto& vs : views) {
    for (const auto& v : vs) return v.feature.size();
  }
  return 0;
}

int NavGraph::index_of(const std::string& node_id) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].id == node_id) return static_cast<int>(i);
  }
  throw LookupError("unknown node '" + node_id + "' in graph " + graph_id);
}

double NavGraph::edge_length(int a, int b) const {
  return dist3(nodes[a].pos, nodes[b].pos);
}

void NavGraph::rebuild_adjacency() {
  adjacency.assign(nodes.size(), {});
  for (const auto& [a, b] : edges) {
    const double len = edge_length(a, b);
    adjacency[a].emplace_back(b, len);
    adjacency[b].emplace_back(a, len);
  }
  for (auto& nbrs : adjacency) std::sort(nbrs.begin(), nbrs.end());
}

NavGraph generate_world(const WorldParams& params) {
  if (params.n_nodes < 1) throw ConfigError("generate_world: n_nodes >= 1");
  if (params.k_views < 2) throw ConfigError("generate_world: k_views >= 2");
  if (params.feat_dim < 4) throw ConfigError("generate_world: feat_dim >= 4");
  if (params.density <= 0.0) {
    throw ConfigError("generate_world: density must be positive");
  }

  const std::size_t n = params.n_nodes;
  const std::size_t k = params.k_views;

  // Feature layout: landmark one-hot block, heading-bucket one-hot block,
  // any remainder is noise-only padding. Blocks shrink if feat_dim is tight.
  const std::size_t buckets =
      std::min({static_cast<std::size_t>(8), k, params.feat_dim - 2});
  const std::size_t landmarks =
      std::min(params.n_landmarks, params.feat_dim - buckets);

  const double spacing = 4.0;
  const double side = std::ceil(std::sqrt(static_cast<double>(n))) * spacing;
  const double slot_step = kTwoPi / static_cast<double>(k);

  for (int attempt = 0; attempt < 24; ++attempt) {
    Rng rng(mix_seed(params.seed, "world", static_cast<std::uint64_t>(attempt)));

    NavGraph g;
    g.graph_id = "g" + std::to_string(params.seed);
    g.nodes.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      GraphNode& node = g.nodes[i];
      node.id = node_name(i, n);
      node.landmark =
          1 + static_cast<int>(rng.uniform_index(std::max<std::size_t>(
                  1, landmarks - 1)));
      // keep nodes separated so edges stay in the 2-4 m band
      for (int tries = 0; tries < 40; ++tries) {
        node.pos = {rng.uniform(0.0, side), rng.uniform(0.0, side),
                    rng.uniform(0.0, 0.4)};
        bool ok = true;
        for (std::size_t j = 0; j < i; ++j) {
          if (dist3(node.pos, g.nodes[j].pos) < 1.8) {
            ok = false;
            break;
          }
        }
        if (ok) break;
      }
    }

    // candidate pairs by ascending length
    struct Pair {
      double len;
      int a, b;
    };
    std::vector<Pair> pairs;
    pairs.reserve(n * (n - 1) / 2);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) {
        pairs.push_back({dist3(g.nodes[a].pos, g.nodes[b].pos),
                         static_cast<int>(a), static_cast<int>(b)});
      }
    }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) {
      return std::tie(x.len, x.a, x.b) < std::tie(y.len, y.a, y.b);
    });

    const auto slot_of = [&](int from, int to) {
      const auto& pa = g.nodes[from].pos;
      const auto& pb = g.nodes[to].pos;
      double dir = std::atan2(pb[1] - pa[1], pb[0] - pa[0]);
      if (dir < 0) dir += kTwoPi;
      return static_cast<std::size_t>(std::llround(dir / slot_step)) % k;
    };

    std::vector<std::vector<int>> slot_taken(n, std::vector<int>(k, -1));
    const auto try_add = [&](int a, int b) {
      const std::size_t sa = slot_of(a, b);
      const std::size_t sb = slot_of(b, a);
      if (slot_taken[a][sa] != -1 || slot_taken[b][sb] != -1) return false;
      slot_taken[a][sa] = b;
      slot_taken[b][sb] = a;
      g.edges.emplace_back(a, b);
      return true;
    };

    // MST pass for connectivity, then short extra edges to the density
    // target.
    UnionFind uf(n);
    std::size_t components = n;
    for (const Pair& p : pairs) {
      if (components == 1) break;
      if (uf.find(p.a) != uf.find(p.b) && try_add(p.a, p.b)) {
        uf.unite(p.a, p.b);
        --components;
      }
    }
    if (components != 1) continue;  // slot conflicts broke connectivity

    const std::size_t target_edges = static_cast<std::size_t>(
        std::ceil(params.density * static_cast<double>(n) / 2.0));
    for (const Pair& p : pairs) {
      if (g.edges.size() >= target_edges) break;
      if (p.len > 4.8) break;
      if (uf.find(p.a) == uf.find(p.b)) {
        bool already = false;
        for (const auto& [ea, eb] : g.edges) {
          if (ea == std::min(p.a, p.b) && eb == std::max(p.a, p.b)) {
            already = true;
            break;
          }
        }
        if (already) continue;
      }
      if (try_add(p.a, p.b)) uf.unite(p.a, p.b);
    }

    std::sort(g.edges.begin(), g.edges.end());

    // views: every slot gets a feature; linked slots point across the edge
    g.views.assign(n, {});
    for (std::size_t i = 0; i < n; ++i) {
      g.views[i].resize(k);
      for (std::size_t j = 0; j < k; ++j) {
        View& v = g.views[i][j];
        v.heading = static_cast<double>(j) * slot_step;
        v.neighbor = slot_taken[i][j];
        if (v.neighbor >= 0) {
          const auto& pa = g.nodes[i].pos;
          const auto& pb = g.nodes[v.neighbor].pos;
          const double horiz = std::hypot(pb[0] - pa[0], pb[1] - pa[1]);
          v.elevation = std::atan2(pb[2] - pa[2], std::max(horiz, 1e-9));
        } else {
          v.elevation = 0.0;
        }
        const int lm = v.neighbor >= 0 ? g.nodes[v.neighbor].landmark : 0;
        const std::size_t bucket = j * buckets / k;
        v.feature.assign(params.feat_dim, 0.0);
        v.feature[static_cast<std::size_t>(lm)] = 1.0;
        v.feature[landmarks + bucket] = 1.0;
        Rng noise(mix_seed(params.seed, "feat",
                           static_cast<std::uint64_t>(i) * k + j));
        for (double& x : v.feature) x += 0.1 * noise.gaussian();
      }
    }

    g.rebuild_adjacency();
    return g;
  }
  throw ConfigError(
      "generate_world: could not build a connected world within the retry "
      "budget; raise density or k_views");
}

double geodesic(const NavGraph& g, int a, int b) {
  if (a < 0 || b < 0 || a >= static_cast<int>(g.nodes.size()) ||
      b >= static_cast<int>(g.nodes.size())) {
    throw LookupError("geodesic: node index out of range");
  }
  if (a == b) return 0.0;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(g.nodes.size(), inf);
  dist[a] = 0.0;
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  pq.emplace(0.0, a);
  while (!pq.empty()) {
    const auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    if (u == b) return d;
    for (const auto& [w, len] : g.adjacency[u]) {
      if (d + len < dist[w]) {
        dist[w] = d + len;
        pq.emplace(dist[w], w);
      }
    }
  }
  throw DataError("geodesic: graph is not connected");
}

double geodesic(const NavGraph& g, const std::string& a,
                const std::string& b) {
  return geodesic(g, g.index_of(a), g.index_of(b));
}

std::vector<int> shortest_path(const NavGraph& g, int a, int b) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(g.nodes.size(), inf);
  std::vector<int> prev(g.nodes.size(), -1);
  dist[a] = 0.0;
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  pq.emplace(0.0, a);
  while (!pq.empty()) {
    const auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    for (const auto& [w, len] : g.adjacency[u]) {
      if (d + len < dist[w]) {
        dist[w] = d + len;
        prev[w] = u;
        pq.emplace(dist[w], w);
      }
    }
  }
  if (!(dist[b] < inf)) {
    throw DataError("shortest_path: graph is not connected");
  }
  std::vector<int> path;
  for (int u = b; u != -1; u = prev[u]) path.push_back(u);
  std::reverse(path.begin(), path.end());
  return path;
}

namespace {

void append_json_double(std::string& out, double v) {
  out += format_double(v);
}

void append_feature(std::string& out, const std::vector<double>& f) {
  out += '[';
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (i) out += ',';
    append_json_double(out, f[i]);
  }
  out += ']';
}

}  // namespace

std::string to_canonical_json(const NavGraph& g) {
  std::string out;
  out += "{\"edges\":[";
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    if (i) out += ',';
    out += "[\"" + g.nodes[g.edges[i].first].id + "\",\"" +
           g.nodes[g.edges[i].second].id + "\"]";
  }
  out += "],\"graph_id\":\"" + g.graph_id + "\",\"nodes\":[";
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const GraphNode& n = g.nodes[i];
    if (i) out += ',';
    out += "{\"id\":\"" + n.id +
           "\",\"landmark\":" + std::to_string(n.landmark) + ",\"pos\":[";
    append_json_double(out, n.pos[0]);
    out += ',';
    append_json_double(out, n.pos[1]);
    out += ',';
    append_json_double(out, n.pos[2]);
    out += "]}";
  }
  out += "],\"views\":{";
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    if (i) out += ',';
    out += "\"" + g.nodes[i].id + "\":[";
    for (std::size_t j = 0; j < g.views[i].size(); ++j) {
      const View& v = g.views[i][j];
      if (j) out += ',';
      out += "{\"elevation\":";
      append_json_double(out, v.elevation);
      out += ",\"feature\":";
      append_feature(out, v.feature);
      out += ",\"heading\":";
      append_json_double(out, v.heading);
      out += ",\"neighbor\":";
      out += v.neighbor >= 0 ? "\"" + g.nodes[v.neighbor].id + "\"" : "null";
      out += '}';
    }
    out += ']';
  }
  out += "}}";
  return out;
}

void save_world(const NavGraph& g, const std::filesystem::path& path) {
  write_file(path, to_canonical_json(g));
}

NavGraph load_world(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("world file " + path.string() + ": " + e.what());
  }
  try {
    NavGraph g;
    g.graph_id = j.at("graph_id").get<std::string>();
    for (const auto& jn : j.at("nodes")) {
      GraphNode n;
      n.id = jn.at("id").get<std::string>();
      const auto& p = jn.at("pos");
      n.pos = {p.at(0).get<double>(), p.at(1).get<double>(),
               p.at(2).get<double>()};
      n.landmark = jn.at("landmark").get<int>();
      g.nodes.push_back(std::move(n));
    }
    for (const auto& je : j.at("edges")) {
      g.edges.emplace_back(g.index_of(je.at(0).get<std::string>()),
                           g.index_of(je.at(1).get<std::string>()));
    }
    std::sort(g.edges.begin(), g.edges.end());
    g.views.assign(g.nodes.size(), {});
    for (const auto& [nid, jviews] : j.at("views").items()) {
      const int ni = g.index_of(nid);
      for (const auto& jv : jviews) {
        View v;
        v.heading = jv.at("heading").get<double>();
        v.elevation = jv.at("elevation").get<double>();
        v.neighbor = jv.at("neighbor").is_null()
                         ? -1
                         : g.index_of(jv.at("neighbor").get<std::string>());
        v.feature = jv.at("feature").get<std::vector<double>>();
        g.views[ni].push_back(std::move(v));
      }
    }
    g.rebuild_adjacency();
    validate_graph(g);
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("world file " + path.string() +
                      ": missing or malformed field: " + e.what());
  }
}

void validate_graph(const NavGraph& g) {
  const std::size_t n = g.nodes.size();
  const std::size_t k = g.k_views();
  for (const auto& [a, b] : g.edges) {
    if (a < 0 || b < 0 || a >= static_cast<int>(n) ||
        b >= static_cast<int>(n)) {
      throw DataError("graph " + g.graph_id + ": edge endpoint out of range");
    }
    int found_a = 0, found_b = 0;
    for (const View& v : g.views[a]) found_a += (v.neighbor == b);
    for (const View& v : g.views[b]) found_b += (v.neighbor == a);
    if (found_a != 1 || found_b != 1) {
      throw DataError("graph " + g.graph_id + ": edge " + g.nodes[a].id +
                      "-" + g.nodes[b].id +
                      " must own exactly one view slot at each endpoint");
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (g.views[i].size() != k) {
      throw DataError("graph " + g.graph_id + ": ragged view slots");
    }
    for (std::size_t x = 0; x < k; ++x) {
      for (std::size_t y = x + 1; y < k; ++y) {
        if (g.views[i][x].heading == g.views[i][y].heading) {
          throw DataError("graph " + g.graph_id + ": duplicate view heading");
        }
      }
    }
  }
  if (n > 1) {
    // BFS connectivity
    std::vector<char> seen(n, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (const auto& [w, len] : g.adjacency[u]) {
        (void)len;
        if (!seen[w]) {
          seen[w] = 1;
          ++count;
          stack.push_back(w);
        }
      }
    }
    if (count != n) {
      throw DataError("graph " + g.graph_id + ": not connected");
    }
  }
}

}  // namespace leo::sim
