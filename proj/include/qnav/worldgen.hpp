#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "qnav/json_io.hpp"
#include "qnav/navgraph.hpp"
#include "qnav/rng.hpp"

namespace qnav {

struct UnsatisfiableConfig : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConnectivityRetriesExhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class WorldKind { grid_rooms, random_geometric };

inline std::string to_string(WorldKind k) {
  return k == WorldKind::grid_rooms ? "grid" : "geometric";
}
inline WorldKind parse_world_kind(const std::string& s) {
  if (s == "grid" || s == "grid-rooms") return WorldKind::grid_rooms;
  if (s == "geometric" || s == "random-geometric") return WorldKind::random_geometric;
  throw UnsatisfiableConfig("unknown world kind: " + s);
}

struct WorldConfig {
  WorldKind kind = WorldKind::grid_rooms;
  int n_nodes = 36;           // random-geometric only; grid size is rows*cols*room_size^2
  int feature_dim = 8;
  int n_categories = 8;
  double noise_sigma = 0.05;
  double connect_radius = 0.25;  // random-geometric, unit square in meters
  int room_rows = 3;
  int room_cols = 3;
  int room_size = 2;  // nodes per room side
  double doorway_fraction = 0.4;
  double jitter = 0.2;
  std::uint64_t seed = 1;
};

inline void validate(const WorldConfig& c) {
  if (c.feature_dim <= 0 || c.n_categories <= 0)
    throw UnsatisfiableConfig("feature_dim and n_categories must be positive");
  if (c.n_categories > c.feature_dim)
    throw UnsatisfiableConfig("n_categories must not exceed feature_dim");
  if (c.kind == WorldKind::grid_rooms) {
    if (c.room_rows <= 0 || c.room_cols <= 0 || c.room_size <= 0)
      throw UnsatisfiableConfig("grid room dimensions must be positive");
    if (c.doorway_fraction <= 0.0)
      throw UnsatisfiableConfig("doorway_fraction must be > 0, rooms would disconnect");
    if (c.jitter < 0.0 || c.jitter >= 0.5)
      throw UnsatisfiableConfig("jitter must lie in [0, 0.5)");
  } else {
    if (c.n_nodes <= 0) throw UnsatisfiableConfig("n_nodes must be positive");
  }
}

namespace detail {

// Category one-hot in the leading dims plus Gaussian noise everywhere.
inline std::vector<double> make_feature(int category, int dim, double sigma, SplitMix64& rng) {
  std::vector<double> f(static_cast<size_t>(dim), 0.0);
  f[static_cast<size_t>(category)] = 1.0;
  if (sigma > 0.0)
    for (double& x : f) x += sigma * rng.gaussian();
  return f;
}

}  // namespace detail

// Rooms on a rows x cols grid, room_size^2 nodes each, lattice edges inside
// rooms and a sampled subset of boundary edges ("doorways") between adjacent
// rooms. At least one doorway per adjacent room pair keeps the graph connected.
inline NavGraph gen_grid_rooms(const WorldConfig& cfg) {
  validate(cfg);
  if (cfg.kind != WorldKind::grid_rooms)
    throw UnsatisfiableConfig("gen_grid_rooms requires kind=grid");

  const int s = cfg.room_size;
  const int rows = cfg.room_rows * s;
  const int cols = cfg.room_cols * s;
  const int n = rows * cols;
  auto node_at = [cols](int r, int c) { return r * cols + c; };
  auto room_of = [&](int r, int c) { return (r / s) * cfg.room_cols + (c / s); };

  SplitMix64 cat_rng(derive_seed(cfg.seed, "categories"));
  std::vector<int> room_cat(static_cast<size_t>(cfg.room_rows * cfg.room_cols));
  for (int& c : room_cat) c = static_cast<int>(cat_rng.below(static_cast<std::uint64_t>(cfg.n_categories)));

  SplitMix64 jit_rng(derive_seed(cfg.seed, "jitter"));
  SplitMix64 feat_rng(derive_seed(cfg.seed, "features"));
  std::vector<NodeRecord> nodes;
  nodes.reserve(static_cast<size_t>(n));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      NodeRecord nr;
      nr.id = node_at(r, c);
      nr.pos.x = c + cfg.jitter * jit_rng.uniform(-1.0, 1.0);
      nr.pos.y = r + cfg.jitter * jit_rng.uniform(-1.0, 1.0);
      nr.category = room_cat[static_cast<size_t>(room_of(r, c))];
      nr.feature = detail::make_feature(nr.category, cfg.feature_dim, cfg.noise_sigma, feat_rng);
      nodes.push_back(std::move(nr));
    }
  }

  std::vector<std::pair<int, int>> edges;
  // Boundary edges grouped per adjacent room pair, in scan order.
  std::vector<std::vector<std::pair<int, int>>> boundaries;
  // Vertical borders.
  for (int rc = 0; rc < cfg.room_rows; ++rc) {
    for (int cc = 0; cc + 1 < cfg.room_cols; ++cc) {
      boundaries.emplace_back();
      int c = (cc + 1) * s - 1;
      for (int r = rc * s; r < (rc + 1) * s; ++r)
        boundaries.back().emplace_back(node_at(r, c), node_at(r, c + 1));
    }
  }
  // Horizontal borders.
  for (int rc = 0; rc + 1 < cfg.room_rows; ++rc) {
    for (int cc = 0; cc < cfg.room_cols; ++cc) {
      boundaries.emplace_back();
      int r = (rc + 1) * s - 1;
      for (int c = cc * s; c < (cc + 1) * s; ++c)
        boundaries.back().emplace_back(node_at(r, c), node_at(r + 1, c));
    }
  }
  // In-room lattice edges.
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols && room_of(r, c) == room_of(r, c + 1))
        edges.emplace_back(node_at(r, c), node_at(r, c + 1));
      if (r + 1 < rows && room_of(r, c) == room_of(r + 1, c))
        edges.emplace_back(node_at(r, c), node_at(r + 1, c));
    }
  }

  SplitMix64 door_rng(derive_seed(cfg.seed, "doorways"));
  for (auto& border : boundaries) {
    if (border.empty()) continue;
    int keep = std::max(
        1, static_cast<int>(std::llround(cfg.doorway_fraction * static_cast<double>(border.size()))));
    keep = std::min<int>(keep, static_cast<int>(border.size()));
    // Partial Fisher-Yates: the first `keep` entries are the doorways.
    for (int i = 0; i < keep; ++i) {
      size_t j = static_cast<size_t>(i) + door_rng.below(border.size() - static_cast<size_t>(i));
      std::swap(border[static_cast<size_t>(i)], border[j]);
      edges.push_back(border[static_cast<size_t>(i)]);
    }
  }

  return build_graph(std::move(nodes), edges);
}

// Uniform points in the unit square (meters), edges between pairs within
// connect_radius. Resampled with a fresh derived seed until connected.
inline NavGraph gen_random_geometric(const WorldConfig& cfg) {
  validate(cfg);
  if (cfg.kind != WorldKind::random_geometric)
    throw UnsatisfiableConfig("gen_random_geometric requires kind=geometric");
  const int n = cfg.n_nodes;
  constexpr int kMaxAttempts = 64;

  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    SplitMix64 pos_rng(derive_seed(cfg.seed, "geo-positions", static_cast<std::uint64_t>(attempt)));
    std::vector<Vec2> pos(static_cast<size_t>(n));
    for (Vec2& p : pos) {
      p.x = pos_rng.uniform();
      p.y = pos_rng.uniform();
    }
    std::vector<std::pair<int, int>> edges;
    for (int u = 0; u < n; ++u)
      for (int v = u + 1; v < n; ++v)
        if (euclid(pos[static_cast<size_t>(u)], pos[static_cast<size_t>(v)]) <= cfg.connect_radius)
          edges.emplace_back(u, v);

    // Quick connectivity probe before paying for full validation.
    std::vector<std::vector<int>> adj(static_cast<size_t>(n));
    for (auto [u, v] : edges) {
      adj[static_cast<size_t>(u)].push_back(v);
      adj[static_cast<size_t>(v)].push_back(u);
    }
    std::vector<char> vis(static_cast<size_t>(n), 0);
    std::vector<int> stack{0};
    vis[0] = 1;
    int reached = 1;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int v : adj[static_cast<size_t>(u)])
        if (!vis[static_cast<size_t>(v)]) {
          vis[static_cast<size_t>(v)] = 1;
          ++reached;
          stack.push_back(v);
        }
    }
    if (reached != n) continue;

    SplitMix64 anchor_rng(derive_seed(cfg.seed, "geo-anchors", static_cast<std::uint64_t>(attempt)));
    std::vector<Vec2> anchors(static_cast<size_t>(cfg.n_categories));
    for (Vec2& a : anchors) {
      a.x = anchor_rng.uniform();
      a.y = anchor_rng.uniform();
    }
    SplitMix64 feat_rng(derive_seed(cfg.seed, "geo-features", static_cast<std::uint64_t>(attempt)));
    std::vector<NodeRecord> nodes(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      NodeRecord& nr = nodes[static_cast<size_t>(i)];
      nr.id = i;
      nr.pos = pos[static_cast<size_t>(i)];
      int best = 0;
      double best_d = euclid(nr.pos, anchors[0]);
      for (int k = 1; k < cfg.n_categories; ++k) {
        double dk = euclid(nr.pos, anchors[static_cast<size_t>(k)]);
        if (dk < best_d) {
          best_d = dk;
          best = k;
        }
      }
      nr.category = best;
      nr.feature = detail::make_feature(best, cfg.feature_dim, cfg.noise_sigma, feat_rng);
    }
    return build_graph(std::move(nodes), edges);
  }
  throw ConnectivityRetriesExhausted("no connected geometric graph after " +
                                     std::to_string(kMaxAttempts) + " attempts");
}

inline NavGraph generate_world(const WorldConfig& cfg) {
  return cfg.kind == WorldKind::grid_rooms ? gen_grid_rooms(cfg) : gen_random_geometric(cfg);
}

inline std::string serialize_graph(const NavGraph& g) {
  std::string out;
  out += "{\"d\":" + std::to_string(g.feature_dim()) + ",\"nodes\":[\n";
  const auto& nodes = g.nodes();
  for (size_t i = 0; i < nodes.size(); ++i) {
    const NodeRecord& nr = nodes[i];
    out += "{\"id\":" + std::to_string(nr.id) + ",\"pos\":[" + fmt_double(nr.pos.x) + "," +
           fmt_double(nr.pos.y) + "],\"cat\":" + std::to_string(nr.category) +
           ",\"feat\":" + double_array_json(nr.feature) + "}";
    if (i + 1 < nodes.size()) out += ",";
    out += "\n";
  }
  out += "],\"edges\":[";
  const auto& edges = g.edges();
  for (size_t i = 0; i < edges.size(); ++i) {
    if (i) out += ",";
    out += "[" + std::to_string(edges[i].u) + "," + std::to_string(edges[i].v) + "]";
  }
  out += "]}\n";
  return out;
}

inline void save_graph(const NavGraph& g, const std::string& path) {
  atomic_write_file(path, serialize_graph(g));
}

inline NavGraph load_graph(const std::string& path) {
  nlohmann::json j = parse_json_file(path);
  if (!j.is_object() || !j.contains("d") || !j.contains("nodes") || !j.contains("edges"))
    throw SchemaError(path + ": graph file needs keys d, nodes, edges");
  if (!j["d"].is_number_integer() || !j["nodes"].is_array() || !j["edges"].is_array())
    throw SchemaError(path + ": malformed graph file");
  const int d = j["d"].get<int>();

  std::vector<NodeRecord> nodes;
  for (const auto& nj : j["nodes"]) {
    if (!nj.is_object() || !nj.contains("id") || !nj.contains("pos") || !nj.contains("cat") ||
        !nj.contains("feat"))
      throw SchemaError(path + ": node needs keys id, pos, cat, feat");
    if (!nj["pos"].is_array() || nj["pos"].size() != 2)
      throw SchemaError(path + ": node pos must be [x, y]");
    NodeRecord nr;
    nr.id = nj["id"].get<int>();
    nr.pos.x = nj["pos"][0].get<double>();
    nr.pos.y = nj["pos"][1].get<double>();
    nr.category = nj["cat"].get<int>();
    nr.feature = nj["feat"].get<std::vector<double>>();
    if (static_cast<int>(nr.feature.size()) != d)
      throw SchemaError(path + ": node " + std::to_string(nr.id) + " feat dim != d");
    nodes.push_back(std::move(nr));
  }
  std::vector<std::pair<int, int>> edges;
  for (const auto& ej : j["edges"]) {
    if (!ej.is_array() || ej.size() != 2)
      throw SchemaError(path + ": edge must be [u, v]");
    int u = ej[0].get<int>(), v = ej[1].get<int>();
    if (u >= v) throw SchemaError(path + ": edges must satisfy u < v");
    edges.emplace_back(u, v);
  }
  return build_graph(std::move(nodes), edges);
}

}  // namespace qnav
