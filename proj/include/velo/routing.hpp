#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "velo/ball_tree.hpp"
#include "velo/errors.hpp"
#include "velo/geo.hpp"
#include "velo/network.hpp"

namespace velo {

/// Edge weighting: Length in meters, or Time in seconds at a cruising speed
/// capped by the edge's maxspeed when that is lower.
struct WeightScheme {
  enum class Kind { length, time };

  Kind kind = Kind::length;
  double cruise_kmh = 15.0;

  static WeightScheme length() { return {Kind::length, 0.0}; }
  static WeightScheme time(double cruise_kmh = 15.0) { return {Kind::time, cruise_kmh}; }
};

inline double edge_weight(const WeightScheme& scheme, const Edge& edge) {
  if (scheme.kind == WeightScheme::Kind::length) return edge.length_m;
  const double speed_kmh = edge.attrs.maxspeed_kmh
                               ? std::min(scheme.cruise_kmh, *edge.attrs.maxspeed_kmh)
                               : scheme.cruise_kmh;
  return edge.length_m / (speed_kmh / 3.6);
}

struct RoutePath {
  std::vector<EdgeId> edges;
  std::vector<NodeId> nodes;  // edges.size() + 1 entries; [origin] when empty
  double total_weight = 0.0;
  double total_length_m = 0.0;
};

namespace routing_detail {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Plain binary-heap Dijkstra with lazy deletion; distances FROM source along
// edges selected by `out_edges(node)` yielding (edge id, head node, weight).
template <class OutFn>
inline std::vector<double> dijkstra(std::size_t node_count, NodeId source, OutFn&& out,
                                    std::span<const NodeId> stop_targets = {}) {
  std::vector<double> dist(node_count, kInf);
  using Entry = std::pair<double, std::uint32_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  dist[source.value] = 0.0;
  queue.emplace(0.0, source.value);

  std::size_t remaining = stop_targets.size();
  std::vector<bool> is_target;
  if (remaining) {
    is_target.resize(node_count, false);
    for (NodeId t : stop_targets) {
      if (!is_target[t.value]) is_target[t.value] = true;
      else --remaining;  // duplicate target
    }
  }

  while (!queue.empty()) {
    const auto [d, u] = queue.top();
    queue.pop();
    if (d > dist[u]) continue;  // stale entry
    if (remaining && is_target[u]) {
      is_target[u] = false;
      if (--remaining == 0) break;
    }
    out(NodeId(u), [&](EdgeId, NodeId head, double w) {
      const double nd = d + w;
      if (nd < dist[head.value]) {
        dist[head.value] = nd;
        queue.emplace(nd, head.value);
      }
    });
  }
  return dist;
}

// Reverse adjacency (in-edges per node), built on demand per query.
inline std::vector<std::vector<EdgeId>> reverse_adjacency(const StreetNetwork& net) {
  std::vector<std::vector<EdgeId>> in(net.node_count());
  for (std::size_t i = 0; i < net.edge_count(); ++i)
    in[net.edge(EdgeId(static_cast<std::uint32_t>(i))).to.value].push_back(
        EdgeId(static_cast<std::uint32_t>(i)));
  return in;
}

}  // namespace routing_detail

/// Weight-minimal path from origin to dest under an arbitrary positive edge
/// weight function `WeightFn: (EdgeId) -> double`. Among equal-weight
/// paths (1e-9 slack) returns the lexicographically smallest node sequence,
/// then smallest edge ids. origin == dest yields the empty path. Returns
/// nullopt when dest is unreachable.
template <class WeightFn>
std::optional<RoutePath> try_shortest_path(const StreetNetwork& net, NodeId origin, NodeId dest,
                                           WeightFn&& weight) {
  RoutePath path;
  path.nodes.push_back(origin);
  if (origin == dest) return path;

  // Distance-to-dest table via Dijkstra on the reversed graph; the greedy
  // forward walk below then only keeps moves that stay on some optimal path.
  const auto in_edges = routing_detail::reverse_adjacency(net);
  const auto dist_to_dest = routing_detail::dijkstra(
      net.node_count(), dest, [&](NodeId u, auto&& relax) {
        for (EdgeId e : in_edges[u.value]) relax(e, net.edge(e).from, weight(e));
      });

  const double total = dist_to_dest[origin.value];
  if (total == routing_detail::kInf) return std::nullopt;
  const double eps = 1e-9 * std::max(1.0, total);

  NodeId u = origin;
  double g = 0.0;
  std::size_t guard = 0;
  while (u != dest) {
    if (++guard > net.node_count() + 1)
      throw Error("shortest-path reconstruction did not terminate");
    const EdgeId* chosen = nullptr;
    for (const EdgeId& e : net.out_edges(u)) {
      const Edge& edge = net.edge(e);
      const double w = weight(e);
      if (std::abs(g + w + dist_to_dest[edge.to.value] - total) > eps) continue;
      if (!chosen) {
        chosen = &e;
        continue;
      }
      const Edge& best = net.edge(*chosen);
      if (edge.to < best.to || (edge.to == best.to && e < *chosen)) chosen = &e;
    }
    if (!chosen) throw Error("shortest-path reconstruction lost the optimal path");
    const Edge& edge = net.edge(*chosen);
    path.edges.push_back(*chosen);
    path.nodes.push_back(edge.to);
    path.total_length_m += edge.length_m;
    g += weight(*chosen);
    u = edge.to;
  }
  path.total_weight = g;
  return path;
}

template <class WeightFn>
RoutePath shortest_path(const StreetNetwork& net, NodeId origin, NodeId dest, WeightFn&& weight) {
  auto path = try_shortest_path(net, origin, dest, std::forward<WeightFn>(weight));
  if (!path)
    throw NoPathError("no path from node " + std::to_string(origin.value) + " to node " +
                      std::to_string(dest.value));
  return *std::move(path);
}

inline std::optional<RoutePath> try_shortest_path(const StreetNetwork& net,
                                                  const WeightScheme& scheme, NodeId origin,
                                                  NodeId dest) {
  return try_shortest_path(net, origin, dest,
                           [&](EdgeId e) { return edge_weight(scheme, net.edge(e)); });
}

inline RoutePath shortest_path(const StreetNetwork& net, const WeightScheme& scheme, NodeId origin,
                               NodeId dest) {
  return shortest_path(net, origin, dest,
                       [&](EdgeId e) { return edge_weight(scheme, net.edge(e)); });
}

/// Single-source distances to a target set, stopping once all targets settle.
template <class WeightFn>
std::vector<double> shortest_distances(const StreetNetwork& net, NodeId source,
                                       std::span<const NodeId> targets, WeightFn&& weight) {
  return routing_detail::dijkstra(
      net.node_count(), source,
      [&](NodeId u, auto&& relax) {
        for (EdgeId e : net.out_edges(u)) relax(e, net.edge(e).to, weight(e));
      },
      targets);
}

struct SnapResult {
  NodeId node;
  double distance_m = 0.0;
};

enum class RouteStatus { ok, snap_origin_exceeded, snap_dest_exceeded, disconnected };

inline std::string_view to_string(RouteStatus s) {
  switch (s) {
    case RouteStatus::ok: return "ok";
    case RouteStatus::snap_origin_exceeded: return "snap_origin_exceeded";
    case RouteStatus::snap_dest_exceeded: return "snap_dest_exceeded";
    case RouteStatus::disconnected: return "disconnected";
  }
  return "ok";
}

struct TrajectoryRoute {
  RouteStatus status = RouteStatus::ok;
  RoutePath path;          // valid when status == ok
  SnapResult origin_snap;  // valid unless snap_origin_exceeded
  SnapResult dest_snap;    // valid unless a snap failed
};

/// Snaps a trajectory's endpoints to the graph and routes between them.
/// Endpoints farther than max_snap_m from every node flag the trajectory
/// unprocessable instead of producing a silently wrong route.
inline TrajectoryRoute optimal_for_trajectory(const StreetNetwork& net, const WeightScheme& scheme,
                                              const BallTree& tree, const Trajectory& traj,
                                              double max_snap_m = 500.0) {
  TrajectoryRoute result;
  const BallTree::Hit o = tree.nearest(traj.front().loc());
  result.origin_snap = {o.id, o.distance_m};
  if (o.distance_m > max_snap_m) {
    result.status = RouteStatus::snap_origin_exceeded;
    return result;
  }
  const BallTree::Hit d = tree.nearest(traj.back().loc());
  result.dest_snap = {d.id, d.distance_m};
  if (d.distance_m > max_snap_m) {
    result.status = RouteStatus::snap_dest_exceeded;
    return result;
  }
  auto path = try_shortest_path(net, scheme, o.id, d.id);
  if (!path) {
    result.status = RouteStatus::disconnected;
    return result;
  }
  result.path = *std::move(path);
  return result;
}

}  // namespace velo
