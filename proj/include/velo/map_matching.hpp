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
#include "velo/geo.hpp"
#include "velo/network.hpp"
#include "velo/routing.hpp"

namespace velo {

/// Maximum-likelihood matching model. Emission is an unnormalized Gaussian
/// over the perpendicular GPS residual; transition penalizes the gap between
/// network distance and great-circle displacement. All constants are
/// overridable; the defaults are this toolkit's declared parameterization.
struct MatchParams {
  double candidate_radius_m = 50.0;
  std::size_t max_candidates = 8;
  double emission_sigma_m = 10.0;
  double transition_beta_m = 5.0;
  double gap_split_s = 300.0;
  double glitch_speed_kmh = 60.0;
  double max_unmatchable_fraction = 0.5;
  /// Boundary edges traversed for no more than this many emission sigmas are
  /// endpoint-noise overhang, not travel, and are trimmed from the path.
  double boundary_trim_sigmas = 2.0;
};

/// One way a GPS fix may sit on the network: an edge, the offset along it,
/// and how far the fix is from that position.
struct CandidateProjection {
  std::size_t point_index = 0;
  EdgeId edge;
  double offset_m = 0.0;     // along the edge, in edge-length units
  double perp_dist_m = 0.0;  // fix to projected position
  GeoPoint position;         // projected position on the edge chord
  double emission_logp = 0.0;
};

struct MatchedPath {
  std::string traj_id;
  std::vector<EdgeId> edges;
  /// Per input point; nullopt for points skipped as unmatchable.
  std::vector<std::optional<CandidateProjection>> assignment;
  double matched_length_m = 0.0;
  double confidence = 0.0;  // joint log-likelihood of the decoded assignment
};

enum class MatchStatus { ok, too_few_candidates, lattice_disconnected };

inline std::string_view to_string(MatchStatus s) {
  switch (s) {
    case MatchStatus::ok: return "ok";
    case MatchStatus::too_few_candidates: return "too_few_candidates";
    case MatchStatus::lattice_disconnected: return "lattice_disconnected";
  }
  return "ok";
}

struct MatchResult {
  MatchStatus status = MatchStatus::ok;
  std::string reason;
  std::optional<MatchedPath> path;
};

struct MatchQuality {
  double mean_perp_m = 0.0;
  double max_perp_m = 0.0;
  double matched_length_m = 0.0;
  double raw_length_m = 0.0;
  double length_ratio = 0.0;  // matched / raw
};

/// Splits one user's time-sorted fix stream into trajectories: gaps above
/// gap_split_s start a new trip; exact-duplicate consecutive fixes and fixes
/// implying a speed above glitch_speed_kmh are dropped; trips with fewer than
/// two surviving fixes are discarded.
inline std::vector<Trajectory> aggregate(const std::string& user_id,
                                         std::span<const SpatioTemporalPoint> points,
                                         const MatchParams& params = {}) {
  std::vector<Trajectory> out;
  std::vector<SpatioTemporalPoint> current;
  std::size_t next_index = 0;

  const auto flush = [&] {
    if (current.size() >= 2) {
      out.emplace_back(user_id, user_id + ":" + std::to_string(next_index++),
                       std::move(current));
    }
    current.clear();
  };

  const double max_speed_ms = params.glitch_speed_kmh / 3.6;
  for (const SpatioTemporalPoint& p : points) {
    if (current.empty()) {
      current.push_back(p);
      continue;
    }
    const SpatioTemporalPoint& last = current.back();
    if (p.t() < last.t())
      throw std::invalid_argument("aggregate requires time-sorted input for user " + user_id);
    const double dt = static_cast<double>(p.t() - last.t());
    if (dt > params.gap_split_s) {
      flush();
      current.push_back(p);
      continue;
    }
    if (p.loc() == last.loc()) continue;  // stationary duplicate
    if (dt <= 0.0) continue;              // same-second relocation: glitch
    if (haversine_distance(last.loc(), p.loc()) / dt > max_speed_ms) continue;
    current.push_back(p);
  }
  flush();
  return out;
}

/// Stateless per-trajectory matcher over a fixed network + spatial index.
/// Shared state is read-only, so one Matcher may serve many threads.
class Matcher {
 public:
  Matcher(const StreetNetwork& net, const BallTree& tree, MatchParams params = {})
      : net_(net), tree_(tree), params_(params), incident_(net.node_count()) {
    for (std::size_t i = 0; i < net.edge_count(); ++i) {
      const EdgeId id(static_cast<std::uint32_t>(i));
      const Edge& e = net.edge(id);
      incident_[e.from.value].push_back(id);
      if (e.to != e.from) incident_[e.to.value].push_back(id);
      max_half_chord_m_ = std::max(max_half_chord_m_, 0.5 * net.edge_chord_m(id));
    }
  }

  const MatchParams& params() const noexcept { return params_; }

  /// Edges within candidate_radius_m of the fix, nearest first, capped at
  /// max_candidates. Empty means the point is unmatchable.
  std::vector<CandidateProjection> candidates(const SpatioTemporalPoint& point,
                                              std::size_t point_index) const {
    const GeoPoint& p = point.loc();
    const auto near_nodes = tree_.within_radius(p, params_.candidate_radius_m + max_half_chord_m_);

    std::vector<EdgeId> edges;
    for (const BallTree::Hit& hit : near_nodes)
      for (EdgeId e : incident_[hit.id.value]) edges.push_back(e);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    // Local tangent plane centered on the fix, axes in meters.
    const double meters_per_deg = kEarthRadiusM * (std::numbers::pi / 180.0);
    const double cos_lat = std::cos(radians(p.lat()));
    const auto plane = [&](const GeoPoint& g) {
      return std::pair{(g.lon() - p.lon()) * meters_per_deg * cos_lat,
                       (g.lat() - p.lat()) * meters_per_deg};
    };

    std::vector<CandidateProjection> result;
    for (EdgeId e : edges) {
      const Edge& edge = net_.edge(e);
      const auto [ax, ay] = plane(net_.node(edge.from));
      const auto [bx, by] = plane(net_.node(edge.to));
      const double dx = bx - ax, dy = by - ay;
      const double len2 = dx * dx + dy * dy;
      double frac = 0.0;
      if (len2 > 0.0) frac = std::clamp((-ax * dx - ay * dy) / len2, 0.0, 1.0);
      const double px = ax + frac * dx, py = ay + frac * dy;
      const double perp = std::hypot(px, py);
      if (perp > params_.candidate_radius_m) continue;

      CandidateProjection c;
      c.point_index = point_index;
      c.edge = e;
      c.offset_m = frac * edge.length_m;
      c.perp_dist_m = perp;
      const GeoPoint& a = net_.node(edge.from);
      const GeoPoint& b = net_.node(edge.to);
      c.position = GeoPoint(a.lat() + frac * (b.lat() - a.lat()),
                            a.lon() + frac * (b.lon() - a.lon()));
      const double sigma = params_.emission_sigma_m;
      c.emission_logp = -(perp * perp) / (2.0 * sigma * sigma);
      result.push_back(c);
    }
    std::sort(result.begin(), result.end(), [](const CandidateProjection& a, const CandidateProjection& b) {
      if (a.perp_dist_m != b.perp_dist_m) return a.perp_dist_m < b.perp_dist_m;
      return a.edge < b.edge;
    });
    if (result.size() > params_.max_candidates) result.resize(params_.max_candidates);
    return result;
  }

  /// Network travel distance between two candidate positions (meters), or
  /// +inf when the second position cannot be reached from the first.
  double route_distance(const CandidateProjection& a, const CandidateProjection& b) const {
    if (a.edge == b.edge && b.offset_m >= a.offset_m) return b.offset_m - a.offset_m;
    const Edge& ea = net_.edge(a.edge);
    const Edge& eb = net_.edge(b.edge);
    const NodeId target = eb.from;
    const auto dist = shortest_distances(net_, ea.to, std::span<const NodeId>{&target, 1},
                                         [&](EdgeId e) { return net_.edge(e).length_m; });
    const double between = dist[target.value];
    if (between == std::numeric_limits<double>::infinity()) return between;
    return (ea.length_m - a.offset_m) + between + b.offset_m;
  }

  /// Transition log-probability given the already-computed network distance
  /// and the great-circle displacement of the raw fixes.
  double transition_logp(double route_dist_m, double gc_dist_m) const {
    if (route_dist_m == std::numeric_limits<double>::infinity())
      return -std::numeric_limits<double>::infinity();
    return -std::abs(route_dist_m - gc_dist_m) / params_.transition_beta_m;
  }

  MatchResult match(const Trajectory& traj) const {
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    const auto points = traj.points();
    const std::size_t n = points.size();

    std::vector<std::vector<CandidateProjection>> lattice(n);
    std::vector<std::size_t> stages;  // point indices with candidates
    std::size_t unmatchable = 0;
    for (std::size_t i = 0; i < n; ++i) {
      lattice[i] = candidates(points[i], i);
      if (lattice[i].empty()) ++unmatchable;
      else stages.push_back(i);
    }

    MatchResult result;
    if (stages.empty() ||
        static_cast<double>(unmatchable) > params_.max_unmatchable_fraction * static_cast<double>(n)) {
      result.status = MatchStatus::too_few_candidates;
      result.reason = std::to_string(unmatchable) + " of " + std::to_string(n) +
                      " points have no candidate within " +
                      std::to_string(params_.candidate_radius_m) + " m";
      return result;
    }

    // Viterbi over the candidate lattice; gaps (skipped points) are bridged
    // by routing between the surrounding stages.
    std::vector<std::vector<double>> dp(stages.size());
    std::vector<std::vector<std::int32_t>> back(stages.size());
    dp[0].reserve(lattice[stages[0]].size());
    for (const CandidateProjection& c : lattice[stages[0]]) dp[0].push_back(c.emission_logp);
    back[0].assign(lattice[stages[0]].size(), -1);

    for (std::size_t k = 1; k < stages.size(); ++k) {
      const auto& prev = lattice[stages[k - 1]];
      const auto& cur = lattice[stages[k]];
      const double gc =
          haversine_distance(points[stages[k - 1]].loc(), points[stages[k]].loc());
      dp[k].assign(cur.size(), kNegInf);
      back[k].assign(cur.size(), -1);

      // One multi-target distance query per source candidate.
      std::vector<NodeId> targets;
      targets.reserve(cur.size());
      for (const CandidateProjection& c : cur) targets.push_back(net_.edge(c.edge).from);

      for (std::size_t a = 0; a < prev.size(); ++a) {
        if (dp[k - 1][a] == kNegInf) continue;
        const Edge& ea = net_.edge(prev[a].edge);
        const auto dist = shortest_distances(net_, ea.to, targets,
                                             [&](EdgeId e) { return net_.edge(e).length_m; });
        for (std::size_t b = 0; b < cur.size(); ++b) {
          double route;
          if (prev[a].edge == cur[b].edge && cur[b].offset_m >= prev[a].offset_m) {
            route = cur[b].offset_m - prev[a].offset_m;
          } else {
            const double between = dist[net_.edge(cur[b].edge).from.value];
            route = between == std::numeric_limits<double>::infinity()
                        ? between
                        : (ea.length_m - prev[a].offset_m) + between + cur[b].offset_m;
          }
          const double t = transition_logp(route, gc);
          if (t == kNegInf) continue;
          const double score = dp[k - 1][a] + t;
          if (score > dp[k][b]) {
            dp[k][b] = score;
            back[k][b] = static_cast<std::int32_t>(a);
          }
        }
      }
      for (std::size_t b = 0; b < cur.size(); ++b)
        if (dp[k][b] != kNegInf) dp[k][b] += cur[b].emission_logp;

      bool any = false;
      for (double v : dp[k])
        if (v != kNegInf) any = true;
      if (!any) {
        result.status = MatchStatus::lattice_disconnected;
        result.reason = "no feasible transition between points " +
                        std::to_string(stages[k - 1]) + " and " + std::to_string(stages[k]);
        return result;
      }
    }

    // Backtrack; ties resolved toward the lowest candidate index.
    std::vector<std::size_t> state(stages.size());
    {
      const auto& last = dp.back();
      std::size_t best = 0;
      for (std::size_t j = 1; j < last.size(); ++j)
        if (last[j] > last[best]) best = j;
      state.back() = best;
      for (std::size_t k = stages.size(); k-- > 1;)
        state[k - 1] = static_cast<std::size_t>(back[k][state[k]]);
    }

    MatchedPath path;
    path.traj_id = traj.traj_id();
    path.confidence = dp.back()[state.back()];
    path.assignment.assign(n, std::nullopt);
    for (std::size_t k = 0; k < stages.size(); ++k)
      path.assignment[stages[k]] = lattice[stages[k]][state[k]];

    path.edges.push_back(lattice[stages[0]][state[0]].edge);
    for (std::size_t k = 1; k < stages.size(); ++k) {
      const CandidateProjection& a = lattice[stages[k - 1]][state[k - 1]];
      const CandidateProjection& b = lattice[stages[k]][state[k]];
      if (a.edge == b.edge && b.offset_m >= a.offset_m) continue;
      const auto bridge = forward_path(net_.edge(a.edge).to, net_.edge(b.edge).from);
      path.edges.insert(path.edges.end(), bridge.begin(), bridge.end());
      path.edges.push_back(b.edge);
    }
    path.edges.erase(std::unique(path.edges.begin(), path.edges.end()), path.edges.end());

    // The traveled path runs from the first projected position to the last.
    // A boundary edge traversed for at most ~2 sigma is endpoint noise (the
    // first or last fix jittered a few meters onto the adjacent street), so
    // it is trimmed rather than reported as travel.
    const double trim_m = std::max(1e-6, params_.boundary_trim_sigmas * params_.emission_sigma_m);
    const CandidateProjection& first = lattice[stages.front()][state.front()];
    const CandidateProjection& last = lattice[stages.back()][state.back()];
    if (path.edges.size() >= 2 && path.edges.front() == first.edge &&
        net_.edge(first.edge).length_m - first.offset_m <= trim_m)
      path.edges.erase(path.edges.begin());
    if (path.edges.size() >= 2 && path.edges.back() == last.edge && last.offset_m <= trim_m)
      path.edges.pop_back();

    for (EdgeId e : path.edges) path.matched_length_m += net_.edge(e).length_m;
    result.path = std::move(path);
    return result;
  }

  MatchQuality quality(const MatchedPath& matched, const Trajectory& traj) const {
    MatchQuality q;
    std::size_t assigned = 0;
    for (const auto& c : matched.assignment) {
      if (!c) continue;
      ++assigned;
      q.mean_perp_m += c->perp_dist_m;
      q.max_perp_m = std::max(q.max_perp_m, c->perp_dist_m);
    }
    if (assigned) q.mean_perp_m /= static_cast<double>(assigned);
    q.matched_length_m = matched.matched_length_m;
    q.raw_length_m = trajectory_length(traj);
    q.length_ratio = q.raw_length_m > 0.0 ? q.matched_length_m / q.raw_length_m : 0.0;
    return q;
  }

 private:
  // Length-weighted Dijkstra with parent pointers; deterministic because
  // relaxations are strict and adjacency order is fixed.
  std::vector<EdgeId> forward_path(NodeId from, NodeId to) const {
    constexpr double kInf = std::numeric_limits<double>::infinity();
    if (from == to) return {};
    std::vector<double> dist(net_.node_count(), kInf);
    std::vector<EdgeId> parent(net_.node_count());
    std::vector<bool> has_parent(net_.node_count(), false);
    using Entry = std::pair<double, std::uint32_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
    dist[from.value] = 0.0;
    queue.emplace(0.0, from.value);
    while (!queue.empty()) {
      const auto [d, u] = queue.top();
      queue.pop();
      if (d > dist[u]) continue;
      if (NodeId(u) == to) break;
      for (EdgeId e : net_.out_edges(NodeId(u))) {
        const Edge& edge = net_.edge(e);
        const double nd = d + edge.length_m;
        if (nd < dist[edge.to.value]) {
          dist[edge.to.value] = nd;
          parent[edge.to.value] = e;
          has_parent[edge.to.value] = true;
          queue.emplace(nd, edge.to.value);
        }
      }
    }
    std::vector<EdgeId> edges;
    NodeId u = to;
    while (u != from) {
      if (!has_parent[u.value]) return {};  // unreachable; caller checked
      const EdgeId e = parent[u.value];
      edges.push_back(e);
      u = net_.edge(e).from;
    }
    std::reverse(edges.begin(), edges.end());
    return edges;
  }

  const StreetNetwork& net_;
  const BallTree& tree_;
  MatchParams params_;
  std::vector<std::vector<EdgeId>> incident_;
  double max_half_chord_m_ = 0.0;
};

}  // namespace velo
