#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "velo/geo.hpp"
#include "velo/lts.hpp"
#include "velo/network.hpp"
#include "velo/rng.hpp"
#include "velo/routing.hpp"

namespace velo {

/// Grid city: rows x cols intersections, block_m apart, every k-th street an
/// arterial (70 km/h, 2 lanes, no bike facility), the rest quiet residential
/// streets (30 km/h, 1 lane).
///
/// Residential segment lengths carry a seeded meander factor in
/// [1 + meander_min, 1 + meander_max] while arterials stay chord-straight:
/// on real networks arterials are the direct routes, and without this every
/// staircase on an ideal grid ties and shortest paths stop preferring them.
struct GridCitySpec {
  std::size_t rows = 20;
  std::size_t cols = 20;
  double block_m = 100.0;
  std::size_t arterial_every = 4;  // 0 disables arterials
  std::uint64_t seed = 1;
  double meander_min = 0.02;
  double meander_max = 0.10;
  GeoPoint origin = GeoPoint(44.82, 11.60);
};

inline StreetNetwork gen_city(const GridCitySpec& spec) {
  if (spec.rows < 2 || spec.cols < 2)
    throw std::invalid_argument("grid needs at least 2 rows and 2 cols");
  if (!(spec.block_m > 0.0)) throw std::invalid_argument("block_m must be positive");

  const double meters_per_deg = kEarthRadiusM * (std::numbers::pi / 180.0);
  const double dlat = spec.block_m / meters_per_deg;
  const double dlon = spec.block_m / (meters_per_deg * std::cos(radians(spec.origin.lat())));

  StreetNetwork net;
  for (std::size_t r = 0; r < spec.rows; ++r)
    for (std::size_t c = 0; c < spec.cols; ++c)
      net.add_node(GeoPoint(spec.origin.lat() + static_cast<double>(r) * dlat,
                            spec.origin.lon() + static_cast<double>(c) * dlon));

  EdgeAttributes arterial;
  arterial.highway = HighwayClass::primary;
  arterial.maxspeed_kmh = 70.0;
  arterial.lanes = 2;

  EdgeAttributes residential;
  residential.highway = HighwayClass::residential;
  residential.maxspeed_kmh = 30.0;
  residential.lanes = 1;

  const auto node_at = [&](std::size_t r, std::size_t c) {
    return NodeId(static_cast<std::uint32_t>(r * spec.cols + c));
  };
  const auto on_arterial = [&](std::size_t line) {
    return spec.arterial_every > 0 && line % spec.arterial_every == 0;
  };
  // Meander factor derived per undirected segment, independent of iteration
  // order; both directions share one length.
  const auto segment_factor = [&](std::size_t r, std::size_t c, bool horizontal) {
    Rng rng = Rng::substream(spec.seed, (r * spec.cols + c) * 2 + (horizontal ? 0 : 1));
    return 1.0 + rng.uniform(spec.meander_min, spec.meander_max);
  };
  const auto add_street = [&](NodeId a, NodeId b, bool is_arterial, double factor) {
    const double chord = haversine_distance(net.node(a), net.node(b));
    const double length = chord * (is_arterial ? 1.0 : factor);
    const EdgeAttributes& attrs = is_arterial ? arterial : residential;
    net.add_edge(a, b, length, attrs);
    net.add_edge(b, a, length, attrs);
  };

  for (std::size_t r = 0; r < spec.rows; ++r) {
    for (std::size_t c = 0; c < spec.cols; ++c) {
      if (c + 1 < spec.cols)
        add_street(node_at(r, c), node_at(r, c + 1), on_arterial(r), segment_factor(r, c, true));
      if (r + 1 < spec.rows)
        add_street(node_at(r, c), node_at(r + 1, c), on_arterial(c), segment_factor(r, c, false));
    }
  }
  net.validate();
  return net;
}

/// Agent population: each agent rides one trip under the stress-aware
/// utility length x (1 + lambda * (LTS - 1)); lambda = 0 degenerates to the
/// plain shortest-length rider.
struct AgentSpec {
  std::size_t n_agents = 100;
  double safety_weight = 0.0;  // lambda >= 0
  double gps_noise_sigma_m = 0.0;
  double sample_spacing_m = 20.0;
  std::int64_t start_epoch_s = 1'620'025'200;  // 2021-05-03T07:00:00Z
};

/// Weight function for the stress-aware router.
inline auto stress_aware_weight(const StreetNetwork& net, const NetworkLts& lts, double lambda) {
  return [&net, &lts, lambda](EdgeId e) {
    return net.edge(e).length_m * (1.0 + lambda * (static_cast<double>(lts.at(e).value()) - 1.0));
  };
}

struct SynthResult {
  std::vector<Trajectory> trajectories;
  std::vector<std::vector<EdgeId>> ground_truth;  // parallel to trajectories
  std::size_t skipped_disconnected = 0;
};

namespace synth_detail {

inline std::string padded(const char* prefix, std::size_t value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, value);
  return buf;
}

}  // namespace synth_detail

/// Routes each agent between a random (or supplied) OD pair under the
/// stress-aware utility, densifies the path to sample_spacing_m, jitters
/// fixes with Gaussian noise and stamps them at 5 s intervals. Ground-truth
/// edge paths are retained for match-accuracy tests. Deterministic per seed.
inline SynthResult gen_trajectories(
    const StreetNetwork& net, const NetworkLts& lts, const AgentSpec& agents, std::uint64_t seed,
    const std::vector<std::pair<NodeId, NodeId>>& od_pairs = {}) {
  if (agents.safety_weight < 0.0) throw std::invalid_argument("safety_weight must be >= 0");
  if (!(agents.sample_spacing_m > 0.0))
    throw std::invalid_argument("sample_spacing_m must be positive");

  const double meters_per_deg = kEarthRadiusM * (std::numbers::pi / 180.0);
  const auto weight = stress_aware_weight(net, lts, agents.safety_weight);

  SynthResult out;
  for (std::size_t i = 0; i < agents.n_agents; ++i) {
    Rng rng = Rng::substream(seed, i);

    NodeId origin, dest;
    if (!od_pairs.empty()) {
      origin = od_pairs[i % od_pairs.size()].first;
      dest = od_pairs[i % od_pairs.size()].second;
    } else {
      origin = NodeId(static_cast<std::uint32_t>(rng.next_below(net.node_count())));
      dest = origin;
      for (int attempt = 0; attempt < 64 && dest == origin; ++attempt)
        dest = NodeId(static_cast<std::uint32_t>(rng.next_below(net.node_count())));
    }
    if (origin == dest) {
      ++out.skipped_disconnected;
      continue;
    }
    const auto path = try_shortest_path(net, origin, dest, weight);
    if (!path || path->edges.empty()) {
      ++out.skipped_disconnected;
      continue;
    }

    // Sample positions every sample_spacing_m of path length, endpoint
    // included; positions interpolate along each edge's chord.
    std::vector<GeoPoint> fixes;
    const double total = path->total_length_m;
    double cum = 0.0;
    std::size_t edge_index = 0;
    for (double s = 0.0;; s += agents.sample_spacing_m) {
      if (s >= total) {
        fixes.push_back(net.node(path->nodes.back()));
        break;
      }
      while (edge_index + 1 < path->edges.size() &&
             cum + net.edge(path->edges[edge_index]).length_m <= s)
        cum += net.edge(path->edges[edge_index++]).length_m;
      const Edge& e = net.edge(path->edges[edge_index]);
      const double frac = std::clamp((s - cum) / e.length_m, 0.0, 1.0);
      const GeoPoint& a = net.node(e.from);
      const GeoPoint& b = net.node(e.to);
      fixes.push_back(GeoPoint(a.lat() + frac * (b.lat() - a.lat()),
                               a.lon() + frac * (b.lon() - a.lon())));
    }

    std::vector<SpatioTemporalPoint> points;
    points.reserve(fixes.size());
    const std::int64_t t0 = agents.start_epoch_s + static_cast<std::int64_t>(i) * 3600;
    for (std::size_t j = 0; j < fixes.size(); ++j) {
      double lat = fixes[j].lat(), lon = fixes[j].lon();
      if (agents.gps_noise_sigma_m > 0.0) {
        const double east = agents.gps_noise_sigma_m * rng.next_normal();
        const double north = agents.gps_noise_sigma_m * rng.next_normal();
        lat += north / meters_per_deg;
        lon += east / (meters_per_deg * std::cos(radians(lat)));
      }
      points.emplace_back(t0 + static_cast<std::int64_t>(j) * 5, GeoPoint(lat, lon));
    }

    out.trajectories.emplace_back(synth_detail::padded("u", i + 1, 4),
                                  synth_detail::padded("t", i + 1, 5), std::move(points));
    out.ground_truth.push_back(path->edges);
  }
  return out;
}

}  // namespace velo
