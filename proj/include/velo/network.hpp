#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "velo/errors.hpp"
#include "velo/geo.hpp"

namespace velo {

/// Dense integer handle, distinct per Tag so node and edge ids cannot mix.
template <class Tag>
struct DenseId {
  std::uint32_t value = 0;

  constexpr DenseId() = default;
  constexpr explicit DenseId(std::uint32_t v) : value(v) {}

  friend constexpr auto operator<=>(DenseId, DenseId) = default;
};

using NodeId = DenseId<struct NodeIdTag>;
using EdgeId = DenseId<struct EdgeIdTag>;

enum class HighwayClass : std::uint8_t {
  motorway,
  motorway_link,
  trunk,
  primary,
  secondary,
  tertiary,
  unclassified,
  residential,
  living_street,
  service,
  cycleway,
  path,
  footway,
  pedestrian,
  track,
  other,
};

enum class CyclewayType : std::uint8_t { none, lane, track, shared, opposite };

inline std::string_view to_string(HighwayClass h) {
  switch (h) {
    case HighwayClass::motorway: return "motorway";
    case HighwayClass::motorway_link: return "motorway_link";
    case HighwayClass::trunk: return "trunk";
    case HighwayClass::primary: return "primary";
    case HighwayClass::secondary: return "secondary";
    case HighwayClass::tertiary: return "tertiary";
    case HighwayClass::unclassified: return "unclassified";
    case HighwayClass::residential: return "residential";
    case HighwayClass::living_street: return "living_street";
    case HighwayClass::service: return "service";
    case HighwayClass::cycleway: return "cycleway";
    case HighwayClass::path: return "path";
    case HighwayClass::footway: return "footway";
    case HighwayClass::pedestrian: return "pedestrian";
    case HighwayClass::track: return "track";
    case HighwayClass::other: return "other";
  }
  return "other";
}

inline HighwayClass highway_class_from_string(std::string_view s) {
  if (s == "motorway") return HighwayClass::motorway;
  if (s == "motorway_link") return HighwayClass::motorway_link;
  if (s == "trunk" || s == "trunk_link") return HighwayClass::trunk;
  if (s == "primary" || s == "primary_link") return HighwayClass::primary;
  if (s == "secondary" || s == "secondary_link") return HighwayClass::secondary;
  if (s == "tertiary" || s == "tertiary_link") return HighwayClass::tertiary;
  if (s == "unclassified") return HighwayClass::unclassified;
  if (s == "residential") return HighwayClass::residential;
  if (s == "living_street") return HighwayClass::living_street;
  if (s == "service") return HighwayClass::service;
  if (s == "cycleway") return HighwayClass::cycleway;
  if (s == "path") return HighwayClass::path;
  if (s == "footway") return HighwayClass::footway;
  if (s == "pedestrian") return HighwayClass::pedestrian;
  if (s == "track") return HighwayClass::track;
  return HighwayClass::other;
}

inline std::string_view to_string(CyclewayType c) {
  switch (c) {
    case CyclewayType::none: return "none";
    case CyclewayType::lane: return "lane";
    case CyclewayType::track: return "track";
    case CyclewayType::shared: return "shared";
    case CyclewayType::opposite: return "opposite";
  }
  return "none";
}

/// Per-edge attribute bag. `lanes` counts lanes per direction of travel (the
/// unit the stress model works in); parsers convert total-lane tags.
struct EdgeAttributes {
  HighwayClass highway = HighwayClass::other;
  std::optional<double> maxspeed_kmh;  // (0, 200] when present
  std::optional<int> lanes;            // [1, 12] when present
  CyclewayType cycleway = CyclewayType::none;
  std::optional<bool> parking_present;
  std::optional<std::string> name;
  bool bicycle_forbidden = false;  // bicycle=no tag

  friend bool operator==(const EdgeAttributes&, const EdgeAttributes&) = default;
};

struct Edge {
  NodeId from;
  NodeId to;
  double length_m = 0.0;
  EdgeAttributes attrs;
};

/// Directed street graph: two-way streets appear as two edges. Immutable
/// once built; safe to share across threads.
class StreetNetwork {
 public:
  NodeId add_node(GeoPoint p) {
    nodes_.push_back(p);
    out_.emplace_back();
    return NodeId(static_cast<std::uint32_t>(nodes_.size() - 1));
  }

  EdgeId add_edge(NodeId from, NodeId to, double length_m, EdgeAttributes attrs) {
    if (from.value >= nodes_.size() || to.value >= nodes_.size())
      throw std::invalid_argument("edge endpoint does not exist");
    if (!(length_m > 0.0))
      throw std::invalid_argument("edge length must be positive");
    edges_.push_back(Edge{from, to, length_m, std::move(attrs)});
    const EdgeId id(static_cast<std::uint32_t>(edges_.size() - 1));
    out_[from.value].push_back(id);
    return id;
  }

  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const GeoPoint& node(NodeId id) const { return nodes_[id.value]; }
  const Edge& edge(EdgeId id) const { return edges_[id.value]; }
  std::span<const EdgeId> out_edges(NodeId id) const { return out_[id.value]; }
  std::span<const GeoPoint> nodes() const noexcept { return nodes_; }
  std::span<const Edge> edges() const noexcept { return edges_; }

  /// Chord between an edge's endpoints.
  double edge_chord_m(EdgeId id) const {
    const Edge& e = edge(id);
    return haversine_distance(node(e.from), node(e.to));
  }

  /// Checks the structural invariants: positive lengths, lengths within
  /// [0.5x, 2x] of the endpoint chord (skipped for chords under 1 m),
  /// attribute ranges. Throws SchemaError on the first violation.
  void validate() const {
    for (std::size_t i = 0; i < edges_.size(); ++i) {
      const Edge& e = edges_[i];
      const std::string where = "edges[" + std::to_string(i) + "]";
      if (!(e.length_m > 0.0)) throw SchemaError("edge length must be positive", where + ".length_m");
      const double chord = haversine_distance(nodes_[e.from.value], nodes_[e.to.value]);
      if (chord >= 1.0 && (e.length_m < 0.5 * chord || e.length_m > 2.0 * chord))
        throw SchemaError("edge length " + std::to_string(e.length_m) +
                              " outside [0.5, 2]x chord " + std::to_string(chord),
                          where + ".length_m");
      if (e.attrs.maxspeed_kmh && !(*e.attrs.maxspeed_kmh > 0.0 && *e.attrs.maxspeed_kmh <= 200.0))
        throw SchemaError("maxspeed_kmh outside (0, 200]", where + ".maxspeed_kmh");
      if (e.attrs.lanes && !(*e.attrs.lanes >= 1 && *e.attrs.lanes <= 12))
        throw SchemaError("lanes outside [1, 12]", where + ".lanes");
    }
  }

 private:
  std::vector<GeoPoint> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<EdgeId>> out_;
};

struct FilterOptions {
  std::vector<HighwayClass> excluded = {HighwayClass::motorway, HighwayClass::motorway_link};
};

struct FilterResult {
  StreetNetwork network;
  /// old NodeId -> new NodeId; nullopt for dropped (isolated) nodes.
  std::vector<std::optional<NodeId>> node_map;
};

/// Keeps only edges bikes may use: excluded highway classes and bicycle=no
/// edges are removed, nodes left isolated are dropped, NodeIds recompacted.
inline FilterResult filter_bikeable(const StreetNetwork& net, const FilterOptions& options = {}) {
  const auto excluded = [&](HighwayClass h) {
    for (HighwayClass x : options.excluded)
      if (x == h) return true;
    return false;
  };

  std::vector<bool> keep_edge(net.edge_count(), false);
  std::vector<bool> keep_node(net.node_count(), false);
  for (std::size_t i = 0; i < net.edge_count(); ++i) {
    const Edge& e = net.edge(EdgeId(static_cast<std::uint32_t>(i)));
    if (e.attrs.bicycle_forbidden || excluded(e.attrs.highway)) continue;
    keep_edge[i] = true;
    keep_node[e.from.value] = true;
    keep_node[e.to.value] = true;
  }

  FilterResult result;
  result.node_map.resize(net.node_count());
  for (std::size_t i = 0; i < net.node_count(); ++i) {
    if (keep_node[i])
      result.node_map[i] = result.network.add_node(net.node(NodeId(static_cast<std::uint32_t>(i))));
  }
  for (std::size_t i = 0; i < net.edge_count(); ++i) {
    if (!keep_edge[i]) continue;
    const Edge& e = net.edge(EdgeId(static_cast<std::uint32_t>(i)));
    result.network.add_edge(*result.node_map[e.from.value], *result.node_map[e.to.value],
                            e.length_m, e.attrs);
  }
  return result;
}

}  // namespace velo

template <class Tag>
struct std::hash<velo::DenseId<Tag>> {
  std::size_t operator()(velo::DenseId<Tag> id) const noexcept {
    return std::hash<std::uint32_t>{}(id.value);
  }
};
