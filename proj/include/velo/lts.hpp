#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "velo/network.hpp"

namespace velo {

/// Level of Traffic Stress: 1 (calm, suitable for children) .. 4 (expert only).
class LtsScore {
 public:
  LtsScore() = default;
  explicit LtsScore(int value) : value_(value) {
    if (value < 1 || value > 4)
      throw std::invalid_argument("LTS score must be in {1,2,3,4}, got " + std::to_string(value));
  }
  int value() const noexcept { return value_; }
  friend auto operator<=>(LtsScore, LtsScore) = default;

 private:
  int value_ = 1;
};

struct LtsResult {
  LtsScore score;
  std::string_view rule_id;
};

struct LtsRuleTrace {
  EdgeId edge;
  LtsScore score;
  std::string_view rule_id;
};

/// Attribute bag after default filling; exposed so tests can walk the table.
struct FilledAttributes {
  double maxspeed_kmh;
  int lanes_per_direction;
  bool parking;
  CyclewayType cycleway;
  HighwayClass highway;
};

inline double default_maxspeed_kmh(HighwayClass h) {
  switch (h) {
    case HighwayClass::residential: return 30.0;
    case HighwayClass::tertiary: return 50.0;
    case HighwayClass::secondary: return 50.0;
    case HighwayClass::primary: return 70.0;
    default: return 50.0;
  }
}

inline int default_lanes_per_direction(HighwayClass h) {
  return h == HighwayClass::residential ? 1 : 2;
}

inline FilledAttributes fill_defaults(const EdgeAttributes& attrs) {
  return FilledAttributes{
      attrs.maxspeed_kmh.value_or(default_maxspeed_kmh(attrs.highway)),
      attrs.lanes.value_or(default_lanes_per_direction(attrs.highway)),
      attrs.parking_present.value_or(false),
      attrs.cycleway,
      attrs.highway,
  };
}

// Decision table, first match wins. Speeds in km/h, lanes per direction.
//
//   D1 : cycleway is track/separated                      -> LTS 1
//   D2 : bike lane and maxspeed > 65                      -> LTS 4
//   D3a: maxspeed <= 30, 1 lane, calm class(*)            -> LTS 1
//   D3 : maxspeed <= 30, <= 1 lane                        -> LTS 2
//   D4 : bike lane, maxspeed <= 50, no parking            -> LTS 2
//   D4p: bike lane, maxspeed <= 50, parking               -> LTS 3
//   D5 : bike lane, 50 < maxspeed <= 65                   -> LTS 3
//   D6 : maxspeed <= 50, <= 2 lanes                       -> LTS 3
//   D7 : everything else                                  -> LTS 4
//
// (*) calm classes: residential, living_street, path, service, cycleway.
// D3 deliberately covers lane/shared/opposite cycleways too, not just bare
// mixed traffic: a painted lane on an already-calm street must not raise the
// score, or protection-monotonicity breaks.
inline LtsResult classify_edge(const EdgeAttributes& attrs) {
  const FilledAttributes f = fill_defaults(attrs);

  if (f.cycleway == CyclewayType::track) return {LtsScore(1), "D1"};

  const bool bike_lane = f.cycleway == CyclewayType::lane;
  if (bike_lane && f.maxspeed_kmh > 65.0) return {LtsScore(4), "D2"};

  if (f.maxspeed_kmh <= 30.0 && f.lanes_per_direction <= 1) {
    const bool calm_class =
        f.highway == HighwayClass::residential || f.highway == HighwayClass::living_street ||
        f.highway == HighwayClass::path || f.highway == HighwayClass::service ||
        f.highway == HighwayClass::cycleway;
    if (calm_class && f.lanes_per_direction == 1) return {LtsScore(1), "D3a"};
    return {LtsScore(2), "D3"};
  }

  if (bike_lane && f.maxspeed_kmh <= 50.0)
    return f.parking ? LtsResult{LtsScore(3), "D4p"} : LtsResult{LtsScore(2), "D4"};
  if (bike_lane && f.maxspeed_kmh <= 65.0) return {LtsScore(3), "D5"};

  if (f.maxspeed_kmh <= 50.0 && f.lanes_per_direction <= 2) return {LtsScore(3), "D6"};
  return {LtsScore(4), "D7"};
}

struct NetworkLts {
  std::vector<LtsScore> by_edge;               // indexed by EdgeId
  std::array<std::size_t, 5> histogram = {};   // histogram[1..4]
  std::vector<LtsRuleTrace> traces;            // one per edge, EdgeId order

  LtsScore at(EdgeId id) const { return by_edge[id.value]; }
};

/// Scores every edge. Deterministic, ordered by EdgeId.
inline NetworkLts classify_network(const StreetNetwork& net) {
  NetworkLts out;
  out.by_edge.reserve(net.edge_count());
  out.traces.reserve(net.edge_count());
  for (std::size_t i = 0; i < net.edge_count(); ++i) {
    const EdgeId id(static_cast<std::uint32_t>(i));
    const LtsResult r = classify_edge(net.edge(id).attrs);
    out.by_edge.push_back(r.score);
    out.traces.push_back({id, r.score, r.rule_id});
    ++out.histogram[static_cast<std::size_t>(r.score.value())];
  }
  return out;
}

}  // namespace velo
