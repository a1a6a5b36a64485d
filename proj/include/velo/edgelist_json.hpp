#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <unordered_map>

#include <json.hpp>

#include "velo/errors.hpp"
#include "velo/network.hpp"

namespace velo {

/// Edge-list fixture format:
///   { "nodes": [{"id", "lat", "lon"}],
///     "edges": [{"from", "to", "length_m"?, "highway", "maxspeed_kmh"?,
///                "lanes"?, "cycleway"?, "parking"?, "oneway"?, "name"?}] }
/// Node ids may be arbitrary non-negative integers; they are remapped to
/// dense handles in array order. Absent length_m is computed from the
/// endpoint chord; oneway defaults to false, which synthesizes the reverse
/// edge. Semantics are identical to a parsed OSM network.
inline StreetNetwork load_edgelist_json(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }

  if (!doc.is_object()) throw SchemaError("document must be an object", "$");
  if (!doc.contains("nodes") || !doc["nodes"].is_array())
    throw SchemaError("missing or non-array member", "nodes");
  if (!doc.contains("edges") || !doc["edges"].is_array())
    throw SchemaError("missing or non-array member", "edges");

  StreetNetwork net;
  std::unordered_map<std::uint64_t, NodeId> by_file_id;
  std::size_t index = 0;
  for (const auto& n : doc["nodes"]) {
    const std::string where = "nodes[" + std::to_string(index++) + "]";
    if (!n.is_object() || !n.contains("id") || !n.contains("lat") || !n.contains("lon"))
      throw SchemaError("node needs id, lat, lon", where);
    if (!n["id"].is_number_unsigned()) throw SchemaError("id must be a non-negative integer", where + ".id");
    if (!n["lat"].is_number() || !n["lon"].is_number())
      throw SchemaError("lat/lon must be numbers", where);
    const std::uint64_t id = n["id"].get<std::uint64_t>();
    if (by_file_id.contains(id)) throw SchemaError("duplicate node id " + std::to_string(id), where + ".id");
    GeoPoint p;
    try {
      p = GeoPoint(n["lat"].get<double>(), n["lon"].get<double>());
    } catch (const std::invalid_argument& e) {
      throw SchemaError(e.what(), where);
    }
    by_file_id.emplace(id, net.add_node(p));
  }

  index = 0;
  for (const auto& e : doc["edges"]) {
    const std::string where = "edges[" + std::to_string(index++) + "]";
    if (!e.is_object() || !e.contains("from") || !e.contains("to"))
      throw SchemaError("edge needs from and to", where);
    const auto lookup = [&](const char* key) {
      if (!e[key].is_number_unsigned())
        throw SchemaError("must be a non-negative integer node id", where + "." + key);
      const std::uint64_t id = e[key].get<std::uint64_t>();
      const auto it = by_file_id.find(id);
      if (it == by_file_id.end())
        throw SchemaError("references unknown node " + std::to_string(id), where + "." + key);
      return it->second;
    };
    const NodeId from = lookup("from");
    const NodeId to = lookup("to");

    EdgeAttributes attrs;
    if (e.contains("highway")) {
      if (!e["highway"].is_string()) throw SchemaError("highway must be a string", where + ".highway");
      attrs.highway = highway_class_from_string(e["highway"].get<std::string>());
    }
    if (e.contains("maxspeed_kmh")) {
      if (!e["maxspeed_kmh"].is_number()) throw SchemaError("must be a number", where + ".maxspeed_kmh");
      attrs.maxspeed_kmh = e["maxspeed_kmh"].get<double>();
    }
    if (e.contains("lanes")) {
      if (!e["lanes"].is_number_integer()) throw SchemaError("must be an integer", where + ".lanes");
      attrs.lanes = e["lanes"].get<int>();
    }
    if (e.contains("cycleway")) {
      if (!e["cycleway"].is_string()) throw SchemaError("must be a string", where + ".cycleway");
      const std::string c = e["cycleway"].get<std::string>();
      if (c == "none") attrs.cycleway = CyclewayType::none;
      else if (c == "lane") attrs.cycleway = CyclewayType::lane;
      else if (c == "track" || c == "separated") attrs.cycleway = CyclewayType::track;
      else if (c == "shared") attrs.cycleway = CyclewayType::shared;
      else if (c == "opposite") attrs.cycleway = CyclewayType::opposite;
      else throw SchemaError("unknown cycleway value '" + c + "'", where + ".cycleway");
    }
    if (e.contains("parking")) {
      if (!e["parking"].is_boolean()) throw SchemaError("must be a boolean", where + ".parking");
      attrs.parking_present = e["parking"].get<bool>();
    }
    if (e.contains("name")) {
      if (!e["name"].is_string()) throw SchemaError("must be a string", where + ".name");
      attrs.name = e["name"].get<std::string>();
    }
    if (e.contains("bicycle_forbidden")) {
      if (!e["bicycle_forbidden"].is_boolean())
        throw SchemaError("must be a boolean", where + ".bicycle_forbidden");
      attrs.bicycle_forbidden = e["bicycle_forbidden"].get<bool>();
    }

    double length = haversine_distance(net.node(from), net.node(to));
    if (e.contains("length_m")) {
      if (!e["length_m"].is_number()) throw SchemaError("must be a number", where + ".length_m");
      length = e["length_m"].get<double>();
    }
    bool oneway = false;
    if (e.contains("oneway")) {
      if (!e["oneway"].is_boolean()) throw SchemaError("must be a boolean", where + ".oneway");
      oneway = e["oneway"].get<bool>();
    }

    try {
      net.add_edge(from, to, length, attrs);
      if (!oneway) net.add_edge(to, from, length, attrs);
    } catch (const std::invalid_argument& ex) {
      throw SchemaError(ex.what(), where);
    }
  }

  try {
    net.validate();
  } catch (const SchemaError&) {
    throw;
  }
  return net;
}

/// Serializes every directed edge explicitly (oneway: true), so a round trip
/// reproduces the network structurally, edge order included.
inline void save_edgelist_json(std::ostream& out, const StreetNetwork& net) {
  nlohmann::json doc;
  doc["nodes"] = nlohmann::json::array();
  for (std::size_t i = 0; i < net.node_count(); ++i) {
    const GeoPoint& p = net.node(NodeId(static_cast<std::uint32_t>(i)));
    doc["nodes"].push_back({{"id", i}, {"lat", p.lat()}, {"lon", p.lon()}});
  }
  doc["edges"] = nlohmann::json::array();
  for (const Edge& e : net.edges()) {
    nlohmann::json j{{"from", e.from.value},
                     {"to", e.to.value},
                     {"length_m", e.length_m},
                     {"highway", std::string(to_string(e.attrs.highway))},
                     {"oneway", true}};
    if (e.attrs.maxspeed_kmh) j["maxspeed_kmh"] = *e.attrs.maxspeed_kmh;
    if (e.attrs.lanes) j["lanes"] = *e.attrs.lanes;
    if (e.attrs.cycleway != CyclewayType::none)
      j["cycleway"] = std::string(to_string(e.attrs.cycleway));
    if (e.attrs.parking_present) j["parking"] = *e.attrs.parking_present;
    if (e.attrs.name) j["name"] = *e.attrs.name;
    if (e.attrs.bicycle_forbidden) j["bicycle_forbidden"] = true;
    doc["edges"].push_back(std::move(j));
  }
  out << doc.dump(2) << '\n';
}

}  // namespace velo
