#pragma once

#include <charconv>
#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "velo/errors.hpp"
#include "velo/network.hpp"

namespace velo {

namespace osm_detail {

struct Attribute {
  std::string name;
  std::string value;
};

struct Tag {
  std::string name;
  std::vector<Attribute> attributes;
  bool self_closing = false;
  bool closing = false;
  std::size_t offset = 0;  // byte offset of '<'
};

// Non-validating tokenizer for the OSM XML subset: elements, attributes,
// comments, processing instructions. Text content is skipped.
class Tokenizer {
 public:
  explicit Tokenizer(std::string_view input) : input_(input) {}

  std::size_t offset() const noexcept { return pos_; }

  /// Next element tag, or false at end of input.
  bool next(Tag& out) {
    for (;;) {
      const std::size_t lt = input_.find('<', pos_);
      if (lt == std::string_view::npos) {
        pos_ = input_.size();
        return false;
      }
      pos_ = lt;
      if (starts_with(lt, "<!--")) {
        const std::size_t end = input_.find("-->", lt + 4);
        if (end == std::string_view::npos) throw ParseError("unterminated comment", lt);
        pos_ = end + 3;
        continue;
      }
      if (starts_with(lt, "<?") || starts_with(lt, "<!")) {
        const std::size_t end = input_.find('>', lt);
        if (end == std::string_view::npos) throw ParseError("unterminated declaration", lt);
        pos_ = end + 1;
        continue;
      }
      return parse_tag(out);
    }
  }

 private:
  bool starts_with(std::size_t at, std::string_view prefix) const {
    return input_.substr(at, prefix.size()) == prefix;
  }

  static bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }
  static bool is_name_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_' || c == '-' || c == ':' || c == '.';
  }

  bool parse_tag(Tag& out) {
    out = Tag{};
    out.offset = pos_;
    std::size_t i = pos_ + 1;
    if (i < input_.size() && input_[i] == '/') {
      out.closing = true;
      ++i;
    }
    const std::size_t name_begin = i;
    while (i < input_.size() && is_name_char(input_[i])) ++i;
    if (i == name_begin) throw ParseError("expected element name", pos_);
    out.name = std::string(input_.substr(name_begin, i - name_begin));

    for (;;) {
      while (i < input_.size() && is_space(input_[i])) ++i;
      if (i >= input_.size()) throw ParseError("unterminated tag '" + out.name + "'", out.offset);
      if (input_[i] == '>') {
        pos_ = i + 1;
        return true;
      }
      if (input_[i] == '/') {
        if (i + 1 >= input_.size() || input_[i + 1] != '>')
          throw ParseError("malformed tag end", i);
        out.self_closing = true;
        pos_ = i + 2;
        return true;
      }
      if (out.closing) throw ParseError("attributes on closing tag", i);

      const std::size_t attr_begin = i;
      while (i < input_.size() && is_name_char(input_[i])) ++i;
      if (i == attr_begin) throw ParseError("expected attribute name", i);
      Attribute attr;
      attr.name = std::string(input_.substr(attr_begin, i - attr_begin));
      while (i < input_.size() && is_space(input_[i])) ++i;
      if (i >= input_.size() || input_[i] != '=')
        throw ParseError("expected '=' after attribute '" + attr.name + "'", i);
      ++i;
      while (i < input_.size() && is_space(input_[i])) ++i;
      if (i >= input_.size() || (input_[i] != '"' && input_[i] != '\''))
        throw ParseError("expected quoted attribute value", i);
      const char q = input_[i++];
      const std::size_t value_begin = i;
      while (i < input_.size() && input_[i] != q) ++i;
      if (i >= input_.size()) throw ParseError("unterminated attribute value", value_begin - 1);
      attr.value = decode_entities(input_.substr(value_begin, i - value_begin), value_begin);
      ++i;
      out.attributes.push_back(std::move(attr));
    }
  }

  std::string decode_entities(std::string_view raw, std::size_t at) const {
    if (raw.find('&') == std::string_view::npos) return std::string(raw);
    std::string out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] != '&') {
        out.push_back(raw[i]);
        continue;
      }
      const std::size_t semi = raw.find(';', i);
      if (semi == std::string_view::npos) throw ParseError("unterminated entity", at + i);
      const std::string_view name = raw.substr(i + 1, semi - i - 1);
      if (name == "amp") out.push_back('&');
      else if (name == "lt") out.push_back('<');
      else if (name == "gt") out.push_back('>');
      else if (name == "quot") out.push_back('"');
      else if (name == "apos") out.push_back('\'');
      else if (!name.empty() && name[0] == '#') {
        unsigned code = 0;
        const bool hex = name.size() > 1 && (name[1] == 'x' || name[1] == 'X');
        const std::string_view digits = name.substr(hex ? 2 : 1);
        const auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), code,
                                             hex ? 16 : 10);
        if (ec != std::errc{} || p != digits.data() + digits.size() || code == 0 || code > 127)
          throw ParseError("unsupported character reference", at + i);
        out.push_back(static_cast<char>(code));
      } else {
        throw ParseError("unknown entity '&" + std::string(name) + ";'", at + i);
      }
      i = semi;
    }
    return out;
  }

  std::string_view input_;
  std::size_t pos_ = 0;
};

inline const std::string* find_attr(const Tag& tag, std::string_view name) {
  for (const Attribute& a : tag.attributes)
    if (a.name == name) return &a.value;
  return nullptr;
}

enum class Direction { both, forward, backward };

struct RawWay {
  std::uint64_t id = 0;
  std::vector<std::uint64_t> refs;
  std::vector<std::pair<std::string, std::string>> tags;
};

inline const std::string* way_tag(const RawWay& way, std::string_view key) {
  for (const auto& [k, v] : way.tags)
    if (k == key) return &v;
  return nullptr;
}

inline int cycleway_rank(CyclewayType c) {
  switch (c) {
    case CyclewayType::none: return 0;
    case CyclewayType::shared: return 1;
    case CyclewayType::opposite: return 2;
    case CyclewayType::lane: return 3;
    case CyclewayType::track: return 4;
  }
  return 0;
}

inline CyclewayType cycleway_from_value(std::string_view v) {
  if (v == "lane") return CyclewayType::lane;
  if (v == "track" || v == "separate" || v == "separated" || v == "opposite_track")
    return CyclewayType::track;
  if (v == "shared_lane" || v == "shared" || v == "share_busway" || v == "sharrow")
    return CyclewayType::shared;
  if (v == "opposite" || v == "opposite_lane") return CyclewayType::opposite;
  return CyclewayType::none;
}

inline std::optional<double> parse_maxspeed(std::string_view v) {
  double value = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), value);
  if (ec != std::errc{} || p == v.data()) return std::nullopt;
  if (std::string_view(p, v.data() + v.size() - p).find("mph") != std::string_view::npos)
    value *= 1.609344;
  if (!(value > 0.0 && value <= 200.0)) return std::nullopt;
  return value;
}

}  // namespace osm_detail

/// Parses the OSM XML subset (node / way / nd / tag; relations ignored) into
/// the directed street graph. Ways are segmented at endpoints and at nodes
/// referenced more than once; interior geometry nodes contribute length only.
/// Chains whose accumulated length exceeds twice the endpoint chord (hairpins,
/// closed loops) are split further at interior nodes so the chord sanity bound
/// holds for every emitted edge.
inline StreetNetwork parse_osm_xml(std::istream& in) {
  std::string input(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>{});
  osm_detail::Tokenizer tokenizer(input);

  std::unordered_map<std::uint64_t, GeoPoint> osm_nodes;
  std::vector<osm_detail::RawWay> ways;

  osm_detail::Tag tag;
  bool in_way = false;
  std::size_t skip_depth = 0;  // inside an ignored container (e.g. relation)
  while (tokenizer.next(tag)) {
    if (skip_depth > 0) {
      if (tag.closing) --skip_depth;
      else if (!tag.self_closing) ++skip_depth;
      continue;
    }
    if (tag.closing) {
      if (tag.name == "way") in_way = false;
      continue;
    }
    if (tag.name == "node") {
      const std::string* id = osm_detail::find_attr(tag, "id");
      const std::string* lat = osm_detail::find_attr(tag, "lat");
      const std::string* lon = osm_detail::find_attr(tag, "lon");
      if (!id || !lat || !lon) throw ParseError("node element needs id, lat, lon", tag.offset);
      std::uint64_t node_id = 0;
      double lat_v = 0.0, lon_v = 0.0;
      const auto num = [&](const std::string& s, auto& out) {
        const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
        if (ec != std::errc{} || p != s.data() + s.size())
          throw ParseError("invalid numeric attribute '" + s + "'", tag.offset);
      };
      num(*id, node_id);
      num(*lat, lat_v);
      num(*lon, lon_v);
      try {
        osm_nodes.insert_or_assign(node_id, GeoPoint(lat_v, lon_v));
      } catch (const std::invalid_argument& e) {
        throw ParseError(e.what(), tag.offset);
      }
      if (!tag.self_closing) skip_depth = 1;  // skip node children (tag elements)
      continue;
    }
    if (tag.name == "way") {
      osm_detail::RawWay way;
      const std::string* id = osm_detail::find_attr(tag, "id");
      if (!id) throw ParseError("way element needs id", tag.offset);
      const auto [p, ec] = std::from_chars(id->data(), id->data() + id->size(), way.id);
      if (ec != std::errc{} || p != id->data() + id->size())
        throw ParseError("invalid way id '" + *id + "'", tag.offset);
      ways.push_back(std::move(way));
      in_way = !tag.self_closing;
      continue;
    }
    if (tag.name == "nd" && in_way) {
      const std::string* ref = osm_detail::find_attr(tag, "ref");
      if (!ref) throw ParseError("nd element needs ref", tag.offset);
      std::uint64_t ref_id = 0;
      const auto [p, ec] = std::from_chars(ref->data(), ref->data() + ref->size(), ref_id);
      if (ec != std::errc{} || p != ref->data() + ref->size())
        throw ParseError("invalid nd ref '" + *ref + "'", tag.offset);
      ways.back().refs.push_back(ref_id);
      continue;
    }
    if (tag.name == "tag" && in_way) {
      const std::string* k = osm_detail::find_attr(tag, "k");
      const std::string* v = osm_detail::find_attr(tag, "v");
      if (!k || !v) throw ParseError("tag element needs k and v", tag.offset);
      ways.back().tags.emplace_back(*k, *v);
      continue;
    }
    if (tag.name == "relation") {
      if (!tag.self_closing) skip_depth = 1;
      continue;
    }
    // osm root, bounds, tag outside way, ... : ignore. Containers other than
    // the ones handled above have no children we care about.
  }

  // Streets only; everything else (buildings, rivers, ...) is not a way we keep.
  std::vector<const osm_detail::RawWay*> streets;
  for (const auto& w : ways)
    if (osm_detail::way_tag(w, "highway") && w.refs.size() >= 2) streets.push_back(&w);

  std::unordered_map<std::uint64_t, std::size_t> use_count;
  for (const auto* w : streets) {
    for (std::uint64_t ref : w->refs) {
      if (!osm_nodes.contains(ref))
        throw SchemaError("way " + std::to_string(w->id) + " references missing node " +
                              std::to_string(ref),
                          "way " + std::to_string(w->id));
      ++use_count[ref];
    }
  }
  const auto is_vertex = [&](const osm_detail::RawWay& w, std::size_t i) {
    return i == 0 || i + 1 == w.refs.size() || use_count[w.refs[i]] >= 2;
  };

  StreetNetwork net;
  std::unordered_map<std::uint64_t, NodeId> dense;
  const auto graph_node = [&](std::uint64_t osm_id) {
    const auto it = dense.find(osm_id);
    if (it != dense.end()) return it->second;
    const NodeId id = net.add_node(osm_nodes.at(osm_id));
    dense.emplace(osm_id, id);
    return id;
  };

  struct Chain {
    std::vector<std::uint64_t> refs;
    double length = 0.0;
  };

  const auto emit = [&](const Chain& chain, const EdgeAttributes& attrs,
                        osm_detail::Direction dir, const auto& emit_ref) -> void {
    if (chain.length <= 0.0) return;
    const GeoPoint& a = osm_nodes.at(chain.refs.front());
    const GeoPoint& b = osm_nodes.at(chain.refs.back());
    const double chord = haversine_distance(a, b);
    const bool loopish = chord < 1.0 && chain.length >= 2.0;
    if (chain.refs.size() > 2 && ((chord >= 1.0 && chain.length > 2.0 * chord) || loopish)) {
      // Hairpin or closed loop: split at the interior node nearest the
      // length midpoint and recurse so the chord bound holds.
      double cum = 0.0, best_delta = chain.length;
      std::size_t split = 1;
      for (std::size_t i = 1; i + 1 < chain.refs.size(); ++i) {
        cum += haversine_distance(osm_nodes.at(chain.refs[i - 1]), osm_nodes.at(chain.refs[i]));
        const double delta = std::abs(cum - chain.length * 0.5);
        if (delta < best_delta) {
          best_delta = delta;
          split = i;
        }
      }
      Chain head, tail;
      head.refs.assign(chain.refs.begin(), chain.refs.begin() + split + 1);
      tail.refs.assign(chain.refs.begin() + split, chain.refs.end());
      for (std::size_t i = 1; i < head.refs.size(); ++i)
        head.length += haversine_distance(osm_nodes.at(head.refs[i - 1]), osm_nodes.at(head.refs[i]));
      for (std::size_t i = 1; i < tail.refs.size(); ++i)
        tail.length += haversine_distance(osm_nodes.at(tail.refs[i - 1]), osm_nodes.at(tail.refs[i]));
      emit_ref(head, attrs, dir, emit_ref);
      emit_ref(tail, attrs, dir, emit_ref);
      return;
    }
    const NodeId from = graph_node(chain.refs.front());
    const NodeId to = graph_node(chain.refs.back());
    if (dir != osm_detail::Direction::backward) net.add_edge(from, to, chain.length, attrs);
    if (dir != osm_detail::Direction::forward) net.add_edge(to, from, chain.length, attrs);
  };

  for (const auto* w : streets) {
    EdgeAttributes attrs;
    attrs.highway = highway_class_from_string(*osm_detail::way_tag(*w, "highway"));
    osm_detail::Direction dir = osm_detail::Direction::both;
    std::optional<int> total_lanes;
    CyclewayType cycleway = CyclewayType::none;
    bool parking_yes = false, parking_tag_seen = false;

    for (const auto& [k, v] : w->tags) {
      if (k == "oneway") {
        if (v == "yes" || v == "true" || v == "1") dir = osm_detail::Direction::forward;
        else if (v == "-1" || v == "reverse") dir = osm_detail::Direction::backward;
        else if (v == "no" || v == "false" || v == "0") dir = osm_detail::Direction::both;
      } else if (k == "maxspeed") {
        attrs.maxspeed_kmh = osm_detail::parse_maxspeed(v);
      } else if (k == "lanes") {
        int n = 0;
        const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
        if (ec == std::errc{} && p == v.data() + v.size()) total_lanes = n;
      } else if (k == "cycleway" || k == "cycleway:left" || k == "cycleway:right") {
        const CyclewayType c = osm_detail::cycleway_from_value(v);
        if (osm_detail::cycleway_rank(c) > osm_detail::cycleway_rank(cycleway)) cycleway = c;
      } else if (k == "bicycle") {
        if (v == "no" || v == "private") attrs.bicycle_forbidden = true;
      } else if (k.rfind("parking:lane", 0) == 0) {
        parking_tag_seen = true;
        if (v != "no" && v != "none" && v != "separate") parking_yes = true;
      } else if (k == "name") {
        attrs.name = v;
      }
      // Unknown tags dropped.
    }

    // A dedicated cycleway road is a separated facility by definition.
    if (attrs.highway == HighwayClass::cycleway &&
        osm_detail::cycleway_rank(cycleway) < osm_detail::cycleway_rank(CyclewayType::track))
      cycleway = CyclewayType::track;
    attrs.cycleway = cycleway;
    if (parking_tag_seen) attrs.parking_present = parking_yes;
    if (total_lanes) {
      const int per_dir =
          dir == osm_detail::Direction::both ? (*total_lanes + 1) / 2 : *total_lanes;
      if (per_dir >= 1 && per_dir <= 12) attrs.lanes = per_dir;
    }

    // Segment the way at vertex nodes, dropping zero-length hops.
    Chain chain;
    chain.refs.push_back(w->refs[0]);
    for (std::size_t i = 1; i < w->refs.size(); ++i) {
      const double hop =
          haversine_distance(osm_nodes.at(w->refs[i - 1]), osm_nodes.at(w->refs[i]));
      if (hop <= 0.0 && !is_vertex(*w, i)) continue;
      chain.refs.push_back(w->refs[i]);
      chain.length += hop;
      if (is_vertex(*w, i)) {
        emit(chain, attrs, dir, emit);
        chain = Chain{};
        chain.refs.push_back(w->refs[i]);
      }
    }
  }

  net.validate();
  return net;
}

}  // namespace velo
