#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "velo/geo.hpp"
#include "velo/network.hpp"

namespace velo {

/// Ball tree over (NodeId, GeoPoint) pairs under the haversine metric.
///
/// Balls store a centroid and a covering radius; every descendant point lies
/// within the radius, so `d(query, centroid) - radius` lower-bounds the
/// distance to any point in the subtree and prunes traversal. Splits pick the
/// axis of greatest spread in a local tangent-plane projection and cut at the
/// median, ties broken by id, which makes construction deterministic for a
/// fixed input ordering.
///
/// Queries are read-only and safe to run from many threads at once.
class BallTree {
 public:
  struct Item {
    NodeId id;
    GeoPoint point;
  };

  struct Hit {
    NodeId id;
    double distance_m;
  };

  /// Traversal counters for the pruning-effectiveness benchmark.
  struct QueryStats {
    std::size_t balls_visited = 0;
    std::size_t points_scanned = 0;
  };

  static BallTree build(std::vector<Item> items, std::size_t max_leaf_size = 16) {
    if (items.empty()) throw std::invalid_argument("cannot build a ball tree from no points");
    if (max_leaf_size == 0) max_leaf_size = 1;
    BallTree tree;
    tree.items_ = std::move(items);
    tree.max_leaf_size_ = max_leaf_size;
    tree.nodes_.reserve(2 * tree.items_.size() / max_leaf_size + 2);
    tree.build_node(0, tree.items_.size());
    return tree;
  }

  std::size_t size() const noexcept { return items_.size(); }

  /// Globally nearest indexed point; ties broken by smallest NodeId.
  Hit nearest(const GeoPoint& query, QueryStats* stats = nullptr) const {
    Hit best{NodeId(0), std::numeric_limits<double>::infinity()};
    nearest_impl(0, query, best, stats);
    return best;
  }

  /// All points at distance <= radius_m, ascending by (distance, id).
  std::vector<Hit> within_radius(const GeoPoint& query, double radius_m,
                                 QueryStats* stats = nullptr) const {
    if (radius_m < 0.0) throw std::invalid_argument("radius must be non-negative");
    std::vector<Hit> hits;
    radius_impl(0, query, radius_m, hits, stats);
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
      if (a.distance_m != b.distance_m) return a.distance_m < b.distance_m;
      return a.id < b.id;
    });
    return hits;
  }

  /// Walks every ball as (centroid, radius_m, item span begin/end, is_leaf);
  /// lets tests re-check the containment invariant.
  template <class Fn>
  void visit_balls(Fn&& fn) const {
    for (const Node& n : nodes_)
      fn(n.centroid, n.radius, n.begin, n.end, n.left < 0);
  }

  const std::vector<Item>& items() const noexcept { return items_; }

 private:
  struct Node {
    GeoPoint centroid;
    double radius = 0.0;
    std::int32_t left = -1;   // < 0: leaf
    std::int32_t right = -1;
    std::uint32_t begin = 0;  // item range [begin, end)
    std::uint32_t end = 0;
  };

  std::int32_t build_node(std::size_t begin, std::size_t end) {
    Node node;
    node.begin = static_cast<std::uint32_t>(begin);
    node.end = static_cast<std::uint32_t>(end);

    double lat_sum = 0.0, lon_sum = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      lat_sum += items_[i].point.lat();
      lon_sum += items_[i].point.lon();
    }
    const double n = static_cast<double>(end - begin);
    node.centroid = GeoPoint(lat_sum / n, lon_sum / n);
    for (std::size_t i = begin; i < end; ++i)
      node.radius = std::max(node.radius, haversine_distance(node.centroid, items_[i].point));

    const std::int32_t index = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(node);
    if (end - begin <= max_leaf_size_) return index;

    // Tangent-plane spread: longitude scaled by cos(latitude) so both axes
    // are commensurable in meters.
    const double cos_lat = std::cos(radians(node.centroid.lat()));
    double lat_min = 90.0, lat_max = -90.0, x_min = 360.0, x_max = -360.0;
    for (std::size_t i = begin; i < end; ++i) {
      lat_min = std::min(lat_min, items_[i].point.lat());
      lat_max = std::max(lat_max, items_[i].point.lat());
      const double x = items_[i].point.lon() * cos_lat;
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
    }
    const bool split_lat = (lat_max - lat_min) >= (x_max - x_min);

    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(items_.begin() + begin, items_.begin() + mid, items_.begin() + end,
                     [&](const Item& a, const Item& b) {
                       const double ka = split_lat ? a.point.lat() : a.point.lon();
                       const double kb = split_lat ? b.point.lat() : b.point.lon();
                       if (ka != kb) return ka < kb;
                       return a.id < b.id;
                     });

    const std::int32_t left = build_node(begin, mid);
    const std::int32_t right = build_node(mid, end);
    nodes_[index].left = left;
    nodes_[index].right = right;
    return index;
  }

  void nearest_impl(std::int32_t at, const GeoPoint& query, Hit& best, QueryStats* stats) const {
    const Node& node = nodes_[at];
    if (stats) ++stats->balls_visited;
    if (node.left < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        if (stats) ++stats->points_scanned;
        const double d = haversine_distance(query, items_[i].point);
        if (d < best.distance_m || (d == best.distance_m && items_[i].id < best.id))
          best = Hit{items_[i].id, d};
      }
      return;
    }
    const auto bound = [&](std::int32_t child) {
      return haversine_distance(query, nodes_[child].centroid) - nodes_[child].radius;
    };
    std::int32_t first = node.left, second = node.right;
    double first_bound = bound(first), second_bound = bound(second);
    if (second_bound < first_bound) {
      std::swap(first, second);
      std::swap(first_bound, second_bound);
    }
    // Strict comparison: subtrees whose bound ties the incumbent may still
    // hold an equal-distance point with a smaller id.
    if (first_bound <= best.distance_m) nearest_impl(first, query, best, stats);
    if (second_bound <= best.distance_m) nearest_impl(second, query, best, stats);
  }

  void radius_impl(std::int32_t at, const GeoPoint& query, double radius_m,
                   std::vector<Hit>& hits, QueryStats* stats) const {
    const Node& node = nodes_[at];
    if (stats) ++stats->balls_visited;
    if (haversine_distance(query, node.centroid) - node.radius > radius_m) return;
    if (node.left < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        if (stats) ++stats->points_scanned;
        const double d = haversine_distance(query, items_[i].point);
        if (d <= radius_m) hits.push_back(Hit{items_[i].id, d});
      }
      return;
    }
    radius_impl(node.left, query, radius_m, hits, stats);
    radius_impl(node.right, query, radius_m, hits, stats);
  }

  std::vector<Item> items_;
  std::vector<Node> nodes_;
  std::size_t max_leaf_size_ = 16;
};

}  // namespace velo
