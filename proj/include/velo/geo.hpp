#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace velo {

/// Spherical earth radius in meters, matching the haversine ball-tree
/// convention used for nearest-neighbour snapping.
inline constexpr double kEarthRadiusM = 6'371'000.0;

inline constexpr double radians(double degrees) {
  return degrees * (std::numbers::pi / 180.0);
}

/// WGS-style latitude/longitude pair in degrees. Construction rejects
/// out-of-range and non-finite coordinates, so downstream code can assume
/// validity.
class GeoPoint {
 public:
  GeoPoint() = default;

  GeoPoint(double lat, double lon) : lat_(lat), lon_(lon) {
    if (!(lat >= -90.0 && lat <= 90.0))
      throw std::invalid_argument("latitude out of range [-90, 90]: " + std::to_string(lat));
    if (!(lon >= -180.0 && lon <= 180.0))
      throw std::invalid_argument("longitude out of range [-180, 180]: " + std::to_string(lon));
  }

  double lat() const noexcept { return lat_; }
  double lon() const noexcept { return lon_; }

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;

 private:
  double lat_ = 0.0;
  double lon_ = 0.0;
};

/// Great-circle distance in meters on the R = 6,371,000 m sphere.
inline double haversine_distance(const GeoPoint& a, const GeoPoint& b) {
  const double phi1 = radians(a.lat());
  const double phi2 = radians(b.lat());
  const double sin_dphi = std::sin((phi2 - phi1) * 0.5);
  const double sin_dlam = std::sin(radians(b.lon() - a.lon()) * 0.5);
  const double h = sin_dphi * sin_dphi + std::cos(phi1) * std::cos(phi2) * sin_dlam * sin_dlam;
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

/// One GPS fix: UTC timestamp in whole seconds plus a location.
class SpatioTemporalPoint {
 public:
  SpatioTemporalPoint() = default;

  SpatioTemporalPoint(std::int64_t t, GeoPoint loc) : t_(t), loc_(loc) {
    if (t < 0) throw std::invalid_argument("timestamp before epoch: " + std::to_string(t));
  }

  std::int64_t t() const noexcept { return t_; }
  const GeoPoint& loc() const noexcept { return loc_; }

  friend bool operator==(const SpatioTemporalPoint&, const SpatioTemporalPoint&) = default;

 private:
  std::int64_t t_ = 0;
  GeoPoint loc_;
};

/// Time-ordered sequence of fixes for one trip. Non-empty, strictly
/// increasing timestamps. The nominal 5 s sampling interval is a data-quality
/// observation, not an invariant; see nominal_sampling_interval_s().
class Trajectory {
 public:
  Trajectory(std::string user_id, std::string traj_id, std::vector<SpatioTemporalPoint> points)
      : user_id_(std::move(user_id)), traj_id_(std::move(traj_id)), points_(std::move(points)) {
    if (points_.empty())
      throw std::invalid_argument("trajectory '" + traj_id_ + "' has no points");
    for (std::size_t i = 1; i < points_.size(); ++i) {
      if (points_[i].t() <= points_[i - 1].t())
        throw std::invalid_argument("trajectory '" + traj_id_ +
                                    "' timestamps not strictly increasing at point " +
                                    std::to_string(i));
    }
  }

  const std::string& user_id() const noexcept { return user_id_; }
  const std::string& traj_id() const noexcept { return traj_id_; }
  std::span<const SpatioTemporalPoint> points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  const SpatioTemporalPoint& front() const noexcept { return points_.front(); }
  const SpatioTemporalPoint& back() const noexcept { return points_.back(); }

 private:
  std::string user_id_;
  std::string traj_id_;
  std::vector<SpatioTemporalPoint> points_;
};

/// Sum of haversine hops over consecutive fixes; 0 for a single fix.
inline double trajectory_length(const Trajectory& traj) {
  double total = 0.0;
  const auto pts = traj.points();
  for (std::size_t i = 1; i < pts.size(); ++i)
    total += haversine_distance(pts[i - 1].loc(), pts[i].loc());
  return total;
}

/// Great-circle distance between the first and last fix (the O-D chord).
inline double od_distance(const Trajectory& traj) {
  return haversine_distance(traj.front().loc(), traj.back().loc());
}

/// Median inter-fix interval in seconds; 0 for a single-fix trajectory.
inline double nominal_sampling_interval_s(const Trajectory& traj) {
  const auto pts = traj.points();
  if (pts.size() < 2) return 0.0;
  std::vector<std::int64_t> deltas;
  deltas.reserve(pts.size() - 1);
  for (std::size_t i = 1; i < pts.size(); ++i) deltas.push_back(pts[i].t() - pts[i - 1].t());
  std::sort(deltas.begin(), deltas.end());
  const std::size_t n = deltas.size();
  if (n % 2 == 1) return static_cast<double>(deltas[n / 2]);
  return 0.5 * static_cast<double>(deltas[n / 2 - 1] + deltas[n / 2]);
}

}  // namespace velo
