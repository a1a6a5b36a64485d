#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "velo/geo.hpp"
#include "velo/lts.hpp"
#include "velo/map_matching.hpp"
#include "velo/network.hpp"
#include "velo/routing.hpp"

namespace velo {

/// Trajectory stress score: unweighted mean LTS over the path's edges.
/// Empty paths have no score.
inline double lts_score(std::span<const EdgeId> path, const NetworkLts& lts) {
  if (path.empty()) throw std::invalid_argument("lts_score is undefined for an empty path");
  double sum = 0.0;
  for (EdgeId e : path) sum += static_cast<double>(lts.at(e).value());
  return sum / static_cast<double>(path.size());
}

/// Length-weighted variant, offered for sensitivity analysis.
inline double lts_score_length_weighted(std::span<const EdgeId> path, const NetworkLts& lts,
                                        const StreetNetwork& net) {
  if (path.empty()) throw std::invalid_argument("lts_score is undefined for an empty path");
  double sum = 0.0, total = 0.0;
  for (EdgeId e : path) {
    const double len = net.edge(e).length_m;
    sum += static_cast<double>(lts.at(e).value()) * len;
    total += len;
  }
  return sum / total;
}

struct TrajectoryMetrics {
  std::string traj_id;
  std::string user_id;
  double observed_length_m = 0.0;
  double optimal_length_m = 0.0;
  double optimal_time_s = 0.0;
  double observed_lts = 0.0;  // mean in [1, 4]
  double optimal_lts = 0.0;   // mean in [1, 4], Length-scheme path
  double od_distance_m = 0.0;
  double detour_ratio = 0.0;  // observed_length / optimal_length
};

enum class Exclusion {
  none,
  snap_exceeded,
  disconnected,
  match_failed,
  degenerate,  // empty optimal path (origin and destination snap together)
};

inline std::string_view to_string(Exclusion e) {
  switch (e) {
    case Exclusion::none: return "none";
    case Exclusion::snap_exceeded: return "snap_exceeded";
    case Exclusion::disconnected: return "disconnected";
    case Exclusion::match_failed: return "match_failed";
    case Exclusion::degenerate: return "degenerate";
  }
  return "none";
}

/// One analyzed trajectory. Excluded rows keep their ids and reason so the
/// quality section can report them; they never silently disappear.
struct MetricsRow {
  TrajectoryMetrics metrics;
  Exclusion excluded = Exclusion::none;
  bool detour_flagged = false;  // detour_ratio < 1 - 0.05 (snap/match slack)
};

/// Detour slack below which a ratio < 1 is flagged as suspicious.
inline constexpr double kDetourSlack = 0.05;

/// Assembles the per-trajectory metric row from a successful match and the
/// two optimal routes. The length-scheme path supplies optimal_lts: the
/// scatter compares stress against the spatially shortest alternative.
inline MetricsRow trajectory_metrics(const MatchedPath& matched, const RoutePath& optimal_length,
                                     const RoutePath& optimal_time, const NetworkLts& lts,
                                     const Trajectory& traj) {
  MetricsRow row;
  row.metrics.traj_id = traj.traj_id();
  row.metrics.user_id = traj.user_id();
  row.metrics.od_distance_m = od_distance(traj);
  if (optimal_length.edges.empty() || matched.edges.empty()) {
    row.excluded = Exclusion::degenerate;
    return row;
  }
  row.metrics.observed_length_m = matched.matched_length_m;
  row.metrics.optimal_length_m = optimal_length.total_length_m;
  row.metrics.optimal_time_s = optimal_time.total_weight;
  row.metrics.observed_lts = lts_score(matched.edges, lts);
  row.metrics.optimal_lts = lts_score(optimal_length.edges, lts);
  row.metrics.detour_ratio = row.metrics.observed_length_m / row.metrics.optimal_length_m;
  row.detour_flagged = row.metrics.detour_ratio < 1.0 - kDetourSlack;
  return row;
}

struct ScatterPoint {
  double optimal_lts = 0.0;
  double observed_lts = 0.0;
  std::string traj_id;
};

struct ScatterData {
  std::vector<ScatterPoint> points;
  /// Share of points strictly below the diagonal (observed < optimal);
  /// absent for an empty population.
  std::optional<double> below_diagonal_fraction;
};

inline ScatterData scatter_data(std::span<const MetricsRow> rows) {
  ScatterData out;
  std::size_t below = 0;
  for (const MetricsRow& row : rows) {
    if (row.excluded != Exclusion::none) continue;
    out.points.push_back({row.metrics.optimal_lts, row.metrics.observed_lts, row.metrics.traj_id});
    if (row.metrics.observed_lts < row.metrics.optimal_lts) ++below;
  }
  if (!out.points.empty())
    out.below_diagonal_fraction =
        static_cast<double>(below) / static_cast<double>(out.points.size());
  return out;
}

/// Sorted-copy median; even counts average the middle two.
inline double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

/// Linear-interpolation quantile (R-7) over already-sorted values.
inline double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty set");
  const double h = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

/// Sample variance (n-1); 0 for a single value.
inline double sample_variance(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n == 0) throw std::invalid_argument("variance of empty set");
  if (n == 1) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(n - 1);
}

struct BoxStats {
  double median = 0.0;
  double iqr = 0.0;
  double variance = 0.0;
};

inline BoxStats box_stats(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  BoxStats s;
  const std::size_t n = values.size();
  s.median = n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  s.iqr = quantile_sorted(values, 0.75) - quantile_sorted(values, 0.25);
  s.variance = sample_variance(values);
  return s;
}

struct BinSummary {
  std::size_t bin_index = 0;
  double od_lo_m = 0.0;  // [lo, hi)
  double od_hi_m = 0.0;
  std::size_t n = 0;
  BoxStats observed;
  BoxStats optimal;
};

/// Splits the valid sub-10 km population into `bins` equal-count groups by
/// origin-destination distance (remainder r: the first r bins take one extra)
/// and summarizes observed/optimal LTS per group.
inline std::vector<BinSummary> decile_bins(std::span<const MetricsRow> rows,
                                           double max_od_m = 10'000.0, std::size_t bins = 10) {
  if (bins == 0) throw std::invalid_argument("bin count must be positive");
  struct Entry {
    double od;
    double observed;
    double optimal;
    const std::string* traj_id;
  };
  std::vector<Entry> entries;
  for (const MetricsRow& row : rows) {
    if (row.excluded != Exclusion::none) continue;
    if (!(row.metrics.od_distance_m < max_od_m)) continue;
    entries.push_back({row.metrics.od_distance_m, row.metrics.observed_lts,
                       row.metrics.optimal_lts, &row.metrics.traj_id});
  }
  if (entries.size() < bins)
    throw std::invalid_argument(
        "only " + std::to_string(entries.size()) + " trajectories under the cutoff; need at least " +
        std::to_string(bins) + " - pass an explicitly smaller bin count");
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.od != b.od) return a.od < b.od;
    return *a.traj_id < *b.traj_id;
  });

  const std::size_t base = entries.size() / bins;
  const std::size_t remainder = entries.size() % bins;
  std::vector<BinSummary> out;
  out.reserve(bins);
  std::size_t at = 0;
  for (std::size_t i = 0; i < bins; ++i) {
    const std::size_t count = base + (i < remainder ? 1 : 0);
    BinSummary bin;
    bin.bin_index = i;
    bin.n = count;
    bin.od_lo_m = entries[at].od;
    bin.od_hi_m = at + count < entries.size() ? entries[at + count].od : entries.back().od;
    std::vector<double> observed, optimal;
    observed.reserve(count);
    optimal.reserve(count);
    for (std::size_t j = at; j < at + count; ++j) {
      observed.push_back(entries[j].observed);
      optimal.push_back(entries[j].optimal);
    }
    bin.observed = box_stats(std::move(observed));
    bin.optimal = box_stats(std::move(optimal));
    out.push_back(std::move(bin));
    at += count;
  }
  return out;
}

struct PopulationSummary {
  std::size_t valid = 0;
  std::size_t excluded_snap = 0;
  std::size_t excluded_disconnected = 0;
  std::size_t excluded_match_failed = 0;
  std::size_t excluded_degenerate = 0;
  std::size_t detour_flagged = 0;
  double median_observed_length_m = 0.0;
  double median_optimal_length_m = 0.0;
  double median_detour_ratio = 0.0;
  double median_observed_lts = 0.0;
  double median_optimal_lts = 0.0;
};

inline PopulationSummary population_summary(std::span<const MetricsRow> rows) {
  PopulationSummary s;
  std::vector<double> obs_len, opt_len, ratio, obs_lts, opt_lts;
  for (const MetricsRow& row : rows) {
    switch (row.excluded) {
      case Exclusion::none: break;
      case Exclusion::snap_exceeded: ++s.excluded_snap; continue;
      case Exclusion::disconnected: ++s.excluded_disconnected; continue;
      case Exclusion::match_failed: ++s.excluded_match_failed; continue;
      case Exclusion::degenerate: ++s.excluded_degenerate; continue;
    }
    ++s.valid;
    if (row.detour_flagged) ++s.detour_flagged;
    obs_len.push_back(row.metrics.observed_length_m);
    opt_len.push_back(row.metrics.optimal_length_m);
    ratio.push_back(row.metrics.detour_ratio);
    obs_lts.push_back(row.metrics.observed_lts);
    opt_lts.push_back(row.metrics.optimal_lts);
  }
  if (s.valid) {
    s.median_observed_length_m = median(obs_len);
    s.median_optimal_length_m = median(opt_len);
    s.median_detour_ratio = median(ratio);
    s.median_observed_lts = median(obs_lts);
    s.median_optimal_lts = median(opt_lts);
  }
  return s;
}

}  // namespace velo
