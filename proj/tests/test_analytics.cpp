#include <catch_amalgamated.hpp>

#include "test_oracles.hpp"
#include "velo/analytics.hpp"

using velo::BinSummary;
using velo::EdgeAttributes;
using velo::EdgeId;
using velo::Exclusion;
using velo::GeoPoint;
using velo::MetricsRow;
using velo::NetworkLts;
using velo::NodeId;
using velo::StreetNetwork;

namespace {

NetworkLts lts_of(std::vector<int> values) {
  NetworkLts lts;
  for (int v : values) lts.by_edge.emplace_back(v);
  return lts;
}

std::vector<EdgeId> edge_ids(std::initializer_list<std::uint32_t> ids) {
  std::vector<EdgeId> out;
  for (auto id : ids) out.emplace_back(id);
  return out;
}

MetricsRow valid_row(std::string id, double od, double observed_lts, double optimal_lts) {
  MetricsRow row;
  row.metrics.traj_id = std::move(id);
  row.metrics.user_id = "u";
  row.metrics.od_distance_m = od;
  row.metrics.observed_lts = observed_lts;
  row.metrics.optimal_lts = optimal_lts;
  row.metrics.observed_length_m = od * 1.3;
  row.metrics.optimal_length_m = od * 1.1;
  row.metrics.detour_ratio = 1.3 / 1.1;
  return row;
}

}  // namespace

TEST_CASE("lts_score") {
  const NetworkLts lts = lts_of({2, 2, 2, 1, 1, 4, 3});
  SECTION("uniform") {
    REQUIRE(velo::lts_score(edge_ids({0, 1, 2}), lts) == 2.0);
  }
  SECTION("paper arithmetic anchor") {
    REQUIRE(velo::lts_score(edge_ids({3, 4, 5}), lts) == 2.0);  // [1,1,4]
  }
  SECTION("seven-edge fixture, hand-summed") {
    // 2+2+2+1+1+4+3 = 15 over 7 edges.
    REQUIRE_THAT(velo::lts_score(edge_ids({0, 1, 2, 3, 4, 5, 6}), lts),
                 Catch::Matchers::WithinAbs(15.0 / 7.0, 1e-12));
  }
  SECTION("empty path is an error") {
    REQUIRE_THROWS_AS(velo::lts_score({}, lts), std::invalid_argument);
  }
  SECTION("permutation invariance and bounds") {
    velo::Rng rng(5);
    for (int round = 0; round < 200; ++round) {
      std::vector<EdgeId> path;
      const std::size_t n = 1 + rng.next_below(7);
      for (std::size_t i = 0; i < n; ++i)
        path.emplace_back(static_cast<std::uint32_t>(rng.next_below(7)));
      const double score = velo::lts_score(path, lts);
      REQUIRE(score >= 1.0);
      REQUIRE(score <= 4.0);
      // Reversal is a permutation of the multiset.
      std::vector<EdgeId> reversed(path.rbegin(), path.rend());
      REQUIRE(velo::lts_score(reversed, lts) == score);
    }
  }
}

TEST_CASE("length-weighted variant weighs long edges more") {
  StreetNetwork net;
  const NodeId a = net.add_node(GeoPoint(44.84, 11.62));
  const NodeId b = net.add_node(GeoPoint(44.84, 11.63));
  net.add_edge(a, b, 900.0, {});
  net.add_edge(b, a, 100.0, {});
  const NetworkLts lts = lts_of({4, 1});
  const auto path = edge_ids({0, 1});
  REQUIRE(velo::lts_score(path, lts) == 2.5);
  REQUIRE_THAT(velo::lts_score_length_weighted(path, lts, net),
               Catch::Matchers::WithinAbs((4.0 * 900 + 1.0 * 100) / 1000.0, 1e-12));
}

TEST_CASE("median and quantile conventions") {
  REQUIRE(velo::median({1, 2, 3}) == 2.0);
  REQUIRE(velo::median({1, 2, 3, 4}) == 2.5);
  REQUIRE(velo::median({7}) == 7.0);
  REQUIRE_THROWS_AS(velo::median({}), std::invalid_argument);

  SECTION("order-statistic correctness against a counting oracle") {
    velo::Rng rng(17);
    for (int round = 0; round < 100; ++round) {
      std::vector<double> values;
      const std::size_t n = 1 + rng.next_below(30);
      for (std::size_t i = 0; i < n; ++i) values.push_back(rng.uniform(0, 10));
      const double med = velo::median(values);
      // At least half the values on each side.
      std::size_t le = 0, ge = 0;
      for (double v : values) {
        if (v <= med + 1e-12) ++le;
        if (v >= med - 1e-12) ++ge;
      }
      REQUIRE(2 * le >= n);
      REQUIRE(2 * ge >= n);
    }
  }
  SECTION("variance conventions") {
    const std::vector<double> one = {3.0};
    REQUIRE(velo::sample_variance(one) == 0.0);
    const std::vector<double> pair = {1.0, 3.0};
    REQUIRE(velo::sample_variance(pair) == 2.0);  // n-1 denominator
  }
}

TEST_CASE("trajectory_metrics") {
  // Two-route fixture: a direct stressful edge and a longer calm detour.
  StreetNetwork net;
  const double deg_m = velo::kEarthRadiusM * (std::numbers::pi / 180.0);
  const NodeId a = net.add_node(GeoPoint(44.84, 11.62));
  const NodeId b = net.add_node(
      GeoPoint(44.84, 11.62 + 1000.0 / (deg_m * std::cos(velo::radians(44.84)))));
  const NodeId c = net.add_node(GeoPoint(44.845, 11.62));
  EdgeAttributes stressful, calm;
  stressful.highway = velo::HighwayClass::primary;
  stressful.maxspeed_kmh = 70.0;
  calm.highway = velo::HighwayClass::residential;
  calm.maxspeed_kmh = 30.0;
  calm.lanes = 1;
  const EdgeId direct = net.add_edge(a, b, 1000.0, stressful);
  const EdgeId leg1 = net.add_edge(a, c, 600.0, calm);
  const EdgeId leg2 = net.add_edge(c, b, 600.0, calm);
  const NetworkLts lts = velo::classify_network(net);
  REQUIRE(lts.at(direct).value() == 4);
  REQUIRE(lts.at(leg1).value() == 1);

  const velo::Trajectory traj("u9", "t9", {{0, net.node(a)}, {300, net.node(b)}});
  const auto optimal_length = velo::shortest_path(net, velo::WeightScheme::length(), a, b);
  const auto optimal_time = velo::shortest_path(net, velo::WeightScheme::time(15.0), a, b);
  REQUIRE(optimal_length.edges == std::vector<EdgeId>{direct});

  SECTION("safe detour over the direct edge") {
    velo::MatchedPath matched;
    matched.traj_id = "t9";
    matched.edges = {leg1, leg2};
    matched.matched_length_m = 1200.0;
    const MetricsRow row = velo::trajectory_metrics(matched, optimal_length, optimal_time, lts, traj);
    REQUIRE(row.excluded == Exclusion::none);
    REQUIRE_THAT(row.metrics.detour_ratio, Catch::Matchers::WithinAbs(1.2, 1e-12));
    REQUIRE(row.metrics.observed_lts == 1.0);
    REQUIRE(row.metrics.optimal_lts == 4.0);
    REQUIRE_FALSE(row.detour_flagged);
  }
  SECTION("matched path identical to optimal") {
    velo::MatchedPath matched;
    matched.traj_id = "t9";
    matched.edges = {direct};
    matched.matched_length_m = optimal_length.total_length_m;
    const MetricsRow row = velo::trajectory_metrics(matched, optimal_length, optimal_time, lts, traj);
    REQUIRE(row.metrics.detour_ratio == 1.0);
    REQUIRE(row.metrics.observed_lts == row.metrics.optimal_lts);
    // detour_ratio == 1 implies equal Length-scheme weights.
    REQUIRE_THAT(row.metrics.observed_length_m,
                 Catch::Matchers::WithinAbs(optimal_length.total_weight, 1e-9));
  }
  SECTION("degenerate loop is flagged, not scored") {
    velo::MatchedPath matched;
    matched.traj_id = "t9";
    matched.edges = {direct};
    const velo::RoutePath empty_path;  // origin == destination
    const MetricsRow row = velo::trajectory_metrics(matched, empty_path, empty_path, lts, traj);
    REQUIRE(row.excluded == Exclusion::degenerate);
  }
  SECTION("suspiciously short observed paths are flagged, kept") {
    velo::MatchedPath matched;
    matched.traj_id = "t9";
    matched.edges = {direct};
    matched.matched_length_m = 800.0;  // below optimal, outside slack
    const MetricsRow row = velo::trajectory_metrics(matched, optimal_length, optimal_time, lts, traj);
    REQUIRE(row.excluded == Exclusion::none);
    REQUIRE(row.detour_flagged);
  }
}

TEST_CASE("scatter data") {
  SECTION("identical paths have fraction zero") {
    std::vector<MetricsRow> rows = {valid_row("a", 100, 2.0, 2.0), valid_row("b", 200, 3.0, 3.0)};
    const auto scatter = velo::scatter_data(rows);
    REQUIRE(scatter.points.size() == 2);
    REQUIRE(scatter.below_diagonal_fraction == 0.0);
  }
  SECTION("empty input has no fraction") {
    const auto scatter = velo::scatter_data({});
    REQUIRE(scatter.points.empty());
    REQUIRE_FALSE(scatter.below_diagonal_fraction.has_value());
  }
  SECTION("excluded rows do not contribute") {
    std::vector<MetricsRow> rows = {valid_row("a", 100, 1.0, 2.0)};
    rows.push_back(valid_row("b", 100, 4.0, 1.0));
    rows.back().excluded = Exclusion::match_failed;
    const auto scatter = velo::scatter_data(rows);
    REQUIRE(scatter.points.size() == 1);
    REQUIRE(scatter.below_diagonal_fraction == 1.0);
  }
}

TEST_CASE("decile bins") {
  SECTION("exactly ten trajectories: bins of one") {
    std::vector<MetricsRow> rows;
    for (int i = 0; i < 10; ++i)
      rows.push_back(valid_row("t" + std::to_string(i), 100.0 * (i + 1), 1.0 + 0.1 * i, 2.0));
    const auto bins = velo::decile_bins(rows);
    REQUIRE(bins.size() == 10);
    for (std::size_t i = 0; i < bins.size(); ++i) {
      REQUIRE(bins[i].n == 1);
      REQUIRE_THAT(bins[i].observed.median,
                   Catch::Matchers::WithinAbs(1.0 + 0.1 * static_cast<double>(i), 1e-12));
      REQUIRE(bins[i].observed.variance == 0.0);
    }
  }
  SECTION("remainder rule: 25 -> 3,3,3,3,3,2,2,2,2,2") {
    std::vector<MetricsRow> rows;
    for (int i = 0; i < 25; ++i)
      rows.push_back(valid_row("t" + std::to_string(i), 50.0 * (i + 1), 2.0, 2.0));
    const auto bins = velo::decile_bins(rows);
    const std::vector<std::size_t> expected = {3, 3, 3, 3, 3, 2, 2, 2, 2, 2};
    REQUIRE(bins.size() == expected.size());
    std::size_t total = 0;
    for (std::size_t i = 0; i < bins.size(); ++i) {
      REQUIRE(bins[i].n == expected[i]);
      total += bins[i].n;
      if (i) REQUIRE(bins[i].od_lo_m >= bins[i - 1].od_lo_m);
    }
    REQUIRE(total == 25);
  }
  SECTION("too few trajectories point at the bin-count knob") {
    std::vector<MetricsRow> rows;
    for (int i = 0; i < 7; ++i) rows.push_back(valid_row("t" + std::to_string(i), 100, 2, 2));
    try {
      velo::decile_bins(rows);
      FAIL("expected error");
    } catch (const std::invalid_argument& e) {
      REQUIRE(std::string(e.what()).find("bin count") != std::string::npos);
    }
    REQUIRE(velo::decile_bins(rows, 10'000.0, 7).size() == 7);
  }
  SECTION("the 10 km cutoff and exclusions shape the population") {
    std::vector<MetricsRow> rows;
    for (int i = 0; i < 12; ++i)
      rows.push_back(valid_row("t" + std::to_string(i), 500.0 * (i + 1), 2.0, 2.0));
    rows.push_back(valid_row("far", 15'000.0, 2.0, 2.0));
    rows.push_back(valid_row("broken", 100.0, 2.0, 2.0));
    rows.back().excluded = Exclusion::snap_exceeded;
    const auto bins = velo::decile_bins(rows);
    std::size_t total = 0;
    for (const BinSummary& bin : bins) total += bin.n;
    REQUIRE(total == 12);
  }
  SECTION("bins partition the sorted population") {
    velo::Rng rng(23);
    std::vector<MetricsRow> rows;
    for (int i = 0; i < 83; ++i)
      rows.push_back(valid_row("t" + std::to_string(i), rng.uniform(10, 9999),
                               rng.uniform(1, 4), rng.uniform(1, 4)));
    const auto bins = velo::decile_bins(rows);
    std::size_t total = 0;
    for (std::size_t i = 0; i < bins.size(); ++i) {
      total += bins[i].n;
      REQUIRE(bins[i].od_hi_m >= bins[i].od_lo_m);
      if (i) REQUIRE(bins[i].od_lo_m >= bins[i - 1].od_lo_m);
    }
    REQUIRE(total == 83);
  }
}

TEST_CASE("population summary") {
  SECTION("single trajectory: medians equal its values") {
    std::vector<MetricsRow> rows = {valid_row("a", 100, 1.5, 2.5)};
    const auto s = velo::population_summary(rows);
    REQUIRE(s.valid == 1);
    REQUIRE(s.median_observed_lts == 1.5);
    REQUIRE(s.median_optimal_lts == 2.5);
    REQUIRE(s.median_observed_length_m == 130.0);
  }
  SECTION("exclusions are tallied per reason") {
    std::vector<MetricsRow> rows = {valid_row("a", 100, 1, 1), valid_row("b", 100, 1, 1),
                                    valid_row("c", 100, 1, 1)};
    rows[1].excluded = Exclusion::snap_exceeded;
    rows[2].excluded = Exclusion::degenerate;
    const auto s = velo::population_summary(rows);
    REQUIRE(s.valid == 1);
    REQUIRE(s.excluded_snap == 1);
    REQUIRE(s.excluded_degenerate == 1);
  }
}
