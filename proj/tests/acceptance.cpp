// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Oracles live in test_oracles.hpp and stay independent of
// the implementations they check.

#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "test_oracles.hpp"
#include "velo/analytics.hpp"
#include "velo/cli.hpp"
#include "velo/lts.hpp"
#include "velo/map_matching.hpp"
#include "velo/osm_xml.hpp"
#include "velo/pipeline.hpp"
#include "velo/synth.hpp"

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Check {
  bool ok = true;
  std::string detail;

  void require(bool condition, const std::string& message) {
    if (!condition && ok) {
      ok = false;
      note("FAILED: " + message);
    }
  }
  void note(const std::string& message) {
    if (!detail.empty()) detail += "; ";
    detail += message;
  }
};

velo::BallTree node_index(const velo::StreetNetwork& net) {
  std::vector<velo::BallTree::Item> items;
  for (std::size_t i = 0; i < net.node_count(); ++i) {
    const velo::NodeId id(static_cast<std::uint32_t>(i));
    items.push_back({id, net.node(id)});
  }
  return velo::BallTree::build(std::move(items));
}

std::string fixture(const char* name) {
  return std::string(VELOMAP_FIXTURE_DIR) + "/" + name;
}

// ---- criterion 1: qualitative reproduction at desk scale ----

Check criterion_pattern_reproduction() {
  Check c;
  const auto started = Clock::now();

  const fs::path out_dir =
      fs::temp_directory_path() / ("velomap_accept1_" + std::to_string(::getpid()));
  fs::remove_all(out_dir);

  velo::RunConfig config;
  config.out_dir = out_dir;
  config.seed = 20210503;
  velo::GridCitySpec city;
  city.rows = 20;
  city.cols = 20;
  city.arterial_every = 4;
  city.seed = config.seed;
  velo::AgentSpec agents;
  agents.n_agents = 500;
  agents.safety_weight = 3.0;
  agents.gps_noise_sigma_m = 8.0;

  const velo::PipelineOutcome outcome = velo::run_synth_pipeline(config, city, agents);
  const auto& analysis = outcome.analysis;

  c.require(analysis.scatter.below_diagonal_fraction.has_value(), "scatter fraction missing");
  if (analysis.scatter.below_diagonal_fraction) {
    c.note("below_diagonal=" + velo::io::fmt_double(*analysis.scatter.below_diagonal_fraction, 4));
    c.require(*analysis.scatter.below_diagonal_fraction > 0.60,
              "below-diagonal fraction not > 0.60");
  }

  c.note("median observed=" + velo::io::fmt_double(analysis.summary.median_observed_length_m, 1) +
         "m optimal=" + velo::io::fmt_double(analysis.summary.median_optimal_length_m, 1) + "m");
  c.require(analysis.summary.median_observed_length_m >= analysis.summary.median_optimal_length_m,
            "median observed length below median optimal length");

  c.require(analysis.bins.size() == 10, "expected 10 decile bins, got " +
                                            std::to_string(analysis.bins.size()) +
                                            (analysis.bins_error.empty() ? "" : " (" + analysis.bins_error + ")"));
  if (analysis.bins.size() == 10) {
    int bins_ok = 0;
    for (const velo::BinSummary& bin : analysis.bins)
      if (bin.observed.median <= bin.optimal.median) ++bins_ok;
    c.note("bins with observed<=optimal: " + std::to_string(bins_ok) + "/10");
    c.require(bins_ok >= 9, "fewer than 9 of 10 bins have observed median <= optimal median");

    double bottom_gap = 0.0, top_gap = 0.0;
    for (int i = 0; i < 3; ++i) {
      bottom_gap += analysis.bins[static_cast<std::size_t>(i)].optimal.median -
                    analysis.bins[static_cast<std::size_t>(i)].observed.median;
      top_gap += analysis.bins[static_cast<std::size_t>(7 + i)].optimal.median -
                 analysis.bins[static_cast<std::size_t>(7 + i)].observed.median;
    }
    c.note("gap bottom3=" + velo::io::fmt_double(bottom_gap / 3.0, 3) +
           " top3=" + velo::io::fmt_double(top_gap / 3.0, 3));
    c.require(top_gap > bottom_gap, "top-3 bin gap not larger than bottom-3 bin gap");
  }

  const double seconds = std::chrono::duration<double>(Clock::now() - started).count();
  c.note("runtime=" + velo::io::fmt_double(seconds, 1) + "s");
  c.require(seconds <= 120.0, "runtime exceeded 2 minutes");

  fs::remove_all(out_dir);
  return c;
}

// ---- criterion 2: the two verbatim stress-table anchors ----

Check criterion_lts_anchors() {
  Check c;
  velo::EdgeAttributes separated;
  separated.highway = velo::HighwayClass::secondary;
  separated.cycleway = velo::CyclewayType::track;
  c.require(velo::classify_edge(separated).score.value() == 1,
            "separated facility did not classify as LTS 1");

  velo::EdgeAttributes fast_lane;
  fast_lane.highway = velo::HighwayClass::primary;
  fast_lane.cycleway = velo::CyclewayType::lane;
  fast_lane.maxspeed_kmh = 70.0;
  c.require(velo::classify_edge(fast_lane).score.value() == 4,
            "bike lane at 70 km/h did not classify as LTS 4");
  c.note("LTS(track)=1, LTS(lane@70)=4");
  return c;
}

// ---- criterion 3: Dijkstra vs exhaustive enumeration ----

Check criterion_dijkstra_oracle() {
  Check c;
  const auto started = Clock::now();
  velo::Rng rng(160914);
  int graphs = 0, routed = 0;
  while (graphs < 200) {
    const std::size_t n = 2 + rng.next_below(11);
    const velo::StreetNetwork net = oracle::random_connected_network(rng, n, n);
    ++graphs;
    const velo::NodeId origin(static_cast<std::uint32_t>(rng.next_below(n)));
    const velo::NodeId dest(static_cast<std::uint32_t>(rng.next_below(n)));
    for (const velo::WeightScheme scheme :
         {velo::WeightScheme::length(), velo::WeightScheme::time(15.0)}) {
      const auto weight = [&](velo::EdgeId e) { return velo::edge_weight(scheme, net.edge(e)); };
      const auto expect = oracle::brute_force_shortest(net, origin, dest, weight);
      const auto got = velo::try_shortest_path(net, scheme, origin, dest);
      c.require(expect.has_value() == got.has_value(), "reachability mismatch");
      if (!expect || !got) continue;
      const double expect_weight = oracle::path_weight(expect->edges, weight);
      c.require(std::abs(got->total_weight - expect_weight) <= 1e-9,
                "weight mismatch: got " + std::to_string(got->total_weight) + " expected " +
                    std::to_string(expect_weight));
      c.require(got->nodes == expect->nodes && got->edges == expect->edges,
                "path mismatch after tie-break");
      ++routed;
    }
  }
  const double seconds = std::chrono::duration<double>(Clock::now() - started).count();
  c.note(std::to_string(graphs) + " graphs, " + std::to_string(routed) + " routed pairs, " +
         velo::io::fmt_double(seconds, 1) + "s");
  c.require(seconds <= 30.0, "runtime exceeded 30 s");
  return c;
}

// ---- criterion 4: ball tree vs linear scan ----

Check criterion_ball_tree_oracle() {
  Check c;
  const auto started = Clock::now();
  velo::Rng rng(271828);
  std::size_t cases = 0;
  for (int round = 0; round < 200 && c.ok; ++round) {
    const std::size_t n = 1 + rng.next_below(400);
    std::vector<velo::BallTree::Item> items;
    items.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
      items.push_back(
          {velo::NodeId(static_cast<std::uint32_t>(i)), oracle::random_city_point(rng)});
    for (std::size_t i = 0; i + 1 < items.size(); i += 9) items[i + 1].point = items[i].point;
    const velo::BallTree tree = velo::BallTree::build(items);

    for (int q = 0; q < 50 && c.ok; ++q) {
      const velo::GeoPoint query = oracle::random_city_point(rng);
      const auto expect = oracle::nearest_linear(items, query);
      const auto got = tree.nearest(query);
      c.require(got.id == expect.id && got.distance_m == expect.distance_m,
                "nearest mismatch vs linear scan");

      const double radius = rng.uniform(0.0, 15'000.0);
      const auto expect_r = oracle::within_radius_linear(items, query, radius);
      const auto got_r = tree.within_radius(query, radius);
      bool same = got_r.size() == expect_r.size();
      for (std::size_t i = 0; same && i < got_r.size(); ++i)
        same = got_r[i].id == expect_r[i].id && got_r[i].distance_m == expect_r[i].distance_m;
      c.require(same, "within_radius mismatch vs linear scan");
      ++cases;
    }
  }
  const double seconds = std::chrono::duration<double>(Clock::now() - started).count();
  c.note(std::to_string(cases) + " query cases (nearest + radius each), " +
         velo::io::fmt_double(seconds, 1) + "s");
  c.require(cases >= 10'000, "fewer than 10,000 cases executed");
  c.require(seconds <= 30.0, "runtime exceeded 30 s");
  return c;
}

// ---- criterion 5: map matching ----

Check criterion_map_matching() {
  Check c;

  velo::GridCitySpec city;
  city.rows = 10;
  city.cols = 10;
  city.arterial_every = 3;
  const velo::StreetNetwork net = velo::gen_city(city);
  const velo::NetworkLts lts = velo::classify_network(net);
  const velo::BallTree tree = node_index(net);
  const velo::Matcher matcher(net, tree);

  // (a) zero noise: exact recovery on 100 seeded traces
  {
    velo::AgentSpec agents;
    agents.n_agents = 100;
    agents.safety_weight = 2.0;
    agents.gps_noise_sigma_m = 0.0;
    agents.sample_spacing_m = 20.0;
    const velo::SynthResult synth = velo::gen_trajectories(net, lts, agents, 1001);
    std::size_t exact = 0;
    for (std::size_t i = 0; i < synth.trajectories.size(); ++i) {
      const auto result = matcher.match(synth.trajectories[i]);
      if (result.status == velo::MatchStatus::ok && result.path->edges == synth.ground_truth[i])
        ++exact;
    }
    c.note("zero-noise exact " + std::to_string(exact) + "/" +
           std::to_string(synth.trajectories.size()));
    c.require(exact == synth.trajectories.size(), "zero-noise recovery not 100%");
  }

  // (b) sigma = 5 m: mean edge-set Jaccard >= 0.95 on 100 seeded traces
  {
    velo::AgentSpec agents;
    agents.n_agents = 100;
    agents.safety_weight = 2.0;
    agents.gps_noise_sigma_m = 5.0;
    agents.sample_spacing_m = 20.0;
    const velo::SynthResult synth = velo::gen_trajectories(net, lts, agents, 2002);
    double jaccard_sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t i = 0; i < synth.trajectories.size(); ++i) {
      const auto result = matcher.match(synth.trajectories[i]);
      if (result.status != velo::MatchStatus::ok) continue;  // counts as 0
      const std::set<velo::EdgeId> got(result.path->edges.begin(), result.path->edges.end());
      const std::set<velo::EdgeId> want(synth.ground_truth[i].begin(),
                                        synth.ground_truth[i].end());
      std::size_t inter = 0;
      for (const velo::EdgeId& e : got) inter += want.count(e);
      const std::size_t uni = got.size() + want.size() - inter;
      jaccard_sum += uni ? static_cast<double>(inter) / static_cast<double>(uni) : 1.0;
      ++counted;
    }
    const double mean = jaccard_sum / static_cast<double>(synth.trajectories.size());
    c.note("sigma5 mean Jaccard " + velo::io::fmt_double(mean, 4) + " over " +
           std::to_string(synth.trajectories.size()) + " traces (" + std::to_string(counted) +
           " matched)");
    c.require(mean >= 0.95, "mean Jaccard below 0.95");
  }

  // (c) Viterbi equals brute force on 100 random small lattices
  {
    velo::GridCitySpec small;
    small.rows = 4;
    small.cols = 4;
    const velo::StreetNetwork tiny = velo::gen_city(small);
    const velo::NetworkLts tiny_lts = velo::classify_network(tiny);
    const velo::BallTree tiny_tree = node_index(tiny);
    velo::MatchParams params;
    params.max_candidates = 4;
    const velo::Matcher tiny_matcher(tiny, tiny_tree, params);

    velo::Rng seeds(3003);
    int verified = 0;
    int attempts = 0;
    while (verified < 100 && attempts < 1000) {
      ++attempts;
      velo::AgentSpec agents;
      agents.n_agents = 1;
      agents.gps_noise_sigma_m = 12.0;
      agents.sample_spacing_m = 45.0;
      const velo::SynthResult synth =
          velo::gen_trajectories(tiny, tiny_lts, agents, seeds.next_u64() & 0xfffff);
      if (synth.trajectories.empty() || synth.trajectories.front().size() > 8) continue;
      const velo::Trajectory& traj = synth.trajectories.front();
      const auto result = tiny_matcher.match(traj);
      if (result.status != velo::MatchStatus::ok) continue;

      std::vector<std::vector<velo::CandidateProjection>> stages;
      std::vector<double> gc{0.0};
      std::optional<std::size_t> prev;
      const auto points = traj.points();
      for (std::size_t i = 0; i < points.size(); ++i) {
        auto cands = tiny_matcher.candidates(points[i], i);
        if (cands.empty()) continue;
        if (prev) gc.push_back(velo::haversine_distance(points[*prev].loc(), points[i].loc()));
        stages.push_back(std::move(cands));
        prev = i;
      }
      const auto best = oracle::brute_force_lattice(tiny_matcher, stages, gc);
      c.require(result.path->confidence == best.logp,
                "joint log-likelihood differs from brute force");
      ++verified;
    }
    c.note("viterbi-vs-brute-force verified on " + std::to_string(verified) + " lattices");
    c.require(verified >= 100, "fewer than 100 lattices verified");
  }
  return c;
}

// ---- criterion 6: score(T) properties ----

Check criterion_score_properties() {
  Check c;
  velo::NetworkLts lts;
  for (int v : {1, 1, 4, 2, 3, 4, 2}) lts.by_edge.emplace_back(v);

  const std::vector<velo::EdgeId> anchor = {velo::EdgeId(0), velo::EdgeId(1), velo::EdgeId(2)};
  c.require(velo::lts_score(anchor, lts) == 2.0, "[1,1,4] did not score exactly 2.0");

  velo::Rng rng(606);
  for (int round = 0; round < 500; ++round) {
    std::vector<velo::EdgeId> path;
    const std::size_t n = 1 + rng.next_below(7);
    for (std::size_t i = 0; i < n; ++i)
      path.emplace_back(static_cast<std::uint32_t>(rng.next_below(7)));
    const double score = velo::lts_score(path, lts);
    c.require(score >= 1.0 && score <= 4.0, "score out of [1, 4]");
    // Permutation invariance: shuffle via seeded swaps.
    std::vector<velo::EdgeId> shuffled = path;
    for (std::size_t i = shuffled.size(); i > 1; --i)
      std::swap(shuffled[i - 1], shuffled[rng.next_below(i)]);
    c.require(velo::lts_score(shuffled, lts) == score, "score not permutation-invariant");
  }
  c.note("bounds + permutation invariance over 500 random paths, anchor exact");
  return c;
}

// ---- criterion 7: byte-identical reruns ----

Check criterion_determinism() {
  Check c;
  const auto run = [&](const fs::path& out_dir) {
    velo::RunConfig config;
    config.out_dir = out_dir;
    config.seed = 7;
    velo::GridCitySpec city;
    city.rows = 10;
    city.cols = 10;
    city.arterial_every = 4;
    city.seed = config.seed;
    velo::AgentSpec agents;
    agents.n_agents = 60;
    agents.safety_weight = 3.0;
    agents.gps_noise_sigma_m = 6.0;
    velo::run_synth_pipeline(config, city, agents);
  };
  const fs::path base =
      fs::temp_directory_path() / ("velomap_accept7_" + std::to_string(::getpid()));
  const fs::path dir_a = base / "a";
  const fs::path dir_b = base / "b";
  fs::remove_all(base);
  run(dir_a);
  run(dir_b);

  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(dir_a)) {
    const fs::path name = entry.path().filename();
    std::ifstream in_a(entry.path(), std::ios::binary);
    std::ifstream in_b(dir_b / name, std::ios::binary);
    c.require(in_b.good(), "second run missing artifact " + name.string());
    if (!in_b.good()) continue;
    const std::string bytes_a((std::istreambuf_iterator<char>(in_a)),
                              std::istreambuf_iterator<char>{});
    const std::string bytes_b((std::istreambuf_iterator<char>(in_b)),
                              std::istreambuf_iterator<char>{});
    c.require(bytes_a == bytes_b, "artifact differs between runs: " + name.string());
    ++compared;
  }
  c.note(std::to_string(compared) + " artifacts byte-identical across two runs");
  c.require(compared >= 10, "expected at least 10 artifacts");
  fs::remove_all(base);
  return c;
}

// ---- criterion 8: parser golden files ----

Check criterion_parser_golden() {
  Check c;
  {
    std::ifstream in(fixture("minimal_twoway.osm"), std::ios::binary);
    const velo::StreetNetwork net = velo::parse_osm_xml(in);
    c.require(net.node_count() == 2 && net.edge_count() == 2,
              "minimal_twoway.osm counts wrong");
    c.require(net.edge(velo::EdgeId(0)).attrs.name == "Via Prova",
              "minimal_twoway.osm name attribute wrong");
  }
  {
    std::ifstream in(fixture("oneway.osm"), std::ios::binary);
    const velo::StreetNetwork net = velo::parse_osm_xml(in);
    c.require(net.node_count() == 2 && net.edge_count() == 1, "oneway.osm counts wrong");
  }
  {
    std::ifstream in(fixture("junction.osm"), std::ios::binary);
    const velo::StreetNetwork net = velo::parse_osm_xml(in);
    c.require(net.node_count() == 4 && net.edge_count() == 6, "junction.osm counts wrong");
  }
  {
    std::ifstream in(fixture("attributes.osm"), std::ios::binary);
    const velo::StreetNetwork net = velo::parse_osm_xml(in);
    c.require(net.node_count() == 7 && net.edge_count() == 7, "attributes.osm counts wrong");
    const velo::Edge& e = net.edge(velo::EdgeId(0));
    c.require(e.attrs.maxspeed_kmh == 50.0 && e.attrs.lanes == 2 &&
                  e.attrs.cycleway == velo::CyclewayType::track &&
                  e.attrs.parking_present == true,
              "attributes.osm attribute mapping wrong");
  }
  {
    std::ifstream in(fixture("malformed_truncated.osm"), std::ios::binary);
    bool threw = false;
    try {
      velo::parse_osm_xml(in);
    } catch (const velo::ParseError& e) {
      threw = e.byte_offset() > 0;
    }
    c.require(threw, "truncated fixture did not raise ParseError with offset");
  }
  {
    std::ifstream in(fixture("malformed_missing_node.osm"), std::ios::binary);
    bool threw = false;
    try {
      velo::parse_osm_xml(in);
    } catch (const velo::SchemaError& e) {
      threw = std::string(e.what()).find("way 77") != std::string::npos;
    }
    c.require(threw, "missing-node fixture did not raise the structured error");
  }
  c.note("4 golden fixtures exact, 2 malformed fixtures raise structured errors");
  return c;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Check()> run;
  };
  const std::vector<Criterion> criteria = {
      {"1 paper-pattern reproduction (synthetic, desk scale)", criterion_pattern_reproduction},
      {"2 LTS paper anchors (exact)", criterion_lts_anchors},
      {"3 Dijkstra oracle equivalence (200 graphs, both schemes)", criterion_dijkstra_oracle},
      {"4 ball tree oracle equivalence (10,000 cases)", criterion_ball_tree_oracle},
      {"5 map matching (zero-noise, sigma-5 Jaccard, Viterbi brute force)",
       criterion_map_matching},
      {"6 score(T) properties", criterion_score_properties},
      {"7 pipeline determinism (byte-identical artifacts)", criterion_determinism},
      {"8 parser golden files", criterion_parser_golden},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    Check result;
    try {
      result = criterion.run();
    } catch (const std::exception& e) {
      result.ok = false;
      result.detail = std::string("exception: ") + e.what();
    }
    if (!result.ok) ++failures;
    std::printf("%s criterion %s%s%s\n", result.ok ? "PASS" : "FAIL", criterion.name,
                result.detail.empty() ? "" : " -- ", result.detail.c_str());
    std::fflush(stdout);
  }
  return failures;
}
