#include <sstream>

#include <catch_amalgamated.hpp>

#include "test_oracles.hpp"
#include "velo/analytics.hpp"
#include "velo/synth.hpp"
#include "velo/trajectory_csv.hpp"

using velo::AgentSpec;
using velo::EdgeId;
using velo::GridCitySpec;
using velo::NodeId;
using velo::StreetNetwork;

TEST_CASE("gen_city shape") {
  SECTION("2x2 grid: 4 nodes, 8 directed edges") {
    GridCitySpec spec;
    spec.rows = 2;
    spec.cols = 2;
    const StreetNetwork net = velo::gen_city(spec);
    REQUIRE(net.node_count() == 4);
    REQUIRE(net.edge_count() == 8);
    REQUIRE_NOTHROW(net.validate());
  }
  SECTION("degenerate specs are rejected") {
    GridCitySpec spec;
    spec.rows = 1;
    REQUIRE_THROWS_AS(velo::gen_city(spec), std::invalid_argument);
    spec.rows = 3;
    spec.block_m = 0.0;
    REQUIRE_THROWS_AS(velo::gen_city(spec), std::invalid_argument);
  }
  SECTION("same seed, identical network; different seed, different meanders") {
    GridCitySpec spec;
    spec.rows = 4;
    spec.cols = 4;
    const StreetNetwork a = velo::gen_city(spec);
    const StreetNetwork b = velo::gen_city(spec);
    REQUIRE(a.edge_count() == b.edge_count());
    for (std::size_t i = 0; i < a.edge_count(); ++i)
      REQUIRE(a.edge(EdgeId(static_cast<std::uint32_t>(i))).length_m ==
              b.edge(EdgeId(static_cast<std::uint32_t>(i))).length_m);
    spec.seed = 2;
    const StreetNetwork c = velo::gen_city(spec);
    bool any_differs = false;
    for (std::size_t i = 0; i < a.edge_count(); ++i)
      if (a.edge(EdgeId(static_cast<std::uint32_t>(i))).length_m !=
          c.edge(EdgeId(static_cast<std::uint32_t>(i))).length_m)
        any_differs = true;
    REQUIRE(any_differs);
  }
  SECTION("arterials are straight, residential streets meander") {
    GridCitySpec spec;
    spec.rows = 6;
    spec.cols = 6;
    spec.arterial_every = 2;
    const StreetNetwork net = velo::gen_city(spec);
    for (std::size_t i = 0; i < net.edge_count(); ++i) {
      const EdgeId id(static_cast<std::uint32_t>(i));
      const velo::Edge& e = net.edge(id);
      const double chord = net.edge_chord_m(id);
      if (e.attrs.highway == velo::HighwayClass::primary) {
        REQUIRE(e.length_m == chord);
      } else {
        REQUIRE(e.length_m >= chord * (1.0 + spec.meander_min));
        REQUIRE(e.length_m <= chord * (1.0 + spec.meander_max));
      }
    }
  }
  SECTION("reverse twins share one length") {
    GridCitySpec spec;
    spec.rows = 3;
    spec.cols = 3;
    const StreetNetwork net = velo::gen_city(spec);
    for (std::size_t i = 0; i < net.edge_count(); i += 2)
      REQUIRE(net.edge(EdgeId(static_cast<std::uint32_t>(i))).length_m ==
              net.edge(EdgeId(static_cast<std::uint32_t>(i + 1))).length_m);
  }
}

TEST_CASE("gen_trajectories") {
  GridCitySpec city;
  city.rows = 8;
  city.cols = 8;
  city.arterial_every = 3;
  const StreetNetwork net = velo::gen_city(city);
  const velo::NetworkLts lts = velo::classify_network(net);

  SECTION("lambda 0, sigma 0 reduces to the length-shortest path") {
    AgentSpec agents;
    agents.n_agents = 12;
    const velo::SynthResult synth = velo::gen_trajectories(net, lts, agents, 9001);
    REQUIRE(synth.trajectories.size() == 12);
    for (std::size_t i = 0; i < synth.trajectories.size(); ++i) {
      const auto& gt = synth.ground_truth[i];
      const NodeId origin = net.edge(gt.front()).from;
      const NodeId dest = net.edge(gt.back()).to;
      const auto shortest =
          velo::shortest_path(net, velo::WeightScheme::length(), origin, dest);
      REQUIRE(gt == shortest.edges);
    }
  }
  SECTION("high lambda avoids arterials when a calm alternative exists") {
    AgentSpec agents;
    agents.n_agents = 1;
    agents.safety_weight = 5.0;
    // Interior residential corners: a calm staircase always exists.
    const std::vector<std::pair<NodeId, NodeId>> od = {
        {NodeId(1 * 8 + 1), NodeId(7 * 8 + 7)}};
    const velo::SynthResult synth = velo::gen_trajectories(net, lts, agents, 1, od);
    REQUIRE(synth.trajectories.size() == 1);
    for (EdgeId e : synth.ground_truth.front())
      REQUIRE(lts.at(e).value() < 4);
  }
  SECTION("mean ground-truth stress is non-increasing in lambda") {
    velo::Rng rng(64);
    for (int round = 0; round < 12; ++round) {
      const NodeId o(static_cast<std::uint32_t>(rng.next_below(net.node_count())));
      NodeId d = o;
      while (d == o) d = NodeId(static_cast<std::uint32_t>(rng.next_below(net.node_count())));
      double previous = 5.0;
      for (const double lambda : {0.0, 1.0, 2.0, 5.0}) {
        const auto path =
            velo::try_shortest_path(net, o, d, velo::stress_aware_weight(net, lts, lambda));
        REQUIRE(path.has_value());
        const double mean = velo::lts_score(path->edges, lts);
        REQUIRE(mean <= previous + 1e-12);
        previous = mean;
      }
    }
  }
  SECTION("noise honesty: mean offset from the true path stays under 2 sigma") {
    AgentSpec agents;
    agents.n_agents = 10;
    agents.gps_noise_sigma_m = 8.0;
    const velo::SynthResult synth = velo::gen_trajectories(net, lts, agents, 777);

    const double deg_m = velo::kEarthRadiusM * (std::numbers::pi / 180.0);
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < synth.trajectories.size(); ++i) {
      for (const auto& p : synth.trajectories[i].points()) {
        double best = 1e18;
        for (EdgeId e : synth.ground_truth[i]) {
          const velo::GeoPoint& a = net.node(net.edge(e).from);
          const velo::GeoPoint& b = net.node(net.edge(e).to);
          const double ax = (a.lon() - p.loc().lon()) * deg_m * std::cos(velo::radians(p.loc().lat()));
          const double ay = (a.lat() - p.loc().lat()) * deg_m;
          const double bx = (b.lon() - p.loc().lon()) * deg_m * std::cos(velo::radians(p.loc().lat()));
          const double by = (b.lat() - p.loc().lat()) * deg_m;
          const double dx = bx - ax, dy = by - ay;
          const double len2 = dx * dx + dy * dy;
          const double frac = len2 > 0 ? std::clamp((-ax * dx - ay * dy) / len2, 0.0, 1.0) : 0.0;
          best = std::min(best, std::hypot(ax + frac * dx, ay + frac * dy));
        }
        total += best;
        ++count;
      }
    }
    REQUIRE(total / static_cast<double>(count) <= 2.0 * agents.gps_noise_sigma_m);
  }
  SECTION("timestamps tick every five seconds") {
    AgentSpec agents;
    agents.n_agents = 3;
    const velo::SynthResult synth = velo::gen_trajectories(net, lts, agents, 2);
    for (const auto& traj : synth.trajectories) {
      const auto pts = traj.points();
      for (std::size_t i = 1; i < pts.size(); ++i)
        REQUIRE(pts[i].t() - pts[i - 1].t() == 5);
    }
  }
  SECTION("fixed seed reproduces byte-identical CSV") {
    AgentSpec agents;
    agents.n_agents = 6;
    agents.gps_noise_sigma_m = 7.0;
    std::ostringstream a, b;
    velo::write_trajectories_csv(a, velo::gen_trajectories(net, lts, agents, 99).trajectories);
    velo::write_trajectories_csv(b, velo::gen_trajectories(net, lts, agents, 99).trajectories);
    REQUIRE(a.str() == b.str());
    REQUIRE_FALSE(a.str().empty());
  }
  SECTION("explicit same-node OD pairs are skipped with a count") {
    AgentSpec agents;
    agents.n_agents = 2;
    const std::vector<std::pair<NodeId, NodeId>> od = {{NodeId(3), NodeId(3)},
                                                       {NodeId(0), NodeId(5)}};
    const velo::SynthResult synth = velo::gen_trajectories(net, lts, agents, 5, od);
    REQUIRE(synth.skipped_disconnected == 1);
    REQUIRE(synth.trajectories.size() == 1);
  }
}
