// Generates one noisy synthetic ride and map-matches it back onto the grid.

#include <cstdio>

#include "velo/ball_tree.hpp"
#include "velo/lts.hpp"
#include "velo/map_matching.hpp"
#include "velo/synth.hpp"

int main() {
  velo::GridCitySpec city;
  city.rows = 10;
  city.cols = 10;
  const velo::StreetNetwork net = velo::gen_city(city);
  const velo::NetworkLts lts = velo::classify_network(net);

  velo::AgentSpec agents;
  agents.n_agents = 1;
  agents.safety_weight = 2.0;
  agents.gps_noise_sigma_m = 6.0;
  const velo::SynthResult synth = velo::gen_trajectories(net, lts, agents, /*seed=*/7);

  std::vector<velo::BallTree::Item> items;
  for (std::size_t i = 0; i < net.node_count(); ++i) {
    const velo::NodeId id(static_cast<std::uint32_t>(i));
    items.push_back({id, net.node(id)});
  }
  const velo::BallTree tree = velo::BallTree::build(std::move(items));
  const velo::Matcher matcher(net, tree);

  const velo::Trajectory& ride = synth.trajectories.front();
  const velo::MatchResult result = matcher.match(ride);
  if (result.status != velo::MatchStatus::ok) {
    std::printf("match failed: %s\n", result.reason.c_str());
    return 1;
  }
  const velo::MatchQuality quality = matcher.quality(*result.path, ride);
  std::printf("%zu fixes -> %zu matched edges (truth %zu)\n", ride.size(),
              result.path->edges.size(), synth.ground_truth.front().size());
  std::printf("mean residual %.1f m, length ratio %.3f, log-likelihood %.1f\n",
              quality.mean_perp_m, quality.length_ratio, result.path->confidence);
  return 0;
}
