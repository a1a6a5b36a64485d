// Builds a small grid city, scores it, and routes one OD pair under the
// length scheme and two safety weights.

#include <cstdio>

#include "velo/analytics.hpp"
#include "velo/lts.hpp"
#include "velo/routing.hpp"
#include "velo/synth.hpp"

int main() {
  velo::GridCitySpec spec;
  spec.rows = 8;
  spec.cols = 8;
  spec.arterial_every = 3;
  const velo::StreetNetwork net = velo::gen_city(spec);
  const velo::NetworkLts lts = velo::classify_network(net);

  const velo::NodeId origin(0);
  const velo::NodeId dest(static_cast<std::uint32_t>(net.node_count() - 1));

  const auto shortest = velo::shortest_path(net, velo::WeightScheme::length(), origin, dest);
  std::printf("length-optimal: %.0f m over %zu edges, mean LTS %.2f\n",
              shortest.total_length_m, shortest.edges.size(),
              velo::lts_score(shortest.edges, lts));

  for (double lambda : {1.0, 3.0}) {
    const auto safe =
        velo::shortest_path(net, origin, dest, velo::stress_aware_weight(net, lts, lambda));
    std::printf("lambda=%.0f     : %.0f m over %zu edges, mean LTS %.2f\n", lambda,
                safe.total_length_m, safe.edges.size(), velo::lts_score(safe.edges, lts));
  }
  return 0;
}
