#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "velo/analytics.hpp"
#include "velo/ball_tree.hpp"
#include "velo/csv.hpp"
#include "velo/edgelist_json.hpp"
#include "velo/errors.hpp"
#include "velo/io.hpp"
#include "velo/lts.hpp"
#include "velo/map_matching.hpp"
#include "velo/network.hpp"
#include "velo/osm_xml.hpp"
#include "velo/routing.hpp"
#include "velo/synth.hpp"
#include "velo/trajectory_csv.hpp"

namespace velo {

/// Everything a run needs. Stages communicate exclusively through files in
/// out_dir, so each one can be re-run from its predecessor's artifacts.
struct RunConfig {
  std::filesystem::path network_path;
  std::string network_format = "auto";  // "osm" | "json" | "auto" (by extension)
  std::filesystem::path trajectories_path;
  std::filesystem::path out_dir;

  bool filter_bikeable_edges = true;
  bool reaggregate = false;  // re-segment each user's fix stream before matching
  MatchParams match;
  double max_snap_m = 500.0;
  double cruise_kmh = 15.0;
  double bin_cutoff_m = 10'000.0;
  std::size_t bins = 10;
  bool lts_length_weighted = false;
  bool bin_by_network_length = false;
  bool time_scheme_scatter = false;
  std::uint64_t seed = 1;
  std::size_t threads = 0;  // 0 = hardware concurrency
};

namespace pipeline_detail {

inline std::filesystem::path artifact(const RunConfig& config, const char* name) {
  return config.out_dir / name;
}

inline void ensure_out_dir(const RunConfig& config) {
  std::filesystem::create_directories(config.out_dir);
}

inline StreetNetwork read_network_artifact(const RunConfig& config) {
  const auto path = artifact(config, "network.json");
  std::ifstream in(path);
  if (!in) throw Error("missing artifact " + path.string() + "; run ingest or synth first");
  return load_edgelist_json(in);
}

inline std::vector<Trajectory> read_trajectories_artifact(const RunConfig& config) {
  const auto path = artifact(config, "trajectories.csv");
  std::ifstream in(path);
  if (!in) throw Error("missing artifact " + path.string() + "; run ingest or synth first");
  return load_trajectories_csv(in);
}

inline BallTree build_node_index(const StreetNetwork& net) {
  std::vector<BallTree::Item> items;
  items.reserve(net.node_count());
  for (std::size_t i = 0; i < net.node_count(); ++i) {
    const NodeId id(static_cast<std::uint32_t>(i));
    items.push_back({id, net.node(id)});
  }
  return BallTree::build(std::move(items));
}

/// Index-deterministic parallel map: out[i] = fn(i).
template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  if (threads == 0) threads = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(1, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  std::atomic<std::size_t> next{0};
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        fn(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

inline nlohmann::json match_params_json(const MatchParams& p) {
  return {{"candidate_radius_m", p.candidate_radius_m},
          {"max_candidates", p.max_candidates},
          {"emission_sigma_m", p.emission_sigma_m},
          {"transition_beta_m", p.transition_beta_m},
          {"gap_split_s", p.gap_split_s},
          {"glitch_speed_kmh", p.glitch_speed_kmh},
          {"max_unmatchable_fraction", p.max_unmatchable_fraction}};
}

}  // namespace pipeline_detail

struct IngestReport {
  std::size_t nodes_raw = 0;
  std::size_t edges_raw = 0;
  std::size_t nodes_bikeable = 0;
  std::size_t edges_bikeable = 0;
  std::size_t trajectories = 0;
  std::size_t points = 0;
  double median_sampling_interval_s = 0.0;
};

/// Reads the network source (and optional raw trajectory CSV), applies the
/// bikeable filter, and writes the normalized artifacts.
inline IngestReport ingest_stage(const RunConfig& config) {
  pipeline_detail::ensure_out_dir(config);

  std::string format = config.network_format;
  if (format == "auto") {
    const auto ext = config.network_path.extension();
    format = ext == ".json" ? "json" : "osm";
  }
  std::ifstream in(config.network_path, std::ios::binary);
  if (!in) throw Error("cannot open network source " + config.network_path.string());
  StreetNetwork raw = format == "json" ? load_edgelist_json(in) : parse_osm_xml(in);

  IngestReport report;
  report.nodes_raw = raw.node_count();
  report.edges_raw = raw.edge_count();

  StreetNetwork net =
      config.filter_bikeable_edges ? filter_bikeable(raw).network : std::move(raw);
  report.nodes_bikeable = net.node_count();
  report.edges_bikeable = net.edge_count();

  std::ostringstream network_out;
  save_edgelist_json(network_out, net);
  io::atomic_write(pipeline_detail::artifact(config, "network.json"), network_out.str());

  if (!config.trajectories_path.empty()) {
    std::ifstream traj_in(config.trajectories_path, std::ios::binary);
    if (!traj_in) throw Error("cannot open trajectories " + config.trajectories_path.string());
    const auto trajectories = load_trajectories_csv(traj_in);
    report.trajectories = trajectories.size();
    std::vector<double> intervals;
    for (const Trajectory& t : trajectories) {
      report.points += t.size();
      if (t.size() > 1) intervals.push_back(nominal_sampling_interval_s(t));
    }
    if (!intervals.empty()) report.median_sampling_interval_s = median(intervals);
    std::ostringstream traj_out;
    write_trajectories_csv(traj_out, trajectories);
    io::atomic_write(pipeline_detail::artifact(config, "trajectories.csv"), traj_out.str());
  }

  nlohmann::json j{{"format_version", 1},
                   {"nodes_raw", report.nodes_raw},
                   {"edges_raw", report.edges_raw},
                   {"nodes_bikeable", report.nodes_bikeable},
                   {"edges_bikeable", report.edges_bikeable},
                   {"trajectories", report.trajectories},
                   {"points", report.points},
                   {"median_sampling_interval_s", report.median_sampling_interval_s},
                   {"bikeable_filter_applied", config.filter_bikeable_edges}};
  io::atomic_write(pipeline_detail::artifact(config, "ingest_report.json"), j.dump(2) + "\n");
  return report;
}

/// Scores every edge; emits lts.csv (edge_id,from,to,lts,rule_id) and the
/// level histogram.
inline NetworkLts lts_stage(const RunConfig& config) {
  const StreetNetwork net = pipeline_detail::read_network_artifact(config);
  const NetworkLts lts = classify_network(net);

  std::ostringstream csv_out;
  csv_out << "edge_id,from,to,lts,rule_id\n";
  for (const LtsRuleTrace& t : lts.traces) {
    const Edge& e = net.edge(t.edge);
    csv_out << t.edge.value << ',' << e.from.value << ',' << e.to.value << ','
            << t.score.value() << ',' << t.rule_id << '\n';
  }
  io::atomic_write(pipeline_detail::artifact(config, "lts.csv"), csv_out.str());

  nlohmann::json hist;
  hist["format_version"] = 1;
  for (int level = 1; level <= 4; ++level)
    hist["lts_" + std::to_string(level)] = lts.histogram[static_cast<std::size_t>(level)];
  hist["edges"] = net.edge_count();
  io::atomic_write(pipeline_detail::artifact(config, "lts_histogram.json"), hist.dump(2) + "\n");
  return lts;
}

/// Map-matches every trajectory (parallel, deterministic output order).
/// With reaggregate set, each user's fixes are pooled, re-segmented at time
/// gaps and de-glitched first; the rewritten trajectory artifact is what the
/// later stages see.
inline void match_stage(const RunConfig& config) {
  const StreetNetwork net = pipeline_detail::read_network_artifact(config);
  auto trajectories = pipeline_detail::read_trajectories_artifact(config);
  if (config.reaggregate) {
    std::vector<std::string> user_order;
    std::unordered_map<std::string, std::vector<SpatioTemporalPoint>> by_user;
    for (const Trajectory& t : trajectories) {
      auto [it, inserted] = by_user.try_emplace(t.user_id());
      if (inserted) user_order.push_back(t.user_id());
      it->second.insert(it->second.end(), t.points().begin(), t.points().end());
    }
    std::vector<Trajectory> resegmented;
    for (const std::string& user : user_order) {
      auto& points = by_user[user];
      std::stable_sort(points.begin(), points.end(),
                       [](const auto& a, const auto& b) { return a.t() < b.t(); });
      for (Trajectory& t : aggregate(user, points, config.match))
        resegmented.push_back(std::move(t));
    }
    trajectories = std::move(resegmented);
    std::ostringstream buf;
    write_trajectories_csv(buf, trajectories);
    io::atomic_write(pipeline_detail::artifact(config, "trajectories.csv"), buf.str());
  }
  const BallTree tree = pipeline_detail::build_node_index(net);
  const Matcher matcher(net, tree, config.match);

  std::vector<MatchResult> results(trajectories.size());
  pipeline_detail::parallel_for(trajectories.size(), config.threads,
                                [&](std::size_t i) { results[i] = matcher.match(trajectories[i]); });

  nlohmann::json doc;
  doc["format_version"] = 1;
  doc["params"] = pipeline_detail::match_params_json(config.match);
  doc["results"] = nlohmann::json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    const MatchResult& r = results[i];
    nlohmann::json item{{"traj_id", trajectories[i].traj_id()},
                        {"status", std::string(to_string(r.status))}};
    if (r.status == MatchStatus::ok) {
      const MatchQuality q = matcher.quality(*r.path, trajectories[i]);
      auto edges = nlohmann::json::array();
      for (EdgeId e : r.path->edges) edges.push_back(e.value);
      item["edges"] = std::move(edges);
      item["confidence"] = r.path->confidence;
      item["matched_length_m"] = r.path->matched_length_m;
      item["quality"] = {{"mean_perp_m", q.mean_perp_m},
                         {"max_perp_m", q.max_perp_m},
                         {"length_ratio", q.length_ratio}};
    } else {
      item["reason"] = r.reason;
    }
    doc["results"].push_back(std::move(item));
  }
  io::atomic_write(pipeline_detail::artifact(config, "matches.json"), doc.dump(2) + "\n");
}

/// Routes every trajectory's snapped OD pair under one weight scheme.
inline void route_stage(const RunConfig& config, const WeightScheme& scheme) {
  const StreetNetwork net = pipeline_detail::read_network_artifact(config);
  const auto trajectories = pipeline_detail::read_trajectories_artifact(config);
  const BallTree tree = pipeline_detail::build_node_index(net);

  std::vector<TrajectoryRoute> results(trajectories.size());
  pipeline_detail::parallel_for(trajectories.size(), config.threads, [&](std::size_t i) {
    results[i] = optimal_for_trajectory(net, scheme, tree, trajectories[i], config.max_snap_m);
  });

  const bool is_length = scheme.kind == WeightScheme::Kind::length;
  nlohmann::json doc;
  doc["format_version"] = 1;
  doc["scheme"] = is_length ? "length" : "time";
  if (!is_length) doc["cruise_kmh"] = scheme.cruise_kmh;
  doc["max_snap_m"] = config.max_snap_m;
  doc["results"] = nlohmann::json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    const TrajectoryRoute& r = results[i];
    nlohmann::json item{{"traj_id", trajectories[i].traj_id()},
                        {"status", std::string(to_string(r.status))}};
    item["snap_origin_m"] = r.origin_snap.distance_m;
    item["snap_origin_node"] = r.origin_snap.node.value;
    if (r.status != RouteStatus::snap_origin_exceeded) {
      item["snap_dest_m"] = r.dest_snap.distance_m;
      item["snap_dest_node"] = r.dest_snap.node.value;
    }
    if (r.status == RouteStatus::ok) {
      auto nodes = nlohmann::json::array();
      for (NodeId n : r.path.nodes) nodes.push_back(n.value);
      auto edges = nlohmann::json::array();
      for (EdgeId e : r.path.edges) edges.push_back(e.value);
      item["nodes"] = std::move(nodes);
      item["edges"] = std::move(edges);
      item["length_m"] = r.path.total_length_m;
      item["weight"] = r.path.total_weight;
    }
    doc["results"].push_back(std::move(item));
  }
  io::atomic_write(
      pipeline_detail::artifact(config, is_length ? "routes_length.json" : "routes_time.json"),
      doc.dump(2) + "\n");
}

/// Generates the synthetic city + agent population artifacts.
inline void synth_stage(const RunConfig& config, const GridCitySpec& city, const AgentSpec& agents) {
  pipeline_detail::ensure_out_dir(config);
  const StreetNetwork net = gen_city(city);
  const NetworkLts lts = classify_network(net);
  const SynthResult synth = gen_trajectories(net, lts, agents, config.seed);

  std::ostringstream network_out;
  save_edgelist_json(network_out, net);
  io::atomic_write(pipeline_detail::artifact(config, "network.json"), network_out.str());

  std::ostringstream traj_out;
  write_trajectories_csv(traj_out, synth.trajectories);
  io::atomic_write(pipeline_detail::artifact(config, "trajectories.csv"), traj_out.str());

  nlohmann::json truth;
  for (std::size_t i = 0; i < synth.trajectories.size(); ++i) {
    auto edges = nlohmann::json::array();
    for (EdgeId e : synth.ground_truth[i]) edges.push_back(e.value);
    truth[synth.trajectories[i].traj_id()] = std::move(edges);
  }
  nlohmann::json doc{{"format_version", 1},
                     {"ground_truth", std::move(truth)},
                     {"skipped_disconnected", synth.skipped_disconnected},
                     {"seed", config.seed}};
  io::atomic_write(pipeline_detail::artifact(config, "ground_truth.json"), doc.dump(2) + "\n");
}

namespace pipeline_detail {

struct JoinedInputs {
  StreetNetwork net;
  NetworkLts lts;
  std::vector<Trajectory> trajectories;
  std::unordered_map<std::string, nlohmann::json> matches;
  std::unordered_map<std::string, nlohmann::json> routes_length;
  std::unordered_map<std::string, nlohmann::json> routes_time;
};

inline std::unordered_map<std::string, nlohmann::json> index_results(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("missing artifact " + path.string());
  nlohmann::json doc = nlohmann::json::parse(in);
  std::unordered_map<std::string, nlohmann::json> by_id;
  for (auto& item : doc.at("results")) by_id.emplace(item.at("traj_id").get<std::string>(), item);
  return by_id;
}

inline NetworkLts read_lts_artifact(const RunConfig& config, const StreetNetwork& net) {
  const auto path = artifact(config, "lts.csv");
  std::ifstream in(path);
  if (!in) throw Error("missing artifact " + path.string() + "; run lts first");
  csv::Reader reader(in);
  auto header = reader.next();
  if (!header || header->empty() || (*header)[0] != "edge_id")
    throw CsvError("bad lts.csv header", 1);
  NetworkLts lts;
  lts.by_edge.assign(net.edge_count(), LtsScore(1));
  std::vector<bool> seen(net.edge_count(), false);
  while (auto row = reader.next()) {
    if (row->size() != 5) throw CsvError("expected 5 fields", reader.line());
    try {
      const std::size_t edge = std::stoull((*row)[0]);
      const int level = std::stoi((*row)[3]);
      if (edge >= net.edge_count()) throw CsvError("edge_id out of range", reader.line());
      lts.by_edge[edge] = LtsScore(level);
      seen[edge] = true;
      ++lts.histogram[static_cast<std::size_t>(level)];
    } catch (const CsvError&) {
      throw;
    } catch (const std::exception& e) {
      throw CsvError(std::string("bad lts.csv row: ") + e.what(), reader.line());
    }
  }
  for (std::size_t i = 0; i < seen.size(); ++i)
    if (!seen[i]) throw Error("lts.csv does not cover edge " + std::to_string(i));
  return lts;
}

inline RoutePath route_from_json(const nlohmann::json& item) {
  RoutePath path;
  for (const auto& n : item.at("nodes")) path.nodes.push_back(NodeId(n.get<std::uint32_t>()));
  for (const auto& e : item.at("edges")) path.edges.push_back(EdgeId(e.get<std::uint32_t>()));
  path.total_length_m = item.at("length_m").get<double>();
  path.total_weight = item.at("weight").get<double>();
  return path;
}

}  // namespace pipeline_detail

struct AnalyzeOutput {
  std::vector<MetricsRow> rows;
  ScatterData scatter;
  std::vector<BinSummary> bins;  // empty when the population is too small
  std::string bins_error;
  PopulationSummary summary;
};

/// Joins matches + routes + raw trajectories into the deviation metrics and
/// writes metrics.csv, scatter.csv, bins.csv and summary.json.
inline AnalyzeOutput analyze_stage(const RunConfig& config) {
  using pipeline_detail::artifact;
  const StreetNetwork net = pipeline_detail::read_network_artifact(config);
  const NetworkLts lts = pipeline_detail::read_lts_artifact(config, net);
  const auto trajectories = pipeline_detail::read_trajectories_artifact(config);
  auto matches = pipeline_detail::index_results(artifact(config, "matches.json"));
  auto routes_length = pipeline_detail::index_results(artifact(config, "routes_length.json"));
  auto routes_time = pipeline_detail::index_results(artifact(config, "routes_time.json"));

  AnalyzeOutput out;
  for (const Trajectory& traj : trajectories) {
    const auto match_it = matches.find(traj.traj_id());
    const auto len_it = routes_length.find(traj.traj_id());
    const auto time_it = routes_time.find(traj.traj_id());
    if (match_it == matches.end() || len_it == routes_length.end() || time_it == routes_time.end())
      throw Error("artifacts do not cover traj_id " + traj.traj_id() +
                  "; re-run match and route stages");

    MetricsRow row;
    row.metrics.traj_id = traj.traj_id();
    row.metrics.user_id = traj.user_id();
    row.metrics.od_distance_m = od_distance(traj);

    const std::string route_status = len_it->second.at("status").get<std::string>();
    const std::string time_status = time_it->second.at("status").get<std::string>();
    const std::string match_status = match_it->second.at("status").get<std::string>();
    if (route_status == "snap_origin_exceeded" || route_status == "snap_dest_exceeded") {
      row.excluded = Exclusion::snap_exceeded;
    } else if (route_status == "disconnected" || time_status != "ok") {
      row.excluded = Exclusion::disconnected;
    } else if (match_status != "ok") {
      row.excluded = Exclusion::match_failed;
    } else {
      MatchedPath matched;
      matched.traj_id = traj.traj_id();
      for (const auto& e : match_it->second.at("edges"))
        matched.edges.push_back(EdgeId(e.get<std::uint32_t>()));
      matched.matched_length_m = match_it->second.at("matched_length_m").get<double>();
      const RoutePath optimal_length = pipeline_detail::route_from_json(len_it->second);
      const RoutePath optimal_time = pipeline_detail::route_from_json(time_it->second);
      row = trajectory_metrics(matched, optimal_length, optimal_time, lts, traj);
      if (row.excluded == Exclusion::none) {
        if (config.lts_length_weighted) {
          row.metrics.observed_lts = lts_score_length_weighted(matched.edges, lts, net);
          row.metrics.optimal_lts = lts_score_length_weighted(optimal_length.edges, lts, net);
        }
        if (config.time_scheme_scatter)
          row.metrics.optimal_lts =
              config.lts_length_weighted
                  ? lts_score_length_weighted(optimal_time.edges, lts, net)
                  : lts_score(optimal_time.edges, lts);
        if (config.bin_by_network_length)
          row.metrics.od_distance_m = optimal_length.total_length_m;
      }
    }
    out.rows.push_back(std::move(row));
  }

  out.scatter = scatter_data(out.rows);
  try {
    out.bins = decile_bins(out.rows, config.bin_cutoff_m, config.bins);
  } catch (const std::invalid_argument& e) {
    out.bins_error = e.what();
  }
  out.summary = population_summary(out.rows);

  // metrics.csv
  std::ostringstream metrics_csv;
  metrics_csv << "traj_id,user_id,od_distance_m,observed_length_m,optimal_length_m,"
                 "optimal_time_s,observed_lts,optimal_lts,detour_ratio,excluded,detour_flagged\n";
  for (const MetricsRow& row : out.rows) {
    const TrajectoryMetrics& m = row.metrics;
    std::vector<std::string> fields = {
        m.traj_id,
        m.user_id,
        io::fmt_double(m.od_distance_m, 3),
        io::fmt_double(m.observed_length_m, 3),
        io::fmt_double(m.optimal_length_m, 3),
        io::fmt_double(m.optimal_time_s, 3),
        io::fmt_double(m.observed_lts, 6),
        io::fmt_double(m.optimal_lts, 6),
        io::fmt_double(m.detour_ratio, 6),
        std::string(to_string(row.excluded)),
        row.detour_flagged ? "true" : "false",
    };
    csv::write_row(metrics_csv, fields);
  }
  io::atomic_write(artifact(config, "metrics.csv"), metrics_csv.str());

  // scatter.csv
  std::ostringstream scatter_csv;
  scatter_csv << "traj_id,optimal_lts,observed_lts\n";
  for (const ScatterPoint& p : out.scatter.points) {
    std::vector<std::string> fields = {p.traj_id, io::fmt_double(p.optimal_lts, 6),
                                       io::fmt_double(p.observed_lts, 6)};
    csv::write_row(scatter_csv, fields);
  }
  io::atomic_write(artifact(config, "scatter.csv"), scatter_csv.str());

  // bins.csv
  std::ostringstream bins_csv;
  bins_csv << "bin_index,od_lo_m,od_hi_m,n,observed_median,observed_iqr,observed_variance,"
              "optimal_median,optimal_iqr,optimal_variance\n";
  for (const BinSummary& bin : out.bins) {
    std::vector<std::string> fields = {
        std::to_string(bin.bin_index),
        io::fmt_double(bin.od_lo_m, 3),
        io::fmt_double(bin.od_hi_m, 3),
        std::to_string(bin.n),
        io::fmt_double(bin.observed.median, 6),
        io::fmt_double(bin.observed.iqr, 6),
        io::fmt_double(bin.observed.variance, 6),
        io::fmt_double(bin.optimal.median, 6),
        io::fmt_double(bin.optimal.iqr, 6),
        io::fmt_double(bin.optimal.variance, 6),
    };
    csv::write_row(bins_csv, fields);
  }
  io::atomic_write(artifact(config, "bins.csv"), bins_csv.str());

  // summary.json
  nlohmann::json j;
  j["format_version"] = 1;
  j["population"] = {{"valid", out.summary.valid},
                     {"excluded_snap", out.summary.excluded_snap},
                     {"excluded_disconnected", out.summary.excluded_disconnected},
                     {"excluded_match_failed", out.summary.excluded_match_failed},
                     {"excluded_degenerate", out.summary.excluded_degenerate},
                     {"detour_flagged", out.summary.detour_flagged}};
  j["medians"] = {{"observed_length_m", out.summary.median_observed_length_m},
                  {"optimal_length_m", out.summary.median_optimal_length_m},
                  {"detour_ratio", out.summary.median_detour_ratio},
                  {"observed_lts", out.summary.median_observed_lts},
                  {"optimal_lts", out.summary.median_optimal_lts}};
  if (out.scatter.below_diagonal_fraction)
    j["below_diagonal_fraction"] = *out.scatter.below_diagonal_fraction;
  if (!out.bins_error.empty()) j["bins_error"] = out.bins_error;
  j["config"] = {{"bin_cutoff_m", config.bin_cutoff_m},
                 {"bins", config.bins},
                 {"lts_length_weighted", config.lts_length_weighted},
                 {"bin_by_network_length", config.bin_by_network_length},
                 {"time_scheme_scatter", config.time_scheme_scatter},
                 {"cruise_kmh", config.cruise_kmh},
                 {"max_snap_m", config.max_snap_m},
                 {"seed", config.seed}};
  io::atomic_write(artifact(config, "summary.json"), j.dump(2) + "\n");
  return out;
}

/// Renders the analyze artifacts as human-readable tables.
inline std::string report_stage(const RunConfig& config) {
  using pipeline_detail::artifact;
  std::ifstream in(artifact(config, "summary.json"));
  if (!in) throw Error("missing artifact summary.json; run analyze first");
  const nlohmann::json summary = nlohmann::json::parse(in);

  std::ostringstream out;
  out << "population\n";
  for (const auto& [key, value] : summary.at("population").items())
    out << "  " << key << ": " << value.dump() << '\n';
  out << "\nmedians\n";
  for (const auto& [key, value] : summary.at("medians").items())
    out << "  " << key << ": " << io::fmt_double(value.get<double>(), 3) << '\n';
  if (summary.contains("below_diagonal_fraction"))
    out << "\nbelow-diagonal fraction: "
        << io::fmt_double(summary.at("below_diagonal_fraction").get<double>(), 4) << '\n';

  std::ifstream bins_in(artifact(config, "bins.csv"));
  if (bins_in) {
    csv::Reader reader(bins_in);
    auto header = reader.next();
    out << "\ndecile bins (od distance, observed vs optimal median LTS)\n";
    out << "  bin        od range [m)      n    obs median  opt median\n";
    while (auto row = reader.next()) {
      if (row->size() < 10) continue;
      char line[128];
      std::snprintf(line, sizeof line, "  %3s  %9.1f-%9.1f  %5s  %10s  %10s\n",
                    (*row)[0].c_str(), std::stod((*row)[1]), std::stod((*row)[2]),
                    (*row)[3].c_str(), (*row)[4].c_str(), (*row)[7].c_str());
      out << line;
    }
  }
  const std::string text = out.str();
  io::atomic_write(artifact(config, "report.txt"), text);
  return text;
}

struct PipelineOutcome {
  IngestReport ingest;
  AnalyzeOutput analysis;
};

/// End-to-end run over existing inputs: ingest, lts, match, route under both
/// schemes, analyze, report.
inline PipelineOutcome run_pipeline(const RunConfig& config) {
  PipelineOutcome outcome;
  outcome.ingest = ingest_stage(config);
  lts_stage(config);
  match_stage(config);
  route_stage(config, WeightScheme::length());
  route_stage(config, WeightScheme::time(config.cruise_kmh));
  outcome.analysis = analyze_stage(config);
  report_stage(config);
  return outcome;
}

/// End-to-end run over a generated city: synth, lts, match, routes, analyze,
/// report.
inline PipelineOutcome run_synth_pipeline(const RunConfig& config, const GridCitySpec& city,
                                          const AgentSpec& agents) {
  PipelineOutcome outcome;
  synth_stage(config, city, agents);
  lts_stage(config);
  match_stage(config);
  route_stage(config, WeightScheme::length());
  route_stage(config, WeightScheme::time(config.cruise_kmh));
  outcome.analysis = analyze_stage(config);
  report_stage(config);
  return outcome;
}

}  // namespace velo
