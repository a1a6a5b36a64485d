#pragma once

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "velo/errors.hpp"
#include "velo/pipeline.hpp"

namespace velo {

// Exit codes, also listed in --help:
//   0 success, 1 internal error, 2 usage error, 3 missing input file,
//   4 malformed input, 5 constraint violation.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitUsage = 2,
  kExitMissingInput = 3,
  kExitMalformedInput = 4,
  kExitConstraint = 5,
};

namespace cli_detail {

inline void print_error_json(int code, const std::string& kind, const std::string& message) {
  nlohmann::json j{{"error", {{"code", code}, {"kind", kind}, {"message", message}}}};
  std::cerr << j.dump() << '\n';
}

/// Reads `key=value` lines (# comments, blank lines ignored) and returns
/// them as `--key=value` tokens. Keys are long option names without dashes;
/// unknown keys are rejected by the regular option parser.
inline std::vector<std::string> config_tokens(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file " + path);
  std::vector<std::string> tokens;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto begin = line.find_first_not_of(" \t");
    if (begin == std::string::npos || line[begin] == '#') continue;
    const auto end = line.find_last_not_of(" \t\r");
    const std::string trimmed = line.substr(begin, end - begin + 1);
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos || eq == 0)
      throw CsvError("config lines must be key=value", lineno);
    tokens.push_back("--" + trimmed.substr(0, eq) + "=" + trimmed.substr(eq + 1));
  }
  return tokens;
}

struct SynthFlags {
  std::size_t rows = 20;
  std::size_t cols = 20;
  double block_m = 100.0;
  std::size_t arterial_every = 4;
  std::size_t agents = 100;
  double lambda = 0.0;
  double sigma_m = 0.0;
  double spacing_m = 20.0;

  GridCitySpec city(std::uint64_t seed) const {
    GridCitySpec c;
    c.rows = rows;
    c.cols = cols;
    c.block_m = block_m;
    c.arterial_every = arterial_every;
    c.seed = seed;
    return c;
  }
  AgentSpec agent_spec() const {
    AgentSpec a;
    a.n_agents = agents;
    a.safety_weight = lambda;
    a.gps_noise_sigma_m = sigma_m;
    a.sample_spacing_m = spacing_m;
    return a;
  }
};

inline void add_common(CLI::App* cmd, RunConfig& config) {
  cmd->add_option("--out", config.out_dir, "output directory for stage artifacts")->required();
  cmd->add_option("--seed", config.seed, "seed for all randomness (printed on every run)");
  cmd->add_option("--threads", config.threads, "worker threads; 0 = hardware concurrency");
}

inline void add_match_params(CLI::App* cmd, MatchParams& p) {
  cmd->add_option("--radius-m", p.candidate_radius_m, "candidate search radius")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--max-candidates", p.max_candidates, "candidates kept per point")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--sigma-m", p.emission_sigma_m, "emission Gaussian sigma")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--beta-m", p.transition_beta_m, "transition exponential scale")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--gap-s", p.gap_split_s, "aggregation gap split threshold")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--glitch-kmh", p.glitch_speed_kmh, "aggregation glitch speed cutoff")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--max-unmatchable", p.max_unmatchable_fraction,
                  "fail a trajectory above this unmatchable fraction")
      ->check(CLI::Range(0.0, 1.0));
}

inline void add_synth_flags(CLI::App* cmd, SynthFlags& f) {
  cmd->add_option("--rows", f.rows, "grid rows")->check(CLI::PositiveNumber);
  cmd->add_option("--cols", f.cols, "grid cols")->check(CLI::PositiveNumber);
  cmd->add_option("--block-m", f.block_m, "block edge length in meters")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--arterial-every", f.arterial_every,
                  "every k-th street is an arterial; 0 = none");
  cmd->add_option("--agents", f.agents, "number of agents (one trip each)");
  cmd->add_option("--lambda", f.lambda, "safety weight: utility = length*(1+lambda*(LTS-1))")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--noise-sigma-m", f.sigma_m, "GPS jitter sigma")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--spacing-m", f.spacing_m, "fix spacing along the path")
      ->check(CLI::PositiveNumber);
}

}  // namespace cli_detail

/// args excludes the program name; the subcommand comes first.
inline int run_cli(std::vector<std::string> args) {
  CLI::App app{
      "velomap - street-network cyclability analytics:\n"
      "ingest street networks and GPS rides, score traffic stress, and measure\n"
      "how far observed rides deviate from optimal routes."};
  app.require_subcommand(1);
  // Config-file tokens precede command-line flags; the later value wins.
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.footer(
      "Config file: key=value lines of long option names (e.g. 'radius-m=40'),\n"
      "passed with --config or the VELOMAP_CONFIG environment variable; command\n"
      "line flags override it. Unknown keys are rejected.\n"
      "Exit codes: 0 ok, 1 internal error, 2 usage, 3 missing input,\n"
      "4 malformed input, 5 constraint violation. Failures also print one\n"
      "machine-readable JSON error line on stderr.");

  RunConfig config;
  cli_detail::SynthFlags synth_flags;
  std::string scheme = "length";
  bool keep_unbikeable = false;
  bool reaggregate = false;
  std::string traj_override;

  auto* ingest = app.add_subcommand("ingest", "parse + filter a network, normalize trajectories");
  cli_detail::add_common(ingest, config);
  ingest->add_option("--network", config.network_path, "OSM XML or edge-list JSON source")
      ->required();
  ingest->add_option("--format", config.network_format, "osm | json | auto")
      ->check(CLI::IsMember({"osm", "json", "auto"}));
  ingest->add_option("--trajectories", config.trajectories_path, "raw trajectory CSV");
  ingest->add_flag("--keep-unbikeable", keep_unbikeable, "skip the bikeable filter");

  auto* lts_cmd = app.add_subcommand("lts", "score every edge's Level of Traffic Stress");
  cli_detail::add_common(lts_cmd, config);

  auto* route = app.add_subcommand("route", "shortest path per trajectory OD pair");
  cli_detail::add_common(route, config);
  route->add_option("--scheme", scheme, "length | time")
      ->check(CLI::IsMember({"length", "time"}));
  route->add_option("--speed-kmh", config.cruise_kmh, "cruising speed for the time scheme")
      ->check(CLI::PositiveNumber);
  route->add_option("--max-snap-m", config.max_snap_m, "snap rejection threshold")
      ->check(CLI::PositiveNumber);

  auto* match = app.add_subcommand("match", "map-match trajectories onto the network");
  cli_detail::add_common(match, config);
  cli_detail::add_match_params(match, config.match);
  match->add_option("--trajectories", traj_override,
                    "trajectory CSV to match (defaults to the ingest/synth artifact)");
  match->add_flag("--aggregate", reaggregate,
                  "re-segment each user's fix stream before matching");

  auto* analyze = app.add_subcommand("analyze", "deviation metrics, scatter and decile bins");
  cli_detail::add_common(analyze, config);
  analyze->add_option("--bins", config.bins, "bin count for the distance deciles")
      ->check(CLI::PositiveNumber);
  analyze->add_option("--bin-cutoff-m", config.bin_cutoff_m, "ignore trips with OD above this")
      ->check(CLI::PositiveNumber);
  analyze->add_flag("--lts-weighted", config.lts_length_weighted,
                    "length-weighted trajectory stress score");
  analyze->add_flag("--bin-by-network-length", config.bin_by_network_length,
                    "bin by optimal network length instead of the OD chord");
  analyze->add_flag("--time-scatter", config.time_scheme_scatter,
                    "scatter x-axis from the time-scheme optimal path");

  auto* report = app.add_subcommand("report", "render analyze artifacts as text tables");
  cli_detail::add_common(report, config);

  auto* synth = app.add_subcommand("synth", "generate a grid city + agent trajectories");
  cli_detail::add_common(synth, config);
  cli_detail::add_synth_flags(synth, synth_flags);

  auto* pipeline = app.add_subcommand("pipeline", "run every stage end to end");
  cli_detail::add_common(pipeline, config);
  pipeline->add_option("--network", config.network_path, "network source (omit with --synth)");
  pipeline->add_option("--format", config.network_format, "osm | json | auto")
      ->check(CLI::IsMember({"osm", "json", "auto"}));
  pipeline->add_option("--trajectories", config.trajectories_path, "raw trajectory CSV");
  bool use_synth = false;
  pipeline->add_flag("--synth", use_synth, "generate the city + trajectories instead");
  cli_detail::add_synth_flags(pipeline, synth_flags);
  cli_detail::add_match_params(pipeline, config.match);
  pipeline->add_option("--speed-kmh", config.cruise_kmh, "cruising speed for the time scheme")
      ->check(CLI::PositiveNumber);
  pipeline->add_option("--max-snap-m", config.max_snap_m, "snap rejection threshold")
      ->check(CLI::PositiveNumber);
  pipeline->add_option("--bins", config.bins, "bin count for the distance deciles")
      ->check(CLI::PositiveNumber);
  pipeline->add_option("--bin-cutoff-m", config.bin_cutoff_m, "ignore trips with OD above this")
      ->check(CLI::PositiveNumber);
  pipeline->add_flag("--lts-weighted", config.lts_length_weighted,
                     "length-weighted trajectory stress score");
  pipeline->add_flag("--bin-by-network-length", config.bin_by_network_length,
                     "bin by optimal network length instead of the OD chord");
  pipeline->add_flag("--time-scatter", config.time_scheme_scatter,
                     "scatter x-axis from the time-scheme optimal path");
  pipeline->add_flag("--keep-unbikeable", keep_unbikeable, "skip the bikeable filter");

  std::string config_path;
  for (std::size_t i = 0; i + 1 < args.size(); ++i)
    if (args[i] == "--config") config_path = args[i + 1];
  if (config_path.empty())
    if (const char* env = std::getenv("VELOMAP_CONFIG")) config_path = env;

  // Config tokens go right after the subcommand token, ahead of explicit
  // flags, so the command line wins (last value takes precedence).
  std::vector<std::string> full;
  bool injected = config_path.empty();
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      ++i;  // path already captured
      continue;
    }
    full.push_back(args[i]);
    if (!injected && !args[i].empty() && args[i][0] != '-') {
      injected = true;
      try {
        for (auto& token : cli_detail::config_tokens(config_path)) full.push_back(token);
      } catch (const CsvError& e) {
        cli_detail::print_error_json(kExitMalformedInput, "config", e.what());
        return kExitMalformedInput;
      } catch (const Error& e) {
        cli_detail::print_error_json(kExitMissingInput, "config", e.what());
        return kExitMissingInput;
      }
    }
  }

  try {
    // CLI11 consumes a reversed token vector (no program name).
    std::vector<std::string> reversed(full.rbegin(), full.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // help for a subcommand
      std::cout << app.help();
      return kExitOk;
    }
    cli_detail::print_error_json(kExitUsage, "usage", e.what());
    return kExitUsage;
  }

  config.filter_bikeable_edges = !keep_unbikeable;
  config.reaggregate = reaggregate;
  if (!traj_override.empty()) config.trajectories_path = traj_override;

  try {
    std::cout << "seed: " << config.seed << '\n';
    if (ingest->parsed()) {
      const IngestReport r = ingest_stage(config);
      std::cout << "ingest: " << r.nodes_bikeable << " nodes, " << r.edges_bikeable
                << " directed edges";
      if (config.filter_bikeable_edges)
        std::cout << " (from " << r.nodes_raw << "/" << r.edges_raw << " raw)";
      if (r.trajectories) std::cout << "; " << r.trajectories << " trajectories";
      std::cout << " -> " << (config.out_dir / "network.json").string() << '\n';
    } else if (lts_cmd->parsed()) {
      const NetworkLts lts = lts_stage(config);
      std::cout << "lts: ";
      for (int level = 1; level <= 4; ++level)
        std::cout << "L" << level << "=" << lts.histogram[static_cast<std::size_t>(level)]
                  << (level < 4 ? " " : "");
      std::cout << " -> " << (config.out_dir / "lts.csv").string() << '\n';
    } else if (route->parsed()) {
      const WeightScheme ws =
          scheme == "length" ? WeightScheme::length() : WeightScheme::time(config.cruise_kmh);
      route_stage(config, ws);
      std::cout << "route: scheme " << scheme << " -> "
                << (config.out_dir / ("routes_" + scheme + ".json")).string() << '\n';
    } else if (match->parsed()) {
      if (!config.trajectories_path.empty()) {
        std::ifstream in(config.trajectories_path, std::ios::binary);
        if (!in) throw Error("cannot open trajectories " + config.trajectories_path.string());
        const auto trajectories = load_trajectories_csv(in);
        std::ostringstream buf;
        write_trajectories_csv(buf, trajectories);
        pipeline_detail::ensure_out_dir(config);
        io::atomic_write(config.out_dir / "trajectories.csv", buf.str());
      }
      match_stage(config);
      std::cout << "match -> " << (config.out_dir / "matches.json").string() << '\n';
    } else if (analyze->parsed()) {
      const AnalyzeOutput out = analyze_stage(config);
      std::cout << "analyze: " << out.summary.valid << " valid trajectories";
      if (out.scatter.below_diagonal_fraction)
        std::cout << ", below-diagonal " << io::fmt_double(*out.scatter.below_diagonal_fraction, 4);
      std::cout << " -> " << (config.out_dir / "summary.json").string() << '\n';
    } else if (report->parsed()) {
      std::cout << report_stage(config);
    } else if (synth->parsed()) {
      synth_stage(config, synth_flags.city(config.seed), synth_flags.agent_spec());
      std::cout << "synth: " << synth_flags.rows << "x" << synth_flags.cols << " grid, "
                << synth_flags.agents << " agents -> "
                << (config.out_dir / "trajectories.csv").string() << '\n';
    } else if (pipeline->parsed()) {
      PipelineOutcome outcome;
      if (use_synth) {
        outcome = run_synth_pipeline(config, synth_flags.city(config.seed),
                                     synth_flags.agent_spec());
      } else {
        if (config.network_path.empty())
          throw CLI::ValidationError("pipeline needs --network or --synth");
        outcome = run_pipeline(config);
      }
      std::cout << "pipeline: " << outcome.analysis.summary.valid << " valid trajectories";
      if (outcome.analysis.scatter.below_diagonal_fraction)
        std::cout << ", below-diagonal "
                  << io::fmt_double(*outcome.analysis.scatter.below_diagonal_fraction, 4);
      std::cout << " -> " << (config.out_dir / "summary.json").string() << '\n';
    }
  } catch (const CLI::ParseError& e) {
    cli_detail::print_error_json(kExitUsage, "usage", e.what());
    return kExitUsage;
  } catch (const ParseError& e) {
    cli_detail::print_error_json(kExitMalformedInput, "parse_error", e.what());
    return kExitMalformedInput;
  } catch (const CsvError& e) {
    cli_detail::print_error_json(kExitMalformedInput, "csv_error", e.what());
    return kExitMalformedInput;
  } catch (const SchemaError& e) {
    cli_detail::print_error_json(kExitMalformedInput, "schema_error", e.what());
    return kExitMalformedInput;
  } catch (const NoPathError& e) {
    cli_detail::print_error_json(kExitConstraint, "no_path", e.what());
    return kExitConstraint;
  } catch (const std::invalid_argument& e) {
    cli_detail::print_error_json(kExitConstraint, "constraint", e.what());
    return kExitConstraint;
  } catch (const Error& e) {
    const std::string what = e.what();
    const bool missing = what.find("cannot open") != std::string::npos ||
                         what.find("missing artifact") != std::string::npos;
    cli_detail::print_error_json(missing ? kExitMissingInput : kExitInternal,
                                 missing ? "missing_input" : "error", what);
    return missing ? kExitMissingInput : kExitInternal;
  } catch (const std::exception& e) {
    cli_detail::print_error_json(kExitInternal, "internal", e.what());
    return kExitInternal;
  }
  return kExitOk;
}

inline int run_cli(int argc, const char* const* argv) {
  return run_cli(std::vector<std::string>(argv + 1, argv + argc));
}

}  // namespace velo
