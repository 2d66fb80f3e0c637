// Command line front end: run, baseline, benchmark, oracle, synth-profile.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "bess/io.hpp"

namespace fs = std::filesystem;
using namespace bess;

namespace {

enum Exit { kOk = 0, kConfig = 2, kSolver = 3, kIo = 4 };

struct Common {
  std::string config;
  std::string profile;
  std::string scheme;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  std::optional<int> recluster_period;
  std::optional<int> k_max;
  bool wall_time = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "config file (sectioned key = value)");
  cmd->add_option("--profile", c.profile, "demand CSV with header t,p_out")->default_str(BESS_REFERENCE_PROFILE);
  cmd->add_option("--scheme", c.scheme, "power split: equal, resistance, optimal (or 1, 2, 3)");
  cmd->add_option("--seed", c.seed, "population and clustering seed");
  cmd->add_option("--out-dir", c.out_dir, "directory for traces and reports")->capture_default_str();
  cmd->add_option("--recluster-period", c.recluster_period, "steps between re-clustering");
  cmd->add_option("--k-max", c.k_max, "largest cluster count for the gap statistic");
  cmd->add_flag("--wall-time", c.wall_time, "append solver_time and cluster_time to traces");
}

SimConfig load_config(const Common& c) {
  SimConfig cfg = c.config.empty() ? SimConfig{} : parse_config(c.config);
  if (!c.scheme.empty()) {
    try {
      cfg.scheme = parse_scheme(c.scheme);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("--scheme: ") + e.what());
    }
  }
  if (c.seed) cfg.seed = *c.seed;
  if (c.recluster_period) cfg.recluster_period = *c.recluster_period;
  if (c.k_max) cfg.k_max = *c.k_max;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

std::vector<double> load_demand(const Common& c, const SimConfig& cfg) {
  const std::string path = c.profile.empty() ? std::string(BESS_REFERENCE_PROFILE) : c.profile;
  return load_profile_csv(path, cfg.dt).power;
}

void write_effective_config(const SimConfig& cfg, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "schema_version = " << kSchemaVersion << "\n";
  std::string section;
  for (const auto& [key, value] : config_entries(cfg)) {
    const auto dot = key.find('.');
    if (key.substr(0, dot) != section) {
      section = key.substr(0, dot);
      out << "\n[" << section << "]\n";
    }
    out << key.substr(dot + 1) << " = " << value << "\n";
  }
}

fs::path prepare_out(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  return dir;
}

int finish_run(const SimTrace& trace, const SimTrace* baseline, const std::string& name, const fs::path& out,
               bool wall_time, std::vector<fs::path> written) {
  RunReport report = make_report(trace, name, baseline);
  const fs::path trace_path = out / (name + "_trace.csv");
  const fs::path report_path = out / (name + "_report.txt");
  write_trace_csv(trace, trace_path, wall_time);
  for (const auto& w : written) report.artifacts.push_back(w.string());
  report.artifacts.push_back(trace_path.string());
  report.artifacts.push_back(report_path.string());
  write_report(report, report_path);
  std::cout << report_text(report);
  const auto steps = trace.steps.size();
  if (steps > 0 && 10 * static_cast<std::size_t>(trace.summary.fallbacks) > steps) {
    std::cerr << "solver fell back on " << trace.summary.fallbacks << " of " << steps << " steps\n";
    return kSolver;
  }
  return kOk;
}

int cmd_run(const Common& c) {
  const SimConfig cfg = load_config(c);
  const auto demand = load_demand(c, cfg);
  const auto out = prepare_out(c.out_dir);
  write_effective_config(cfg, out / "config.ini");
  const auto base = baseline_uniform(cfg, demand);
  write_trace_csv(base, out / "baseline_trace.csv", c.wall_time);
  const auto trace = run(cfg, demand);
  return finish_run(trace, &base, to_string(cfg.scheme), out, c.wall_time,
                    {out / "config.ini", out / "baseline_trace.csv"});
}

int cmd_baseline(const Common& c, bool cell_level) {
  const SimConfig cfg = load_config(c);
  const auto demand = load_demand(c, cfg);
  const auto out = prepare_out(c.out_dir);
  write_effective_config(cfg, out / "config.ini");
  if (cell_level) return finish_run(baseline_cell_level(cfg, demand), nullptr, "cell_level", out, c.wall_time, {out / "config.ini"});
  return finish_run(baseline_uniform(cfg, demand), nullptr, "baseline", out, c.wall_time, {out / "config.ini"});
}

int cmd_bench(const Common& c, const std::vector<int>& cells, const std::vector<int>& caps,
              const std::vector<std::string>& schemes, int steps) {
  BenchmarkSpec spec;
  spec.base = load_config(c);
  spec.cell_counts = cells;
  spec.k_caps = caps;
  spec.steps = steps;
  spec.schemes.clear();
  for (const auto& s : schemes) {
    try {
      spec.schemes.push_back(parse_scheme(s));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("--schemes: ") + e.what());
    }
  }
  const auto demand = load_demand(c, spec.base);
  const auto rows = cmd_benchmark(spec, demand);
  const std::string table = benchmark_table(rows);
  const auto out = prepare_out(c.out_dir);
  std::ofstream f(out / "benchmark.csv");
  if (!f) throw IoError("cannot write " + (out / "benchmark.csv").string());
  f << table;
  std::cout << table;
  return kOk;
}

int cmd_oracle(int n, int instances, std::uint64_t seed) {
  if (n < 1 || n > 4) throw ConfigError("--cells must be in 1..4");
  double worst = 0.0;
  int mismatched = 0;
  std::printf("instance,demand_w,oracle,conic,rel_diff\n");
  for (int s = 0; s < instances; ++s) {
    const auto cfg = random_oracle_instance(n, seed + static_cast<std::uint64_t>(s));
    const auto oracle = brute_force_oracle(cfg);
    const auto sol = solve_cell_level_step(cfg);
    if (!oracle || !sol.optimal()) {
      std::printf("%d,%.6g,%s,%s,nan\n", s, cfg.demand, oracle ? "ok" : "infeasible", to_string(sol.status));
      ++mismatched;
      continue;
    }
    const double rel = std::abs(sol.objective - oracle->objective) / std::max(std::abs(oracle->objective), 1e-9);
    worst = std::max(worst, rel);
    if (rel > 0.02) ++mismatched;
    std::printf("%d,%.6g,%.10g,%.10g,%.3e\n", s, cfg.demand, oracle->objective, sol.objective, rel);
  }
  std::printf("# worst relative difference %.3e, %d of %d outside 2%%\n", worst, mismatched, instances);
  return mismatched == 0 ? kOk : kSolver;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clustered dispatch simulator for large battery packs"};
  app.require_subcommand(1);

  Common common;
  auto* run_cmd = app.add_subcommand("run", "closed-loop run plus the uniform baseline");
  add_common(run_cmd, common);

  bool cell_level = false;
  auto* base_cmd = app.add_subcommand("baseline", "uniform P/n split (or --cell-level dispatch)");
  add_common(base_cmd, common);
  base_cmd->add_flag("--cell-level", cell_level, "one cluster per cell instead of the uniform split");

  std::vector<int> bench_cells{50, 100, 400}, bench_caps{15};
  std::vector<std::string> bench_schemes{"equal"};
  int bench_steps = 20;
  auto* bench_cmd = app.add_subcommand("benchmark", "optimization time vs cell-level dispatch");
  add_common(bench_cmd, common);
  bench_cmd->add_option("--cells", bench_cells, "cell counts")->capture_default_str();
  bench_cmd->add_option("--k-caps", bench_caps, "fixed cluster counts")->capture_default_str();
  bench_cmd->add_option("--schemes", bench_schemes, "split schemes")->capture_default_str();
  bench_cmd->add_option("--steps", bench_steps, "timed steps per run")->capture_default_str()->check(CLI::PositiveNumber);

  int oracle_n = 2, oracle_count = 20;
  std::uint64_t oracle_seed = 1;
  auto* oracle_cmd = app.add_subcommand("oracle", "compare the conic solve with exhaustive search");
  oracle_cmd->add_option("--cells", oracle_n, "cells per instance (1..4)")->capture_default_str();
  oracle_cmd->add_option("--instances", oracle_count, "number of instances")->capture_default_str();
  oracle_cmd->add_option("--seed", oracle_seed, "first instance seed")->capture_default_str();

  double syn_duration = 2400, syn_charge = 6000, syn_discharge = 10000, syn_dt = 1;
  std::uint64_t syn_seed = 7;
  std::string syn_out = "profile.csv";
  auto* synth_cmd = app.add_subcommand("synth-profile", "drive-cycle shaped demand CSV");
  synth_cmd->add_option("--duration", syn_duration, "seconds")->capture_default_str();
  synth_cmd->add_option("--peak-charge", syn_charge, "W")->capture_default_str();
  synth_cmd->add_option("--peak-discharge", syn_discharge, "W")->capture_default_str();
  synth_cmd->add_option("--dt", syn_dt, "sample spacing [s]")->capture_default_str();
  synth_cmd->add_option("--seed", syn_seed, "generator seed")->capture_default_str();
  synth_cmd->add_option("--out", syn_out, "output CSV")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*run_cmd) return cmd_run(common);
    if (*base_cmd) return cmd_baseline(common, cell_level);
    if (*bench_cmd) return cmd_bench(common, bench_cells, bench_caps, bench_schemes, bench_steps);
    if (*oracle_cmd) return cmd_oracle(oracle_n, oracle_count, oracle_seed);
    if (*synth_cmd) {
      try {
        write_profile_csv(synth_udds_like(syn_duration, syn_charge, syn_discharge, syn_dt, syn_seed), syn_out);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
      return kOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  }
  return kOk;
}
