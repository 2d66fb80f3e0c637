#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bess/simulation.hpp"

namespace bess {

inline constexpr int kSchemaVersion = 1;

/// Bad configuration text or values. `line` is 0 when not tied to a line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line = 0);
  int line() const { return line_; }

 private:
  int line_;
};

/// File could not be read or written, or its content is malformed.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sectioned key-value text:
///
///   schema_version = 1
///   [simulation]
///   horizon = 10
///
/// Keys not given keep their defaults. Unknown keys, duplicates,
/// bad values and failed validation raise ConfigError.
SimConfig parse_config_text(const std::string& text);
SimConfig parse_config(const std::filesystem::path& path);

/// Applies one "section.key" = value override, as from a command line flag.
void apply_setting(SimConfig& cfg, const std::string& dotted_key, const std::string& value);

/// Every known "section.key" with its value in `cfg`, in a fixed order.
std::vector<std::pair<std::string, std::string>> config_entries(const SimConfig& cfg);

struct LoadProfile {
  double dt = 1.0;
  std::vector<double> time;
  std::vector<double> power;  // P_out [W], positive discharges
};

/// Two-column CSV with header `t,p_out` on a uniform grid. Resampled by
/// linear interpolation when the file spacing differs from dt.
LoadProfile load_profile_csv(const std::filesystem::path& path, double dt);
LoadProfile parse_profile_csv(const std::string& text, double dt);
void write_profile_csv(const LoadProfile& profile, const std::filesystem::path& path);

/// Drive-cycle shaped demand: micro trips of acceleration, cruise and
/// braking separated by idle. Affinely scaled so the minimum is
/// -peak_charge and the maximum +peak_discharge.
LoadProfile synth_udds_like(double duration, double peak_charge, double peak_discharge, double dt,
                            std::uint64_t seed);

/// Column names of the trace CSV, in order.
const std::vector<std::string>& trace_columns(bool wall_time);

void write_trace_csv(const SimTrace& trace, const std::filesystem::path& path, bool wall_time = false);
std::string trace_csv(const SimTrace& trace, bool wall_time = false);
/// Reads a file written by write_trace_csv (with or without wall time).
std::vector<StepMetrics> read_trace_csv(const std::filesystem::path& path);

struct RunReport {
  std::string scheme;
  double cumulative_loss = 0.0;
  std::optional<double> baseline_loss;
  std::optional<double> loss_reduction_pct;
  std::optional<double> soc_balance_time;
  std::optional<double> temp_balance_time;
  double mean_solver_time = 0.0;
  double max_solver_time = 0.0;
  double mean_k = 0.0;
  int initial_k = 0;
  int final_k = 0;
  int fallback_steps = 0;
  int steps = 0;
  std::vector<std::string> artifacts;
};

RunReport make_report(const SimTrace& trace, const std::string& scheme, const SimTrace* baseline);
std::string report_text(const RunReport& report);
void write_report(const RunReport& report, const std::filesystem::path& path);

struct BenchmarkSpec {
  SimConfig base;
  std::vector<int> cell_counts{50, 100, 400};
  std::vector<int> k_caps{15};
  std::vector<Scheme> schemes{Scheme::Equal};
  int steps = 20;  // timed control steps per run
};

struct BenchmarkRow {
  int n = 0;
  int k_cap = 0;       // 0 for the cell-level baseline
  std::string scheme;
  double mean_time = 0.0;  // optimization seconds per step
  double reduction_pct = 0.0;  // vs cell level at the same n
};

/// Times build + solve per control step on `profile`; each n gets one
/// cell-level run and one run per (k cap, scheme), with k fixed at the cap.
std::vector<BenchmarkRow> cmd_benchmark(const BenchmarkSpec& spec, const std::vector<double>& profile);
std::string benchmark_table(const std::vector<BenchmarkRow>& rows);

}  // namespace bess
