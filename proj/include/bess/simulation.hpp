#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bess/cell_model.hpp"
#include "bess/clustering.hpp"
#include "bess/conic.hpp"
#include "bess/power_split.hpp"

namespace bess {

struct PopulationSpec {
  int count = 400;
  double soc_lo = 0.70, soc_hi = 0.75;
  double temp_lo = 301.0, temp_hi = 305.0;
  double resistance_lo = 31.3e-3, resistance_hi = 41.3e-3;
  CellParams base;  // every other parameter
  /// When non-empty, used as is and the sampling ranges are ignored.
  std::vector<std::pair<CellParams, CellState>> cells;
};

struct Population {
  std::vector<CellParams> params;
  std::vector<CellState> states;
};

/// Seeded draw: SoC, temperature and resistance uniform per cell, in that
/// order for each cell.
Population make_population(const PopulationSpec& spec, std::uint64_t seed);

struct SimConfig {
  PopulationSpec population;
  std::uint64_t seed = 1;
  double dt = 1.0;
  int horizon = 10;
  double duration = 2400.0;
  Scheme scheme = Scheme::Optimal;
  bool split_with_converter = false;  // scheme #2 weights 1/(R + R_C)

  // Cell-level bounds (intra-cluster rows and balanced flags).
  double cell_dq = 0.005;
  double cell_dt = 0.5;
  // Cluster-level bounds (inter-cluster rows), before adaptation.
  double cluster_dq = 0.005;
  double cluster_dt = 0.5;
  double lambda_cell = 1e3;
  double lambda_cluster = 1e3;
  double t_env = 298.0;

  int recluster_period = 1;
  int k_max = 20;
  int gap_references = 10;
  /// Fixed cluster count instead of the gap statistic (0 = gap statistic).
  int fixed_k = 0;
  /// Every cell its own cluster; clustering is bypassed.
  bool cell_level = false;
  bool adaptive_bounds = true;
  double bound_floor = 0.2;
  bool exact_current_limits = false;
  /// Clamp both penalties to tight_penalty_cap so planned losses stay on
  /// the cone boundary.
  bool cap_penalties = true;
  SolverOptions solver;

  /// Record per-cell snapshots every this many steps (0 = never).
  int snapshot_every = 0;

  int steps() const;
  /// Throws std::invalid_argument with the offending field.
  void validate() const;
};

struct AdaptiveBounds {
  double dq = 0.005;
  double dt = 0.5;
  double dq0 = 0.005;
  double dt0 = 0.5;
};

/// Tightening rule: when a slack sum is zero (<= 1e-9) the matching bound
/// drops by half the largest cluster deviation, floored at
/// floor * original.
AdaptiveBounds update_bounds(const AdaptiveBounds& b, const SlackSums& slacks, std::span<const Deviation> devs,
                             double floor);

/// Relaxing rule: when every cell is within the cell bound of the
/// population mean, the bound grows by the remaining margin, capped at the
/// original.
AdaptiveBounds relax_bounds(const AdaptiveBounds& b, double soc_spread, double temp_spread, double cell_dq,
                            double cell_dt);

struct StepMetrics {
  double time = 0.0;
  double loss = 0.0;             // plant sum (R + R_C) i^2 [W]
  double cumulative_loss = 0.0;  // [J], through the end of this step
  double demand = 0.0;
  double delivered = 0.0;        // plant output [W]
  double planned_loss = 0.0;     // optimizer's total P_l at t = 0 [W]
  int k = 0;
  double slack_e = 0.0;
  double slack_t = 0.0;
  double soc_min = 0.0, soc_max = 0.0, soc_mean = 0.0;
  double temp_min = 0.0, temp_max = 0.0, temp_mean = 0.0;
  bool soc_balanced = false;
  bool temp_balanced = false;
  double bound_dq = 0.0;
  double bound_dt = 0.0;
  std::string status = "optimal";  // inter-cluster solve, or "none"
  bool fallback = false;           // any fallback in this step
  int clamped = 0;                 // current commands clamped
  int saturated = 0;               // SoC clipped by the plant
  double solver_time = 0.0;        // [s], optimization only
  double cluster_time = 0.0;       // [s], clustering only
};

struct Snapshot {
  double time = 0.0;
  std::vector<CellState> cells;
};

struct SimSummary {
  double cumulative_loss = 0.0;
  std::optional<double> soc_balance_time;
  std::optional<double> temp_balance_time;
  double mean_solver_time = 0.0;
  double max_solver_time = 0.0;
  double total_solver_time = 0.0;
  double mean_k = 0.0;
  int initial_k = 0;
  int final_k = 0;
  int fallbacks = 0;
  double max_delivered_deviation = 0.0;  // relative, on steps with |demand| >= 1 W
};

struct SimTrace {
  std::vector<StepMetrics> steps;
  std::vector<Snapshot> snapshots;
  SimSummary summary;
};

/// Demand at step t; held at the last value past the end.
double demand_at(std::span<const double> profile, int t);

/// Closed loop with clustering, inter-cluster dispatch and the configured
/// split scheme. Throws std::invalid_argument if the profile is shorter
/// than the run.
SimTrace run(const SimConfig& config, std::span<const double> profile);

/// Every cell delivers P_out / n; no optimization.
SimTrace baseline_uniform(const SimConfig& config, std::span<const double> profile);

/// run() with one cluster per cell.
SimTrace baseline_cell_level(const SimConfig& config, std::span<const double> profile);

/// Output current for power p: root of u i - r i^2 = p nearest zero.
/// Returns nullopt when p exceeds the deliverable maximum u^2 / (4 r).
std::optional<double> current_for_output(double u, double r, double p);

/// First time the flag turns true and stays true for at least 95% of the
/// remaining steps.
std::optional<double> balance_time(const std::vector<StepMetrics>& steps, bool soc);

struct OracleConfig {
  std::vector<CellParams> params;
  std::vector<CellState> states;
  double demand = 0.0;
  double dt = 1.0;
  double t_env = 298.0;
  double dq = 0.005;
  double delta_t = 0.5;
  double lambda_e = 1e3;
  double lambda_t = 1e3;
  bool cap_penalties = true;  // applied to both the oracle and the conic solve
  int grid = 201;  // points per current axis
};

struct OracleResult {
  double objective = 0.0;
  std::vector<double> currents;
};

/// Exhaustive search over cell currents for the one-step cell-level
/// problem (n <= 4). The last cell's current follows from the demand row.
/// Returns nullopt when no grid point is feasible.
std::optional<OracleResult> brute_force_oracle(const OracleConfig& config);

/// Seeded heterogeneous instance for the oracle comparison: Default cells
/// with resistances in [31.3, 61.3] mOhm, a random SoC/temperature spread
/// and a demand between 60% charging and 90% discharging capability.
OracleConfig random_oracle_instance(int n, std::uint64_t seed);

/// The conic counterpart of brute_force_oracle: singleton units, H = 1.
Solution solve_cell_level_step(const OracleConfig& config, const SolverOptions& opts = {});

}  // namespace bess
