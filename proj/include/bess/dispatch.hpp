#pragma once

#include <span>
#include <vector>

#include "bess/cluster_model.hpp"
#include "bess/conic.hpp"

namespace bess {

/// Constants of one dispatch unit (a cluster, or a single cell) at the
/// start of a horizon. Energies are relative to e0.
struct UnitSpec {
  double capacitance = 0.0;   // C = Q / beta
  double e0 = 0.0;            // C u0^2 / 2
  double u0 = 0.0;            // OCV at horizon start [V]
  double resistance = 0.0;    // series resistance incl. converter [ohm]
  double current_min = 0.0;
  double current_max = 0.0;
  double energy_min = 0.0;    // window on E, from the SoC limits
  double energy_max = 0.0;
  double temperature = 0.0;   // measured [K]
  double temp_min = 0.0;
  double temp_max = 0.0;
  double thermal_capacitance = 0.0;    // m C_th [J/K]
  double convective_resistance = 0.0;  // [K/W]
  double delta_e = 0.0;       // balancing bound on u^2 [V^2]
};

/// Unit for a cluster with SoC balancing bound dq.
UnitSpec make_unit(const ClusterModel& model, double dq);

struct HorizonInput {
  std::vector<UnitSpec> units;
  std::vector<double> demand;  // net output per step, size H
  double dt = 1.0;
  double t_env = 298.0;
  double delta_t = 0.5;        // temperature balancing bound [K]
  double lambda_e = 1e3;
  double lambda_t = 1e3;
  /// Per-step mean variables for the balancing rows instead of writing
  /// the mean inline into every row. Keeps large problems sparse.
  bool aux_means = false;
  /// Current limits as a cone in E instead of frozen at the start value.
  /// Uses the smaller of |i_min| and i_max.
  bool exact_current_limits = false;

  int horizon() const { return static_cast<int>(demand.size()); }
};

/// Variable indices of one unit. e[0] is -1 (E at the horizon start is 0
/// by definition); the state after the last step is affine in earlier
/// variables and has no index either.
struct UnitLayout {
  std::vector<int> ps, pl, xi_e, xi_t, e, temp;
};

struct Layout {
  std::vector<UnitLayout> units;
  std::vector<int> aux;  // mean variables, if any
  int horizon = 0;
};

struct DispatchProblem {
  ConicProblem problem;
  Layout layout;
};

/// Cluster-level receding-horizon program.
DispatchProblem build_inter_cluster(const HorizonInput& input);

struct IntraOptions {
  double dq = 0.005;
  double delta_t = 0.5;
  double lambda_e = 1e3;
  double lambda_t = 1e3;
  double dt = 1.0;
  double t_env = 298.0;
  bool aux_means = true;
  /// Clamp the penalties to tight_penalty_cap.
  bool cap_penalties = false;
};

/// Cell-level split of one cluster's net power (P_S* - P_l*) per step.
DispatchProblem build_intra_cluster(std::span<const CellView> cells,
                                    std::span<const std::size_t> members,
                                    std::span<const double> net_power, const IntraOptions& opts);

struct FirstStep {
  double ps = 0.0;
  double pl = 0.0;
};

/// t = 0 slice per unit. Throws std::runtime_error unless the solution
/// is optimal.
std::vector<FirstStep> extract_first_step(const Solution& sol, const Layout& layout);

/// Counts under the published convention: auxiliary variables and rows
/// are excluded, an absolute-value pair counts once, and the transition
/// out of the last step (folded into the terminal rows) counts as two.
struct TableCounts {
  int variables = 0;
  int constraints = 0;
};

TableCounts table_counts(const DispatchProblem& dp);

/// Largest penalties under which raising a planned loss above its cone
/// minimum can never pay off through the balancing slacks, scaled by
/// `margin`. One watt of extra P_l warms a unit by dt/(m C_th) at each
/// later state and, through the extra P_S it allows, lowers u^2 by
/// 2 dt / C; each moves the slack sum of one state by at most twice that.
struct PenaltyCap {
  double energy = 0.0;
  double temperature = 0.0;
};

PenaltyCap tight_penalty_cap(std::span<const UnitSpec> units, int horizon, double dt, double margin = 0.5);

/// Sum over units of the two balancing slacks at t = 0.
struct SlackSums {
  double energy = 0.0;
  double temperature = 0.0;
};

SlackSums first_step_slacks(const Solution& sol, const Layout& layout);

}  // namespace bess
