#pragma once

#include <span>
#include <string>
#include <vector>

#include "bess/cluster_model.hpp"
#include "bess/conic.hpp"
#include "bess/dispatch.hpp"

namespace bess {

enum class Scheme { Equal, Resistance, Optimal };

const char* to_string(Scheme s);
/// Accepts "equal", "resistance", "optimal" and "1", "2", "3".
Scheme parse_scheme(const std::string& text);

/// Scheme #1: every member gets p / n. Throws std::invalid_argument for n = 0.
std::vector<double> split_equal(double p, std::size_t n);

/// Scheme #2: shares proportional to 1 / R_i. Throws std::invalid_argument
/// for an empty list or a nonpositive resistance.
std::vector<double> split_resistance(double p, std::span<const double> resistances);

/// Split weights for scheme #2: bare R by default, R + R_C on request.
std::vector<double> split_resistances(std::span<const CellView> cells, std::span<const std::size_t> members,
                                      bool include_converter);

struct OptimalSplit {
  std::vector<double> power;  // P_b per member
  std::vector<double> loss;   // planned P_l per member
  SolveStatus status = SolveStatus::Optimal;
  bool fallback = false;      // solver failed, scheme #2 used instead
  double objective = 0.0;
};

struct OptimalSplitOptions {
  IntraOptions intra;
  SolverOptions solver;
  bool converter_in_fallback = false;
};

/// Scheme #3: cell-level problem with supply row sum(P_b - P_l) = ps - pl.
/// A failed solve falls back to split_resistance on ps.
OptimalSplit split_optimal(std::span<const CellView> cells, std::span<const std::size_t> members, double ps,
                           double pl, const OptimalSplitOptions& opts = {});

struct CurrentCommand {
  double current = 0.0;
  bool clamped = false;
};

/// i = P_b / u(q), clamped to the cell's current limits. Throws
/// std::domain_error when u(q) <= 0.
CurrentCommand power_to_current(const CellParams& params, const CellState& state, double p_b);

}  // namespace bess
