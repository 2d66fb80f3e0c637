#pragma once

#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace bess {

/// a'x + constant over problem variables.
struct LinExpr {
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;

  LinExpr() = default;
  explicit LinExpr(double c) : constant(c) {}
  LinExpr& add(int var, double coef) {
    terms.emplace_back(var, coef);
    return *this;
  }
  double eval(const std::vector<double>& x) const;
};

/// What a row encodes. Used for counting and for the text dump.
enum class RowKind {
  CurrentLimit,
  Loss,
  EnergyDynamics,
  ThermalDynamics,
  StatePin,
  EnergyWindow,
  TemperatureBox,
  BalanceEnergy,
  BalanceTemperature,
  Demand,
  Auxiliary,
  Other,
};

const char* to_string(RowKind k);

enum class Sense { Equal, LessEqual };

/// expr (= or <=) 0. `weight` is how much the row contributes to the
/// published constraint count (the second half of an absolute-value pair
/// and auxiliary rows contribute 0).
struct LinearRow {
  LinExpr expr;
  Sense sense = Sense::LessEqual;
  RowKind kind = RowKind::Other;
  int weight = 1;
};

/// 2 u v >= |w|^2 with u, v >= 0.
struct RotatedCone {
  LinExpr u;
  LinExpr v;
  std::vector<LinExpr> w;
  RowKind kind = RowKind::Loss;
  int weight = 1;
};

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Linear objective, linear rows, rotated cones and variable bounds.
class ConicProblem {
 public:
  int add_variable(std::string name, double lower = -kInf, double upper = kInf, double cost = 0.0);
  void add_row(LinExpr expr, Sense sense, RowKind kind, int weight = 1);
  void add_cone(RotatedCone cone) { cones_.push_back(std::move(cone)); }
  /// Rows folded into other rows; counted but not materialized.
  void add_embedded(int count) { embedded_ += count; }

  int num_vars() const { return static_cast<int>(cost_.size()); }
  const std::vector<double>& cost() const { return cost_; }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<LinearRow>& rows() const { return rows_; }
  const std::vector<RotatedCone>& cones() const { return cones_; }
  int embedded() const { return embedded_; }

  /// Throws std::invalid_argument on out-of-range indices or empty cones.
  void validate() const;

  /// Weighted constraint count (rows + cones + embedded rows).
  int constraint_count() const;

  /// One line per variable, row and cone.
  std::string dump() const;

 private:
  std::vector<double> cost_, lower_, upper_;
  std::vector<std::string> names_;
  std::vector<LinearRow> rows_;
  std::vector<RotatedCone> cones_;
  int embedded_ = 0;
};

enum class SolveStatus { Optimal, Infeasible, IterationLimit, NumericalError };

const char* to_string(SolveStatus s);

struct SolverOptions {
  double tolerance = 1e-9;        // internal stopping tolerance (scaled problem)
  double check_tolerance = 1e-6;  // relative residual accepted on the original problem
  int max_iterations = 80;
  int equilibration_passes = 10;
  double static_regularization = 1e-9;
  int refinement_steps = 3;
};

struct Solution {
  SolveStatus status = SolveStatus::NumericalError;
  std::vector<double> x;
  double objective = 0.0;
  double primal_residual = 0.0;  // max relative violation of linear rows and bounds
  double cone_residual = 0.0;    // max relative violation of cones
  double dual_residual = 0.0;
  double gap = 0.0;
  int iterations = 0;
  int dropped_constant_rows = 0;  // rows without variables
  int violated_constant_rows = 0;

  bool optimal() const { return status == SolveStatus::Optimal; }
};

/// Primal-dual interior point method with Nesterov-Todd scaling and a
/// Mehrotra corrector. Constant rows are checked and dropped before the
/// solve; a violated constant row is counted, not enforced.
Solution solve(const ConicProblem& problem, const SolverOptions& opts = {});

struct Residuals {
  double linear = 0.0;
  double cone = 0.0;
};

/// Relative violations of `x` against rows, bounds and cones.
Residuals residuals(const ConicProblem& problem, const std::vector<double>& x);

}  // namespace bess
