#pragma once

#include <vector>

namespace bess {

/// One line of a piecewise-linear SoC/OCV curve, valid on [q_lo, q_hi].
struct OcvSegment {
  double q_lo = 0.0;
  double q_hi = 1.0;
  double alpha = 0.0;  // intercept [V]
  double beta = 0.0;   // slope [V per unit SoC]

  double voltage(double q) const { return alpha + beta * q; }
};

/// Piecewise-linear open-circuit voltage curve covering SoC in [0, 1].
class OcvCurve {
 public:
  OcvCurve() = default;

  /// Validates coverage of [0,1], positive slopes and continuity at joins.
  /// Throws std::invalid_argument on violation.
  explicit OcvCurve(std::vector<OcvSegment> segments);

  /// Builds a continuous curve through (soc, volts) knots; first knot at
  /// soc 0, last at soc 1.
  static OcvCurve from_knots(const std::vector<std::pair<double, double>>& knots);

  /// 3.0 V to 4.2 V, three segments, shaped like an 18650 NMC cell.
  static OcvCurve default_curve();

  const std::vector<OcvSegment>& segments() const { return segments_; }

  /// Index of the segment containing q. At a join the upper segment wins
  /// (the one whose q_lo equals q). Throws std::domain_error outside [0,1].
  std::size_t segment_index(double q) const;
  const OcvSegment& segment_at(double q) const { return segments_[segment_index(q)]; }

  double operator()(double q) const { return segment_at(q).voltage(q); }

 private:
  std::vector<OcvSegment> segments_;
};

/// Open-circuit voltage; throws std::domain_error when q is outside [0,1].
double ocv(const OcvCurve& curve, double q);

struct CellParams {
  double capacity = 2.5 * 3600.0;          // Q [C]
  double internal_resistance = 31.3e-3;    // R [ohm]
  double converter_resistance = 10e-3;     // R_C [ohm]
  double mass = 0.0438;                    // [kg]
  double surface_area = 0.0042;            // [m^2]
  double heat_transfer = 5.8;              // h [W/(K m^2)]
  double specific_heat = 918.49;           // C_th [J/(K kg)]
  OcvCurve ocv = OcvCurve::default_curve();
  double soc_min = 0.05;
  double soc_max = 0.95;
  double current_min = -7.5;  // [A], charging
  double current_max = 7.5;   // [A], discharging
  double temp_min = 273.15;   // [K]
  double temp_max = 333.15;   // [K]

  /// Convective thermal resistance 1/(h A) [K/W].
  double convective_resistance() const { return 1.0 / (heat_transfer * surface_area); }
  double thermal_capacitance() const { return mass * specific_heat; }
  double series_resistance() const { return internal_resistance + converter_resistance; }

  /// Throws std::invalid_argument if any physical invariant is violated.
  void validate() const;
};

struct CellState {
  double soc = 0.5;           // q
  double temperature = 298.0; // T [K]
};

/// Result of advancing the electrical state; `saturated` is set when the
/// Euler step left [0,1] and SoC had to be clipped.
struct ElectricalStep {
  CellState state;
  bool saturated = false;
};

/// Forward-Euler SoC update q' = q - i dt / Q. Positive current discharges.
ElectricalStep electrical_step(const CellState& state, const CellParams& params,
                               double current, double dt);

/// v = u(q) - R i
double terminal_voltage(const CellParams& params, const CellState& state, double current);

struct PowerBreakdown {
  double internal = 0.0;  // P_b = u i
  double loss = 0.0;      // (R + R_C) i^2
  double output = 0.0;    // P = P_b - loss
};

PowerBreakdown module_output_power(const CellParams& params, const CellState& state,
                                   double current);

/// Lumped thermal Euler step. Only the cell resistance heats the cell.
CellState thermal_step(const CellState& state, const CellParams& params, double current,
                       double t_env, double dt);

/// Energy bookkeeping on the active OCV segment: E = C u^2 / 2 - E0 with
/// C = Q / beta.
struct CellEnergy {
  double capacitance = 0.0;  // C = Q / beta
  double e0 = 0.0;           // C u(q0)^2 / 2
  double energy = 0.0;       // relative to e0
};

CellEnergy cell_energy(const CellParams& params, double q_initial, double q_now);

/// Tracks relative cell energy over a trajectory. When SoC crosses into
/// a different OCV segment, the reference is re-based so that the
/// reported energy stays continuous.
class EnergyTracker {
 public:
  EnergyTracker(const CellParams& params, double q_initial);

  void advance(double q_now);
  double energy() const { return offset_ + local_.energy; }
  double capacitance() const { return local_.capacitance; }
  std::size_t segment() const { return segment_; }

 private:
  CellParams params_;
  std::size_t segment_;
  double q_anchor_;
  double offset_ = 0.0;
  CellEnergy local_;
};

}  // namespace bess
