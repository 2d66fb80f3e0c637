#pragma once

#include <span>
#include <vector>

#include "bess/cell_model.hpp"

namespace bess {

/// A cell as seen by the aggregator: its parameters and current state.
struct CellView {
  const CellParams* params = nullptr;
  CellState state;
};

/// Lumped electro-thermal model of a group of cells connected virtually
/// in parallel.
struct ClusterModel {
  std::vector<std::size_t> members;
  double capacity = 0.0;      // Q_bar [C]
  double current_min = 0.0;   // sum of member i_min
  double current_max = 0.0;   // sum of member i_max
  double resistance = 0.0;    // R_bar, parallel equivalent of R_i + R_C
  double mixed_ocv = 0.0;     // conductance-weighted member OCV [V]
  OcvCurve ocv;               // segment-wise mean of member curves
  double mass = 0.0;          // m_bar [kg]
  double specific_heat = 0.0; // shared C_th
  double convective_resistance = 0.0;  // 1 / (h sum A) [K/W]
  double soc = 0.0;           // q_bar, capacity weighted
  double temperature = 0.0;   // T_bar, unweighted mean
  double soc_min = 0.0;
  double soc_max = 1.0;
  double temp_min = 0.0;
  double temp_max = 0.0;
  double capacitance = 0.0;   // C_bar = Q_bar / beta_bar(q_bar)
  double e0 = 0.0;            // C_bar u_bar(q_bar)^2 / 2

  const OcvSegment& active_segment() const { return ocv.segment_at(soc); }
  double thermal_capacitance() const { return mass * specific_heat; }
  /// u_bar(q_bar) on the averaged curve.
  double voltage() const { return ocv(soc); }
};

/// Throws std::invalid_argument for an empty member list or members whose
/// OCV curves do not share segment breakpoints.
ClusterModel aggregate(std::span<const CellView> cells, std::span<const std::size_t> members);

/// Convenience overload: every cell in `cells` is a member.
ClusterModel aggregate(std::span<const CellView> cells);

/// Averaged OCV of the cluster; domain error outside [0,1].
double cluster_ocv(const ClusterModel& model, double q_bar);

/// Energy relative to E0 on the active segment, and its inverse.
struct SocEnergyMap {
  double alpha = 0.0;
  double beta = 0.0;
  double capacitance = 0.0;
  double e0 = 0.0;

  double energy_from_soc(double q) const;
  /// Throws std::domain_error when E + E0 < 0.
  double soc_from_energy(double e) const;
};

SocEnergyMap soc_energy_maps(const ClusterModel& model);

/// (alpha + beta dq)^2 - alpha^2 with active-segment coefficients.
double delta_E_bound(const ClusterModel& model, double dq_bar);
double delta_E_bound(const OcvSegment& seg, double dq);

}  // namespace bess
