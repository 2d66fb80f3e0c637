#include "bess/cell_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace bess {

namespace {
constexpr double kJoinTolerance = 1e-9;
}

OcvCurve::OcvCurve(std::vector<OcvSegment> segments) : segments_(std::move(segments)) {
  if (segments_.empty()) throw std::invalid_argument("OcvCurve: no segments");
  if (std::abs(segments_.front().q_lo) > 1e-12 || std::abs(segments_.back().q_hi - 1.0) > 1e-12)
    throw std::invalid_argument("OcvCurve: segments must span [0, 1]");
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& s = segments_[i];
    if (!(s.q_lo < s.q_hi))
      throw std::invalid_argument("OcvCurve: segment " + std::to_string(i) + " has q_lo >= q_hi");
    if (!(s.beta > 0.0))
      throw std::invalid_argument("OcvCurve: segment " + std::to_string(i) + " slope must be positive");
    if (i > 0) {
      const auto& prev = segments_[i - 1];
      if (std::abs(prev.q_hi - s.q_lo) > 1e-12)
        throw std::invalid_argument("OcvCurve: gap or overlap before segment " + std::to_string(i));
      if (std::abs(prev.voltage(s.q_lo) - s.voltage(s.q_lo)) > kJoinTolerance)
        throw std::invalid_argument("OcvCurve: discontinuity at segment " + std::to_string(i));
    }
  }
}

OcvCurve OcvCurve::from_knots(const std::vector<std::pair<double, double>>& knots) {
  if (knots.size() < 2) throw std::invalid_argument("OcvCurve: need at least two knots");
  std::vector<OcvSegment> segs;
  segs.reserve(knots.size() - 1);
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    const auto [q0, v0] = knots[i];
    const auto [q1, v1] = knots[i + 1];
    if (!(q1 > q0)) throw std::invalid_argument("OcvCurve: knots must be strictly increasing in SoC");
    const double beta = (v1 - v0) / (q1 - q0);
    segs.push_back({q0, q1, v0 - beta * q0, beta});
  }
  return OcvCurve(std::move(segs));
}

OcvCurve OcvCurve::default_curve() {
  return from_knots({{0.0, 3.0}, {0.1, 3.45}, {0.8, 3.975}, {1.0, 4.2}});
}

std::size_t OcvCurve::segment_index(double q) const {
  if (!(q >= 0.0 && q <= 1.0)) throw std::domain_error("ocv: SoC " + std::to_string(q) + " outside [0, 1]");
  for (std::size_t i = 0; i < segments_.size(); ++i)
    if (q < segments_[i].q_hi) return i;
  return segments_.size() - 1;
}

double ocv(const OcvCurve& curve, double q) { return curve(q); }

void CellParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("CellParams: ") + what);
  };
  require(capacity > 0, "capacity must be positive");
  require(internal_resistance > 0, "internal resistance must be positive");
  require(converter_resistance >= 0, "converter resistance must be non-negative");
  require(mass > 0, "mass must be positive");
  require(surface_area > 0, "surface area must be positive");
  require(heat_transfer > 0, "heat transfer coefficient must be positive");
  require(specific_heat > 0, "specific heat must be positive");
  require(current_min < 0 && current_max > 0, "current limits must satisfy i_min < 0 < i_max");
  require(soc_min >= 0 && soc_min < soc_max && soc_max <= 1, "SoC limits must satisfy 0 <= q_min < q_max <= 1");
  require(temp_min > 0 && temp_min < temp_max, "temperature limits must satisfy 0 < T_min < T_max");
  require(!ocv.segments().empty(), "OCV curve is empty");
}

ElectricalStep electrical_step(const CellState& state, const CellParams& params, double current,
                               double dt) {
  if (!(dt > 0)) throw std::invalid_argument("electrical_step: dt must be positive");
  ElectricalStep out{state, false};
  const double q = state.soc - current / params.capacity * dt;
  out.state.soc = std::clamp(q, 0.0, 1.0);
  out.saturated = q != out.state.soc;
  return out;
}

double terminal_voltage(const CellParams& params, const CellState& state, double current) {
  return ocv(params.ocv, state.soc) - params.internal_resistance * current;
}

PowerBreakdown module_output_power(const CellParams& params, const CellState& state,
                                   double current) {
  PowerBreakdown p;
  p.internal = ocv(params.ocv, state.soc) * current;
  p.loss = params.series_resistance() * current * current;
  p.output = p.internal - p.loss;
  return p;
}

CellState thermal_step(const CellState& state, const CellParams& params, double current,
                       double t_env, double dt) {
  if (!(dt > 0)) throw std::invalid_argument("thermal_step: dt must be positive");
  const double heat = params.internal_resistance * current * current;
  const double cooling = (state.temperature - t_env) / params.convective_resistance();
  CellState out = state;
  out.temperature = state.temperature + dt / params.thermal_capacitance() * (heat - cooling);
  return out;
}

CellEnergy cell_energy(const CellParams& params, double q_initial, double q_now) {
  const auto& seg = params.ocv.segment_at(q_initial);
  CellEnergy e;
  e.capacitance = params.capacity / seg.beta;
  const double u0 = seg.voltage(q_initial);
  const double u = params.ocv(q_now);
  e.e0 = 0.5 * e.capacitance * u0 * u0;
  e.energy = 0.5 * e.capacitance * u * u - e.e0;
  return e;
}

EnergyTracker::EnergyTracker(const CellParams& params, double q_initial)
    : params_(params),
      segment_(params.ocv.segment_index(q_initial)),
      q_anchor_(q_initial),
      local_(cell_energy(params, q_initial, q_initial)) {}

void EnergyTracker::advance(double q_now) {
  const auto& segs = params_.ocv.segments();
  const auto piece = [&](std::size_t j, double qa, double qb) {
    CellEnergy e;
    e.capacitance = params_.capacity / segs[j].beta;
    const double ua = segs[j].voltage(qa), ub = segs[j].voltage(qb);
    e.e0 = 0.5 * e.capacitance * ua * ua;
    e.energy = 0.5 * e.capacitance * ub * ub - e.e0;
    return e;
  };
  // Walk join by join so each piece uses its own segment's capacitance.
  const std::size_t target = params_.ocv.segment_index(q_now);
  while (target != segment_) {
    const bool down = target < segment_;
    const double join = down ? segs[segment_].q_lo : segs[segment_].q_hi;
    offset_ += piece(segment_, q_anchor_, join).energy;
    q_anchor_ = join;
    segment_ = down ? segment_ - 1 : segment_ + 1;
  }
  local_ = piece(segment_, q_anchor_, q_now);
}

}  // namespace bess
