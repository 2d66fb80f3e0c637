#include "bess/cluster_model.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace bess {

ClusterModel aggregate(std::span<const CellView> cells, std::span<const std::size_t> members) {
  if (members.empty()) throw std::invalid_argument("aggregate: empty member set");
  ClusterModel m;
  m.members.assign(members.begin(), members.end());

  const auto& first = *cells[members.front()].params;
  const auto& ref_segs = first.ocv.segments();
  std::vector<OcvSegment> segs(ref_segs.size());
  for (std::size_t s = 0; s < segs.size(); ++s) {
    segs[s] = ref_segs[s];
    segs[s].alpha = segs[s].beta = 0.0;
  }

  const double n = static_cast<double>(members.size());
  double conductance = 0.0, weighted_u = 0.0, area = 0.0, charge = 0.0, temp = 0.0;
  m.soc_min = first.soc_min;
  m.soc_max = first.soc_max;
  m.temp_min = first.temp_min;
  m.temp_max = first.temp_max;
  m.specific_heat = first.specific_heat;
  for (auto idx : members) {
    const auto& c = cells[idx];
    const auto& p = *c.params;
    const auto& ms = p.ocv.segments();
    if (ms.size() != segs.size())
      throw std::invalid_argument("aggregate: members have different OCV segmentations");
    for (std::size_t s = 0; s < segs.size(); ++s) {
      if (std::abs(ms[s].q_lo - segs[s].q_lo) > 1e-12 || std::abs(ms[s].q_hi - segs[s].q_hi) > 1e-12)
        throw std::invalid_argument("aggregate: members have different OCV breakpoints");
      segs[s].alpha += ms[s].alpha;
      segs[s].beta += ms[s].beta;
    }
    m.capacity += p.capacity;
    m.current_min += p.current_min;
    m.current_max += p.current_max;
    const double g = 1.0 / p.series_resistance();
    conductance += g;
    weighted_u += g * ocv(p.ocv, c.state.soc);
    m.mass += p.mass;
    area += p.heat_transfer * p.surface_area;
    charge += p.capacity * c.state.soc;
    temp += c.state.temperature;
    m.soc_min = std::max(m.soc_min, p.soc_min);
    m.soc_max = std::min(m.soc_max, p.soc_max);
    m.temp_min = std::max(m.temp_min, p.temp_min);
    m.temp_max = std::min(m.temp_max, p.temp_max);
  }
  for (auto& s : segs) {
    s.alpha /= n;
    s.beta /= n;
  }
  m.ocv = OcvCurve(std::move(segs));
  m.resistance = 1.0 / conductance;
  m.mixed_ocv = weighted_u / conductance;
  m.convective_resistance = 1.0 / area;
  m.soc = charge / m.capacity;
  m.temperature = temp / n;

  const auto& seg = m.active_segment();
  m.capacitance = m.capacity / seg.beta;
  const double u = seg.voltage(m.soc);
  m.e0 = 0.5 * m.capacitance * u * u;
  return m;
}

ClusterModel aggregate(std::span<const CellView> cells) {
  std::vector<std::size_t> all(cells.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return aggregate(cells, all);
}

double cluster_ocv(const ClusterModel& model, double q_bar) { return ocv(model.ocv, q_bar); }

SocEnergyMap soc_energy_maps(const ClusterModel& model) {
  const auto& seg = model.active_segment();
  return {seg.alpha, seg.beta, model.capacitance, model.e0};
}

double SocEnergyMap::energy_from_soc(double q) const {
  const double u = alpha + beta * q;
  return 0.5 * capacitance * u * u - e0;
}

double SocEnergyMap::soc_from_energy(double e) const {
  const double total = e + e0;
  if (total < 0.0) throw std::domain_error("soc_from_energy: E + E0 is negative");
  return (std::sqrt(2.0 * total / capacitance) - alpha) / beta;
}

double delta_E_bound(const OcvSegment& seg, double dq) {
  const double a = seg.alpha + seg.beta * dq;
  return a * a - seg.alpha * seg.alpha;
}

double delta_E_bound(const ClusterModel& model, double dq_bar) {
  return delta_E_bound(model.active_segment(), dq_bar);
}

}  // namespace bess
