#include "bess/dispatch.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

namespace bess {

UnitSpec make_unit(const ClusterModel& model, double dq) {
  const auto& seg = model.active_segment();
  UnitSpec u;
  u.capacitance = model.capacitance;
  u.e0 = model.e0;
  u.u0 = seg.voltage(model.soc);
  u.resistance = model.resistance;
  u.current_min = model.current_min;
  u.current_max = model.current_max;
  const double v_lo = seg.voltage(model.soc_min), v_hi = seg.voltage(model.soc_max);
  u.energy_min = 0.5 * u.capacitance * v_lo * v_lo - u.e0;
  u.energy_max = 0.5 * u.capacitance * v_hi * v_hi - u.e0;
  u.temperature = model.temperature;
  u.temp_min = model.temp_min;
  u.temp_max = model.temp_max;
  u.thermal_capacitance = model.thermal_capacitance();
  u.convective_resistance = model.convective_resistance;
  u.delta_e = delta_E_bound(seg, dq);
  return u;
}

namespace {

void validate(const HorizonInput& in) {
  if (in.units.empty()) throw std::invalid_argument("dispatch: no units");
  if (in.horizon() < 1) throw std::invalid_argument("dispatch: horizon must be at least 1");
  if (!(in.dt > 0)) throw std::invalid_argument("dispatch: dt must be positive");
  if (!(in.delta_t >= 0)) throw std::invalid_argument("dispatch: temperature bound must be >= 0");
  if (!(in.lambda_e >= 0 && in.lambda_t >= 0)) throw std::invalid_argument("dispatch: penalties must be >= 0");
  for (const auto& u : in.units) {
    if (!(u.delta_e >= 0)) throw std::invalid_argument("dispatch: energy bound must be >= 0");
    if (!(u.capacitance > 0 && u.resistance > 0 && u.e0 > 0))
      throw std::invalid_argument("dispatch: unit constants must be positive");
    if (!(u.current_min < 0 && u.current_max > 0))
      throw std::invalid_argument("dispatch: current limits must straddle zero");
    if (!(u.energy_min <= u.energy_max && u.temp_min <= u.temp_max))
      throw std::invalid_argument("dispatch: inverted state bounds");
  }
}

// Merges repeated variable indices.
LinExpr compact(const LinExpr& e) {
  std::map<int, double> acc;
  for (const auto& [i, a] : e.terms) acc[i] += a;
  LinExpr out(e.constant);
  for (const auto& [i, a] : acc)
    if (a != 0.0) out.terms.emplace_back(i, a);
  return out;
}

LinExpr scaled(const LinExpr& e, double s) {
  LinExpr out(e.constant * s);
  for (const auto& [i, a] : e.terms) out.terms.emplace_back(i, a * s);
  return out;
}

LinExpr plus(LinExpr a, const LinExpr& b, double sb = 1.0) {
  for (const auto& [i, c] : b.terms) a.terms.emplace_back(i, c * sb);
  a.constant += b.constant * sb;
  return a;
}

struct Builder {
  const HorizonInput& in;
  DispatchProblem dp;
  int H;

  explicit Builder(const HorizonInput& input) : in(input), H(input.horizon()) {}

  // E state t as an expression.
  LinExpr energy(int j, int t) const {
    const auto& lay = dp.layout.units[j];
    if (t == 0) return LinExpr(0.0);
    if (t < H) return LinExpr().add(lay.e[t], 1.0);
    return plus(energy(j, H - 1), LinExpr().add(lay.ps[H - 1], 1.0), -in.dt);
  }

  LinExpr temperature(int j, int t) const {
    const auto& lay = dp.layout.units[j];
    if (t < H) return LinExpr().add(lay.temp[t], 1.0);
    return step_temperature(j, H - 1);
  }

  // T[t+1] as an affine expression of T[t] and P_l[t].
  LinExpr step_temperature(int j, int t) const {
    const auto& u = in.units[j];
    const auto& lay = dp.layout.units[j];
    const double g = in.dt / u.thermal_capacitance;
    const double a = 1.0 - g / u.convective_resistance;
    LinExpr e(g * in.t_env / u.convective_resistance);
    e.add(lay.temp[t], a).add(lay.pl[t], g);
    return e;
  }

  // Absolute squared voltage implied by E: u0^2 + 2E/C.
  LinExpr square_voltage(int j, int t) const {
    const auto& u = in.units[j];
    LinExpr e = scaled(energy(j, t), 2.0 / u.capacitance);
    e.constant += u.u0 * u.u0;
    return e;
  }

  void variables() {
    const int k = static_cast<int>(in.units.size());
    dp.layout.horizon = H;
    dp.layout.units.resize(k);
    auto& p = dp.problem;
    for (int j = 0; j < k; ++j) {
      auto& lay = dp.layout.units[j];
      const std::string tag = std::to_string(j) + ",";
      for (int t = 0; t < H; ++t) {
        const std::string at = tag + std::to_string(t) + "]";
        lay.ps.push_back(p.add_variable("ps[" + at));
        lay.pl.push_back(p.add_variable("pl[" + at, -kInf, kInf, 1.0));
        lay.xi_e.push_back(p.add_variable("xi_e[" + at, 0.0, kInf, in.lambda_e));
        lay.xi_t.push_back(p.add_variable("xi_t[" + at, 0.0, kInf, in.lambda_t));
      }
      lay.e.push_back(-1);
      for (int t = 1; t < H; ++t) lay.e.push_back(p.add_variable("e[" + tag + std::to_string(t) + "]"));
      for (int t = 0; t < H; ++t) lay.temp.push_back(p.add_variable("temp[" + tag + std::to_string(t) + "]"));
    }
  }

  void unit_rows(int j) {
    const auto& u = in.units[j];
    const auto& lay = dp.layout.units[j];
    auto& p = dp.problem;

    const double i_cap = std::max(-u.current_min, u.current_max);
    const double p_ref = 0.5 * u.u0 * i_cap;
    // Scales the cone sides to the same magnitude near the horizon start.
    const double kappa = std::sqrt(2.0) * p_ref / (u.capacitance * u.u0 * u.u0);

    for (int t = 0; t < H; ++t) {
      if (in.exact_current_limits) {
        // P_S^2 <= i^2 (2/C)(E + E0)
        const double i_sym = std::min(-u.current_min, u.current_max);
        RotatedCone c;
        c.kind = RowKind::CurrentLimit;
        c.weight = 2;
        c.u = scaled(plus(energy(j, t), LinExpr(u.e0)), kappa);
        c.v = LinExpr(i_sym * i_sym / (u.capacitance * kappa));
        c.w.push_back(LinExpr().add(lay.ps[t], 1.0));
        p.add_cone(std::move(c));
      } else {
        p.add_row(LinExpr(-u.u0 * u.current_max).add(lay.ps[t], 1.0), Sense::LessEqual, RowKind::CurrentLimit);
        p.add_row(LinExpr(u.u0 * u.current_min).add(lay.ps[t], -1.0), Sense::LessEqual, RowKind::CurrentLimit);
      }

      // P_l >= R C P_S^2 / (2 (E + E0))
      RotatedCone c;
      c.u = LinExpr().add(lay.pl[t], 1.0 / (u.resistance * u.capacitance * kappa));
      c.v = scaled(plus(energy(j, t), LinExpr(u.e0)), kappa);
      c.w.push_back(LinExpr().add(lay.ps[t], 1.0));
      p.add_cone(std::move(c));
    }

    for (int t = 0; t + 1 < H; ++t) {
      LinExpr e = plus(energy(j, t + 1), energy(j, t), -1.0);
      e.add(lay.ps[t], in.dt);
      p.add_row(compact(e), Sense::Equal, RowKind::EnergyDynamics);
      LinExpr th = plus(LinExpr().add(lay.temp[t + 1], 1.0), step_temperature(j, t), -1.0);
      p.add_row(compact(th), Sense::Equal, RowKind::ThermalDynamics);
    }
    p.add_row(LinExpr(-u.temperature).add(lay.temp[0], 1.0), Sense::Equal, RowKind::StatePin);

    for (int t = 0; t <= H; ++t) {
      const LinExpr e = energy(j, t);
      p.add_row(compact(plus(e, LinExpr(u.energy_max), -1.0)), Sense::LessEqual, RowKind::EnergyWindow);
      p.add_row(compact(plus(scaled(e, -1.0), LinExpr(u.energy_min))), Sense::LessEqual, RowKind::EnergyWindow);
      const LinExpr T = temperature(j, t);
      p.add_row(compact(plus(T, LinExpr(u.temp_max), -1.0)), Sense::LessEqual, RowKind::TemperatureBox);
      p.add_row(compact(plus(scaled(T, -1.0), LinExpr(u.temp_min))), Sense::LessEqual, RowKind::TemperatureBox);
    }
    p.add_embedded(2);
  }

  // |x_j[t] - mean_l x_l[t]| <= bound_j + xi_j[t-1] for states t = 1..H.
  template <class StateFn, class BoundFn>
  void balance(StateFn state, BoundFn bound, bool energy_kind) {
    const int k = static_cast<int>(in.units.size());
    auto& p = dp.problem;
    const RowKind kind = energy_kind ? RowKind::BalanceEnergy : RowKind::BalanceTemperature;
    for (int t = 1; t <= H; ++t) {
      LinExpr mean;
      if (in.aux_means) {
        const int m = p.add_variable(std::string(energy_kind ? "mean_e[" : "mean_t[") + std::to_string(t) + "]");
        dp.layout.aux.push_back(m);
        LinExpr def = LinExpr().add(m, -1.0);
        for (int l = 0; l < k; ++l) def = plus(def, state(l, t), 1.0 / k);
        p.add_row(compact(def), Sense::Equal, RowKind::Auxiliary, 0);
        mean = LinExpr().add(m, 1.0);
      } else {
        for (int l = 0; l < k; ++l) mean = plus(mean, state(l, t), 1.0 / k);
      }
      for (int j = 0; j < k; ++j) {
        const auto& lay = dp.layout.units[j];
        const int xi = energy_kind ? lay.xi_e[t - 1] : lay.xi_t[t - 1];
        const LinExpr dev = plus(state(j, t), mean, -1.0);
        LinExpr up = plus(dev, LinExpr(bound(j)), -1.0);
        up.add(xi, -1.0);
        LinExpr down = plus(scaled(dev, -1.0), LinExpr(bound(j)), -1.0);
        down.add(xi, -1.0);
        p.add_row(compact(up), Sense::LessEqual, kind, 1);
        p.add_row(compact(down), Sense::LessEqual, kind, 0);
      }
    }
  }

  void demand_rows() {
    auto& p = dp.problem;
    for (int t = 0; t < H; ++t) {
      LinExpr e(-in.demand[t]);
      for (const auto& lay : dp.layout.units) e.add(lay.ps[t], 1.0).add(lay.pl[t], -1.0);
      p.add_row(std::move(e), Sense::Equal, RowKind::Demand);
    }
  }

  DispatchProblem build() {
    validate(in);
    variables();
    for (int j = 0; j < static_cast<int>(in.units.size()); ++j) unit_rows(j);
    balance([this](int j, int t) { return square_voltage(j, t); },
            [this](int j) { return in.units[j].delta_e; }, true);
    balance([this](int j, int t) { return temperature(j, t); }, [this](int) { return in.delta_t; }, false);
    demand_rows();
    return std::move(dp);
  }
};

}  // namespace

DispatchProblem build_inter_cluster(const HorizonInput& input) { return Builder(input).build(); }

DispatchProblem build_intra_cluster(std::span<const CellView> cells,
                                    std::span<const std::size_t> members,
                                    std::span<const double> net_power, const IntraOptions& opts) {
  if (members.empty()) throw std::invalid_argument("build_intra_cluster: empty cluster");
  HorizonInput in;
  in.demand.assign(net_power.begin(), net_power.end());
  in.dt = opts.dt;
  in.t_env = opts.t_env;
  in.delta_t = opts.delta_t;
  in.lambda_e = opts.lambda_e;
  in.lambda_t = opts.lambda_t;
  in.aux_means = opts.aux_means;
  for (auto idx : members) {
    const std::size_t one[] = {idx};
    in.units.push_back(make_unit(aggregate(cells, one), opts.dq));
  }
  if (opts.cap_penalties) {
    const auto cap = tight_penalty_cap(in.units, in.horizon(), in.dt);
    in.lambda_e = std::min(in.lambda_e, cap.energy);
    in.lambda_t = std::min(in.lambda_t, cap.temperature);
  }
  return Builder(in).build();
}

std::vector<FirstStep> extract_first_step(const Solution& sol, const Layout& layout) {
  if (!sol.optimal())
    throw std::runtime_error(std::string("extract_first_step: solver status ") + to_string(sol.status));
  std::vector<FirstStep> out;
  out.reserve(layout.units.size());
  for (const auto& lay : layout.units) out.push_back({sol.x[lay.ps[0]], sol.x[lay.pl[0]]});
  return out;
}

TableCounts table_counts(const DispatchProblem& dp) {
  return {dp.problem.num_vars() - static_cast<int>(dp.layout.aux.size()), dp.problem.constraint_count()};
}

PenaltyCap tight_penalty_cap(std::span<const UnitSpec> units, int horizon, double dt, double margin) {
  PenaltyCap cap{kInf, kInf};
  for (const auto& u : units) {
    cap.temperature = std::min(cap.temperature, margin * u.thermal_capacitance / (2.0 * horizon * dt));
    cap.energy = std::min(cap.energy, margin * u.capacitance / (4.0 * horizon * dt));
  }
  return cap;
}

SlackSums first_step_slacks(const Solution& sol, const Layout& layout) {
  SlackSums s;
  for (const auto& lay : layout.units) {
    s.energy += sol.x[lay.xi_e[0]];
    s.temperature += sol.x[lay.xi_t[0]];
  }
  return s;
}

}  // namespace bess
