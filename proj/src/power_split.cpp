#include "bess/power_split.hpp"

#include <algorithm>
#include <stdexcept>

namespace bess {

const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::Equal: return "equal";
    case Scheme::Resistance: return "resistance";
    case Scheme::Optimal: return "optimal";
  }
  return "?";
}

Scheme parse_scheme(const std::string& text) {
  if (text == "equal" || text == "1") return Scheme::Equal;
  if (text == "resistance" || text == "2") return Scheme::Resistance;
  if (text == "optimal" || text == "3") return Scheme::Optimal;
  throw std::invalid_argument("unknown scheme '" + text + "'");
}

std::vector<double> split_equal(double p, std::size_t n) {
  if (n == 0) throw std::invalid_argument("split_equal: no cells");
  return std::vector<double>(n, p / static_cast<double>(n));
}

std::vector<double> split_resistance(double p, std::span<const double> resistances) {
  if (resistances.empty()) throw std::invalid_argument("split_resistance: no cells");
  double g = 0.0;
  for (double r : resistances) {
    if (!(r > 0)) throw std::invalid_argument("split_resistance: resistance must be positive");
    g += 1.0 / r;
  }
  std::vector<double> out;
  out.reserve(resistances.size());
  for (double r : resistances) out.push_back(p * (1.0 / r) / g);
  return out;
}

std::vector<double> split_resistances(std::span<const CellView> cells, std::span<const std::size_t> members,
                                      bool include_converter) {
  std::vector<double> r;
  r.reserve(members.size());
  for (auto m : members) {
    const auto& p = *cells[m].params;
    r.push_back(include_converter ? p.series_resistance() : p.internal_resistance);
  }
  return r;
}

OptimalSplit split_optimal(std::span<const CellView> cells, std::span<const std::size_t> members, double ps,
                           double pl, const OptimalSplitOptions& opts) {
  if (members.empty()) throw std::invalid_argument("split_optimal: empty cluster");
  OptimalSplit out;
  if (members.size() == 1) {
    out.power = {ps};
    out.loss = {pl};
    return out;
  }
  const double net[] = {ps - pl};
  const auto dp = build_intra_cluster(cells, members, net, opts.intra);
  const auto sol = solve(dp.problem, opts.solver);
  out.status = sol.status;
  if (sol.optimal()) {
    out.objective = sol.objective;
    for (const auto& f : extract_first_step(sol, dp.layout)) {
      out.power.push_back(f.ps);
      out.loss.push_back(f.pl);
    }
    return out;
  }
  out.fallback = true;
  out.power = split_resistance(ps, split_resistances(cells, members, opts.converter_in_fallback));
  out.loss.assign(members.size(), 0.0);
  return out;
}

CurrentCommand power_to_current(const CellParams& params, const CellState& state, double p_b) {
  const double u = params.ocv(state.soc);
  if (!(u > 0)) throw std::domain_error("power_to_current: open-circuit voltage must be positive");
  CurrentCommand c;
  c.current = p_b / u;
  if (c.current > params.current_max || c.current < params.current_min) {
    c.current = std::clamp(c.current, params.current_min, params.current_max);
    c.clamped = true;
  }
  return c;
}

}  // namespace bess
