#include "bess/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bess/cluster_model.hpp"
#include "bess/dispatch.hpp"
#include "bess/rng.hpp"

namespace bess {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("SimConfig: ") + what);
}

}  // namespace

Population make_population(const PopulationSpec& spec, std::uint64_t seed) {
  Population pop;
  if (!spec.cells.empty()) {
    for (const auto& [p, s] : spec.cells) {
      p.validate();
      pop.params.push_back(p);
      pop.states.push_back(s);
    }
    return pop;
  }
  if (spec.count < 1) throw std::invalid_argument("population: count must be at least 1");
  Rng rng(seed);
  for (int i = 0; i < spec.count; ++i) {
    CellParams p = spec.base;
    CellState s;
    s.soc = rng.uniform(spec.soc_lo, spec.soc_hi);
    s.temperature = rng.uniform(spec.temp_lo, spec.temp_hi);
    p.internal_resistance = rng.uniform(spec.resistance_lo, spec.resistance_hi);
    p.validate();
    pop.params.push_back(p);
    pop.states.push_back(s);
  }
  return pop;
}

int SimConfig::steps() const { return static_cast<int>(std::lround(duration / dt)); }

void SimConfig::validate() const {
  require(dt > 0, "dt must be positive");
  require(duration > 0, "duration must be positive");
  require(std::abs(duration / dt - std::round(duration / dt)) < 1e-9, "duration must be a multiple of dt");
  require(horizon >= 1, "horizon must be at least 1");
  require(cell_dq >= 0 && cell_dt >= 0 && cluster_dq >= 0 && cluster_dt >= 0, "bounds must be >= 0");
  require(lambda_cell >= 0 && lambda_cluster >= 0, "penalties must be >= 0");
  require(recluster_period >= 1, "recluster_period must be at least 1");
  require(k_max >= 1, "k_max must be at least 1");
  require(gap_references >= 1, "gap_references must be at least 1");
  require(fixed_k >= 0, "fixed_k must be >= 0");
  require(bound_floor > 0 && bound_floor <= 1, "bound_floor must be in (0, 1]");
  require(snapshot_every >= 0, "snapshot_every must be >= 0");
  require(population.cells.empty() ? population.count >= 1 : true, "population count must be at least 1");
}

AdaptiveBounds update_bounds(const AdaptiveBounds& b, const SlackSums& slacks, std::span<const Deviation> devs,
                             double floor) {
  double dq = 0.0, dt = 0.0;
  for (const auto& d : devs) {
    if (d.soc < 0 || d.temperature < 0) throw std::invalid_argument("update_bounds: negative deviation");
    dq = std::max(dq, d.soc);
    dt = std::max(dt, d.temperature);
  }
  AdaptiveBounds out = b;
  if (slacks.energy <= 1e-9) out.dq = std::max(floor * b.dq0, b.dq - 0.5 * dq);
  if (slacks.temperature <= 1e-9) out.dt = std::max(floor * b.dt0, b.dt - 0.5 * dt);
  return out;
}

AdaptiveBounds relax_bounds(const AdaptiveBounds& b, double soc_spread, double temp_spread, double cell_dq,
                            double cell_dt) {
  AdaptiveBounds out = b;
  if (soc_spread <= cell_dq && temp_spread <= cell_dt) {
    out.dq = std::min(b.dq0, b.dq + (cell_dq - soc_spread));
    out.dt = std::min(b.dt0, b.dt + (cell_dt - temp_spread));
  }
  return out;
}

double demand_at(std::span<const double> profile, int t) {
  if (profile.empty()) throw std::invalid_argument("demand_at: empty profile");
  return profile[std::min<std::size_t>(t, profile.size() - 1)];
}

std::optional<double> current_for_output(double u, double r, double p) {
  const double disc = u * u - 4.0 * r * p;
  if (disc < 0) return std::nullopt;
  // 2p / (u + sqrt(disc)) avoids cancellation near p = 0.
  return 2.0 * p / (u + std::sqrt(disc));
}

std::optional<double> balance_time(const std::vector<StepMetrics>& steps, bool soc) {
  const std::size_t n = steps.size();
  std::vector<std::size_t> true_after(n + 1, 0);
  for (std::size_t i = n; i-- > 0;) {
    const bool flag = soc ? steps[i].soc_balanced : steps[i].temp_balanced;
    true_after[i] = true_after[i + 1] + (flag ? 1 : 0);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const bool flag = soc ? steps[i].soc_balanced : steps[i].temp_balanced;
    if (!flag) continue;
    const std::size_t remaining = n - i;
    if (static_cast<double>(true_after[i]) >= 0.95 * static_cast<double>(remaining)) return steps[i].time;
  }
  return std::nullopt;
}

namespace {

struct Plant {
  std::vector<CellParams> params;
  std::vector<CellState> states;

  std::vector<CellView> views() const {
    std::vector<CellView> v(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) v[i] = {&params[i], states[i]};
    return v;
  }

  // Advances every cell with the given currents and fills the plant part
  // of the metrics.
  void advance(const std::vector<double>& currents, double dt, double t_env, StepMetrics& m) {
    m.loss = 0.0;
    m.delivered = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& p = params[i];
      const auto pb = module_output_power(p, states[i], currents[i]);
      m.loss += pb.loss;
      m.delivered += pb.output;
      const auto el = electrical_step(states[i], p, currents[i], dt);
      const auto th = thermal_step(states[i], p, currents[i], t_env, dt);
      if (el.saturated) ++m.saturated;
      states[i] = {el.state.soc, th.temperature};
    }
  }
};

void population_stats(const Plant& plant, double cell_dq, double cell_dt, StepMetrics& m, double* soc_spread,
                      double* temp_spread) {
  const std::size_t n = plant.states.size();
  double qs = 0.0, ts = 0.0;
  m.soc_min = m.temp_min = std::numeric_limits<double>::infinity();
  m.soc_max = m.temp_max = -std::numeric_limits<double>::infinity();
  for (const auto& s : plant.states) {
    qs += s.soc;
    ts += s.temperature;
    m.soc_min = std::min(m.soc_min, s.soc);
    m.soc_max = std::max(m.soc_max, s.soc);
    m.temp_min = std::min(m.temp_min, s.temperature);
    m.temp_max = std::max(m.temp_max, s.temperature);
  }
  m.soc_mean = qs / static_cast<double>(n);
  m.temp_mean = ts / static_cast<double>(n);
  const double dq = std::max(m.soc_max - m.soc_mean, m.soc_mean - m.soc_min);
  const double dT = std::max(m.temp_max - m.temp_mean, m.temp_mean - m.temp_min);
  m.soc_balanced = dq <= cell_dq;
  m.temp_balanced = dT <= cell_dt;
  if (soc_spread) *soc_spread = dq;
  if (temp_spread) *temp_spread = dT;
}

void finish(SimTrace& trace) {
  auto& s = trace.summary;
  const auto& steps = trace.steps;
  if (steps.empty()) return;
  s.cumulative_loss = steps.back().cumulative_loss;
  s.soc_balance_time = balance_time(steps, true);
  s.temp_balance_time = balance_time(steps, false);
  double ksum = 0.0;
  for (const auto& m : steps) {
    s.total_solver_time += m.solver_time;
    s.max_solver_time = std::max(s.max_solver_time, m.solver_time);
    ksum += m.k;
    s.fallbacks += m.fallback ? 1 : 0;
    if (std::abs(m.demand) >= 1.0)
      s.max_delivered_deviation =
          std::max(s.max_delivered_deviation, std::abs(m.delivered - m.demand) / std::abs(m.demand));
  }
  s.mean_solver_time = s.total_solver_time / static_cast<double>(steps.size());
  s.mean_k = ksum / static_cast<double>(steps.size());
  s.initial_k = steps.front().k;
  s.final_k = steps.back().k;
}

void snapshot(SimTrace& trace, const SimConfig& cfg, int t, const Plant& plant) {
  if (cfg.snapshot_every > 0 && t % cfg.snapshot_every == 0)
    trace.snapshots.push_back({t * cfg.dt, plant.states});
}

std::vector<CellFeatures> features_of(const Plant& plant) {
  std::vector<CellFeatures> f(plant.states.size());
  for (std::size_t i = 0; i < f.size(); ++i)
    f[i] = {plant.states[i].soc, plant.states[i].temperature, plant.params[i].internal_resistance};
  return f;
}

// Clustering state carried between steps.
struct Clusterer {
  const SimConfig& cfg;
  ClusterAssignment assignment;
  FeatureScaler scaler;
  bool have = false;

  // Returns true when the partition changed.
  bool update(const std::vector<CellFeatures>& features, int step) {
    const int n = static_cast<int>(features.size());
    if (cfg.cell_level) {
      if (have) return false;
      assignment.k = n;
      assignment.labels.resize(n);
      for (int i = 0; i < n; ++i) assignment.labels[i] = i;
      have = true;
      return true;
    }
    const auto next_scaler = FeatureScaler::fit(features);
    std::vector<Point> points(n);
    for (int i = 0; i < n; ++i) points[i] = next_scaler.normalize(features[i]);

    const std::uint64_t step_seed = cfg.seed * 6364136223846793005ULL + static_cast<std::uint64_t>(step);
    int k = 1;
    if (cfg.fixed_k > 0) {
      k = std::min(cfg.fixed_k, n);
    } else {
      GapOptions g;
      g.k_max = cfg.k_max;
      g.references = cfg.gap_references;
      g.seed = step_seed;
      k = select_k_gap(points, g);
    }
    KMeansOptions km;
    km.seed = step_seed ^ 0x9e3779b97f4a7c15ULL;
    if (have) {
      std::vector<Point> init;
      for (const auto& c : assignment.centroids) init.push_back(next_scaler.normalize(scaler.denormalize(c)));
      km.init = std::move(init);
    }
    auto next = kmeans(points, k, km);
    const bool changed = !have || next.labels != assignment.labels;
    assignment = std::move(next);
    scaler = next_scaler;
    have = true;
    return changed;
  }
};

std::vector<double> horizon_demand(std::span<const double> profile, int t, int H) {
  std::vector<double> d(H);
  for (int h = 0; h < H; ++h) d[h] = demand_at(profile, t + h);
  return d;
}

void check_profile(const SimConfig& cfg, std::span<const double> profile) {
  if (static_cast<int>(profile.size()) < cfg.steps())
    throw std::invalid_argument("profile shorter than the simulated duration");
}

}  // namespace

SimTrace run(const SimConfig& cfg, std::span<const double> profile) {
  cfg.validate();
  check_profile(cfg, profile);
  const auto pop = make_population(cfg.population, cfg.seed);
  Plant plant{pop.params, pop.states};
  const int n = static_cast<int>(plant.params.size());

  SimTrace trace;
  Clusterer clusterer{cfg, {}, {}, false};
  AdaptiveBounds bounds{cfg.cluster_dq, cfg.cluster_dt, cfg.cluster_dq, cfg.cluster_dt};
  std::optional<std::vector<FirstStep>> shifted;  // t = 1 slice of the last plan
  double cumulative = 0.0;

  OptimalSplitOptions split_opts;
  split_opts.intra.dq = cfg.cell_dq;
  split_opts.intra.delta_t = cfg.cell_dt;
  split_opts.intra.lambda_e = cfg.lambda_cell;
  split_opts.intra.lambda_t = cfg.lambda_cell;
  split_opts.intra.dt = cfg.dt;
  split_opts.intra.t_env = cfg.t_env;
  split_opts.intra.cap_penalties = cfg.cap_penalties;
  split_opts.solver = cfg.solver;
  split_opts.converter_in_fallback = cfg.split_with_converter;

  for (int t = 0; t < cfg.steps(); ++t) {
    snapshot(trace, cfg, t, plant);
    StepMetrics m;
    m.time = (t + 1) * cfg.dt;
    m.demand = demand_at(profile, t);

    // Clustering.
    const auto features = features_of(plant);
    bool changed = false;
    if (t % cfg.recluster_period == 0) {
      const auto t0 = Clock::now();
      changed = clusterer.update(features, t);
      m.cluster_time = seconds_since(t0);
    }
    const auto& assignment = clusterer.assignment;
    const int k = assignment.k;
    m.k = k;
    std::vector<std::vector<std::size_t>> members;
    if (cfg.cell_level) {
      members.resize(n);
      for (int i = 0; i < n; ++i) members[i] = {static_cast<std::size_t>(i)};
    } else {
      members = assignment.members();
    }

    // Aggregation and inter-cluster dispatch.
    const auto views = plant.views();
    std::vector<ClusterModel> clusters;
    clusters.reserve(k);
    for (const auto& g : members) clusters.push_back(aggregate(views, g));

    HorizonInput in;
    for (const auto& c : clusters) in.units.push_back(make_unit(c, bounds.dq));
    in.demand = horizon_demand(profile, t, cfg.horizon);
    in.dt = cfg.dt;
    in.t_env = cfg.t_env;
    in.delta_t = bounds.dt;
    in.lambda_e = in.lambda_t = cfg.lambda_cluster;
    if (cfg.cap_penalties) {
      const auto cap = tight_penalty_cap(in.units, in.horizon(), in.dt);
      in.lambda_e = std::min(in.lambda_e, cap.energy);
      in.lambda_t = std::min(in.lambda_t, cap.temperature);
    }
    in.aux_means = k > 8;
    in.exact_current_limits = cfg.exact_current_limits;

    const auto t_solve = Clock::now();
    const auto dp = build_inter_cluster(in);
    const auto sol = solve(dp.problem, cfg.solver);
    m.solver_time = seconds_since(t_solve);
    m.status = to_string(sol.status);

    std::vector<FirstStep> plan;
    if (sol.optimal()) {
      plan = extract_first_step(sol, dp.layout);
      const auto slacks = first_step_slacks(sol, dp.layout);
      m.slack_e = slacks.energy;
      m.slack_t = slacks.temperature;
      if (cfg.horizon > 1) {
        std::vector<FirstStep> next;
        for (const auto& lay : dp.layout.units) next.push_back({sol.x[lay.ps[1]], sol.x[lay.pl[1]]});
        shifted = std::move(next);
      } else {
        shifted.reset();
      }
      if (cfg.adaptive_bounds && !cfg.cell_level)
        bounds = update_bounds(bounds, slacks, max_deviation(assignment, features), cfg.bound_floor);
    } else {
      m.fallback = true;
      if (shifted && !changed && shifted->size() == clusters.size()) {
        plan = *shifted;
      } else {
        double q = 0.0;
        for (const auto& c : clusters) q += c.capacity;
        for (const auto& c : clusters) plan.push_back({m.demand * c.capacity / q, 0.0});
      }
      shifted.reset();
    }
    for (const auto& f : plan) m.planned_loss += f.pl;

    // Split and current commands.
    std::vector<double> currents(n, 0.0);
    for (int j = 0; j < k; ++j) {
      const auto& g = members[j];
      std::vector<double> pb;
      switch (cfg.scheme) {
        case Scheme::Equal:
          pb = split_equal(plan[j].ps, g.size());
          break;
        case Scheme::Resistance:
          pb = split_resistance(plan[j].ps, split_resistances(views, g, cfg.split_with_converter));
          break;
        case Scheme::Optimal: {
          const auto t0 = Clock::now();
          auto s = split_optimal(views, g, plan[j].ps, plan[j].pl, split_opts);
          m.solver_time += seconds_since(t0);
          m.fallback = m.fallback || s.fallback;
          pb = std::move(s.power);
          break;
        }
      }
      for (std::size_t a = 0; a < g.size(); ++a) {
        const auto cmd = power_to_current(plant.params[g[a]], plant.states[g[a]], pb[a]);
        currents[g[a]] = cmd.current;
        m.clamped += cmd.clamped ? 1 : 0;
      }
    }

    plant.advance(currents, cfg.dt, cfg.t_env, m);
    cumulative += m.loss * cfg.dt;
    m.cumulative_loss = cumulative;
    double soc_spread = 0.0, temp_spread = 0.0;
    population_stats(plant, cfg.cell_dq, cfg.cell_dt, m, &soc_spread, &temp_spread);
    if (cfg.adaptive_bounds && !cfg.cell_level)
      bounds = relax_bounds(bounds, soc_spread, temp_spread, cfg.cell_dq, cfg.cell_dt);
    m.bound_dq = bounds.dq;
    m.bound_dt = bounds.dt;
    trace.steps.push_back(std::move(m));
  }
  snapshot(trace, cfg, cfg.steps(), plant);
  finish(trace);
  return trace;
}

SimTrace baseline_uniform(const SimConfig& cfg, std::span<const double> profile) {
  cfg.validate();
  check_profile(cfg, profile);
  const auto pop = make_population(cfg.population, cfg.seed);
  Plant plant{pop.params, pop.states};
  const std::size_t n = plant.params.size();
  SimTrace trace;
  double cumulative = 0.0;
  for (int t = 0; t < cfg.steps(); ++t) {
    snapshot(trace, cfg, t, plant);
    StepMetrics m;
    m.time = (t + 1) * cfg.dt;
    m.demand = demand_at(profile, t);
    m.status = "none";
    m.bound_dq = cfg.cluster_dq;
    m.bound_dt = cfg.cluster_dt;
    const double share = m.demand / static_cast<double>(n);
    std::vector<double> currents(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& p = plant.params[i];
      const double u = p.ocv(plant.states[i].soc);
      const double r = p.series_resistance();
      // Past the deliverable maximum the cell runs at its peak-power current.
      double c = current_for_output(u, r, share).value_or(u / (2.0 * r));
      if (c > p.current_max || c < p.current_min) {
        c = std::clamp(c, p.current_min, p.current_max);
        ++m.clamped;
      }
      currents[i] = c;
    }
    plant.advance(currents, cfg.dt, cfg.t_env, m);
    cumulative += m.loss * cfg.dt;
    m.cumulative_loss = cumulative;
    population_stats(plant, cfg.cell_dq, cfg.cell_dt, m, nullptr, nullptr);
    trace.steps.push_back(std::move(m));
  }
  snapshot(trace, cfg, cfg.steps(), plant);
  finish(trace);
  return trace;
}

SimTrace baseline_cell_level(const SimConfig& config, std::span<const double> profile) {
  SimConfig cfg = config;
  cfg.cell_level = true;
  return run(cfg, profile);
}

namespace {

struct OracleCell {
  double u0, r, beta, alpha, cap, e_min, e_max, t0, g, rconv, t_min, t_max, i_min, i_max, delta_e;
};

OracleCell oracle_cell(const CellParams& p, const CellState& s, double dq, double dt) {
  const auto& seg = p.ocv.segment_at(s.soc);
  OracleCell c{};
  c.u0 = seg.alpha + seg.beta * s.soc;
  c.r = p.internal_resistance + p.converter_resistance;
  c.alpha = seg.alpha;
  c.beta = seg.beta;
  c.cap = p.capacity / seg.beta;
  const double v_lo = seg.alpha + seg.beta * p.soc_min, v_hi = seg.alpha + seg.beta * p.soc_max;
  c.e_min = 0.5 * c.cap * (v_lo * v_lo - c.u0 * c.u0);
  c.e_max = 0.5 * c.cap * (v_hi * v_hi - c.u0 * c.u0);
  c.t0 = s.temperature;
  c.g = dt / (p.mass * p.specific_heat);
  c.rconv = 1.0 / (p.heat_transfer * p.surface_area);
  c.t_min = p.temp_min;
  c.t_max = p.temp_max;
  c.i_min = p.current_min;
  c.i_max = p.current_max;
  const double a = seg.alpha + seg.beta * dq;
  c.delta_e = a * a - seg.alpha * seg.alpha;
  return c;
}

}  // namespace

std::optional<OracleResult> brute_force_oracle(const OracleConfig& cfg) {
  const std::size_t n = cfg.params.size();
  if (n < 1 || n > 4 || cfg.states.size() != n) throw std::invalid_argument("brute_force_oracle: need 1..4 cells");
  if (cfg.grid < 51) throw std::invalid_argument("brute_force_oracle: grid must have at least 51 points");
  std::vector<OracleCell> cells;
  for (std::size_t j = 0; j < n; ++j) cells.push_back(oracle_cell(cfg.params[j], cfg.states[j], cfg.dq, cfg.dt));

  double lambda_e = cfg.lambda_e, lambda_t = cfg.lambda_t;
  if (cfg.cap_penalties)
    for (std::size_t j = 0; j < n; ++j) {
      lambda_e = std::min(lambda_e, 0.5 * cells[j].cap / (4.0 * cfg.dt));
      lambda_t = std::min(lambda_t, 0.5 * cfg.dt / (2.0 * cells[j].g * cfg.dt));
    }

  std::optional<OracleResult> best;
  std::vector<double> i(n);
  std::vector<std::size_t> idx(n - 1, 0);
  const auto evaluate = [&]() -> std::optional<double> {
    double rest = cfg.demand;
    for (std::size_t j = 0; j + 1 < n; ++j) rest -= cells[j].u0 * i[j] - cells[j].r * i[j] * i[j];
    const auto& last = cells[n - 1];
    const auto root = current_for_output(last.u0, last.r, rest);
    if (!root) return std::nullopt;
    i[n - 1] = *root;
    double obj = 0.0;
    std::vector<double> x(n), T(n);
    for (std::size_t j = 0; j < n; ++j) {
      const auto& c = cells[j];
      if (i[j] < c.i_min || i[j] > c.i_max) return std::nullopt;
      const double pl = c.r * i[j] * i[j];
      const double e = -cfg.dt * c.u0 * i[j];
      if (e < c.e_min || e > c.e_max) return std::nullopt;
      T[j] = c.t0 + c.g * (pl - (c.t0 - cfg.t_env) / c.rconv);
      if (T[j] < c.t_min || T[j] > c.t_max) return std::nullopt;
      x[j] = c.u0 * c.u0 + 2.0 * e / c.cap;
      obj += pl;
    }
    double xm = 0.0, tm = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      xm += x[j] / static_cast<double>(n);
      tm += T[j] / static_cast<double>(n);
    }
    for (std::size_t j = 0; j < n; ++j) {
      obj += lambda_e * std::max(0.0, std::abs(x[j] - xm) - cells[j].delta_e);
      obj += lambda_t * std::max(0.0, std::abs(T[j] - tm) - cfg.delta_t);
    }
    return obj;
  };

  while (true) {
    for (std::size_t j = 0; j + 1 < n; ++j)
      i[j] = cells[j].i_min + (cells[j].i_max - cells[j].i_min) * static_cast<double>(idx[j]) / (cfg.grid - 1);
    if (const auto v = evaluate(); v && (!best || *v < best->objective)) best = OracleResult{*v, i};
    std::size_t a = 0;
    while (a < idx.size() && ++idx[a] == static_cast<std::size_t>(cfg.grid)) idx[a++] = 0;
    if (a == idx.size()) break;
  }
  return best;
}

OracleConfig random_oracle_instance(int n, std::uint64_t seed) {
  require(n >= 1, "random_oracle_instance: n must be >= 1");
  Rng rng(seed);
  OracleConfig cfg;
  double reach = 0.0;
  // Small spreads leave the balancing rows slack so loss dominates; large
  // ones make the penalties bite.
  const double spread = rng.uniform() < 0.5 ? rng.uniform(0.0, 0.1) : rng.uniform(0.1, 1.0);
  for (int j = 0; j < n; ++j) {
    CellParams p;
    p.internal_resistance = rng.uniform(31.3e-3, 61.3e-3);
    CellState s;
    s.soc = 0.6 + spread * rng.uniform(-0.3, 0.3);
    s.temperature = 302.0 + spread * rng.uniform(-3.0, 3.0);
    reach += p.ocv(s.soc) * p.current_max;
    cfg.params.push_back(p);
    cfg.states.push_back(s);
  }
  cfg.demand = rng.uniform(-0.6, 0.9) * 0.8 * reach;
  return cfg;
}

Solution solve_cell_level_step(const OracleConfig& cfg, const SolverOptions& opts) {
  std::vector<CellView> views;
  for (std::size_t j = 0; j < cfg.params.size(); ++j) views.push_back({&cfg.params[j], cfg.states[j]});
  HorizonInput in;
  for (std::size_t j = 0; j < views.size(); ++j) {
    const std::size_t one[] = {j};
    in.units.push_back(make_unit(aggregate(views, one), cfg.dq));
  }
  in.demand = {cfg.demand};
  in.dt = cfg.dt;
  in.t_env = cfg.t_env;
  in.delta_t = cfg.delta_t;
  in.lambda_e = cfg.lambda_e;
  in.lambda_t = cfg.lambda_t;
  if (cfg.cap_penalties) {
    const auto cap = tight_penalty_cap(in.units, 1, cfg.dt);
    in.lambda_e = std::min(in.lambda_e, cap.energy);
    in.lambda_t = std::min(in.lambda_t, cap.temperature);
  }
  return solve(build_inter_cluster(in).problem, opts);
}

}  // namespace bess
