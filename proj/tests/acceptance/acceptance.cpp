// One PASS/FAIL line per acceptance criterion. Exits 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <numeric>
#include <optional>
#include <string>

#include "bess/io.hpp"
#include "bess/rng.hpp"

using namespace bess;

namespace {

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::printf("%s  %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string time_text(const std::optional<double>& t) { return t ? fmt("%.0f s", *t) : std::string("never"); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void progress(const char* what) {
  std::fprintf(stderr, "[acceptance] %s\n", what);
}

SimTrace timed_run(const SimConfig& cfg, const std::vector<double>& demand, const char* label) {
  const auto t0 = std::chrono::steady_clock::now();
  auto tr = run(cfg, demand);
  std::fprintf(stderr, "[acceptance] %s run: %.0f s wall\n", label, seconds_since(t0));
  return tr;
}

// ---------------------------------------------------------------- closed loop

void closed_loop_criteria(const std::vector<double>& demand) {
  SimConfig cfg;  // seeded 400-cell reference setup
  progress("uniform baseline");
  const auto base = baseline_uniform(cfg, demand);
  cfg.scheme = Scheme::Optimal;
  const auto opt = timed_run(cfg, demand, "scheme #3");
  cfg.scheme = Scheme::Equal;
  const auto eq = timed_run(cfg, demand, "scheme #1");
  cfg.scheme = Scheme::Resistance;
  const auto rw = timed_run(cfg, demand, "scheme #2");

  const double l_opt = opt.summary.cumulative_loss, l_base = base.summary.cumulative_loss;
  const double reduction = 100.0 * (l_base - l_opt) / l_base;
  report(reduction >= 3.0, "loss reduction >= 3.0% (scheme #3 vs uniform, 2400 s)",
         fmt("%.2f%% (%.0f J vs %.0f J)", reduction, l_opt, l_base));

  // Crossover: a prefix above the baseline inside the first 400 s, later below.
  std::optional<double> above, below;
  for (std::size_t t = 0; t < opt.steps.size(); ++t) {
    const double diff = opt.steps[t].cumulative_loss - base.steps[t].cumulative_loss;
    if (!above && opt.steps[t].time < 400.0 && diff > 0.0) above = opt.steps[t].time;
    if (above && !below && diff < 0.0) below = opt.steps[t].time;
  }
  const double final_gap = opt.steps.back().cumulative_loss - base.steps.back().cumulative_loss;
  report(above && below, "early crossover (above baseline before 400 s, then below)",
         fmt("above from %s, below from %s, final gap %+.0f J", time_text(above).c_str(), time_text(below).c_str(),
             final_gap));

  const auto s3 = opt.summary.soc_balance_time, s1 = eq.summary.soc_balance_time, s2 = rw.summary.soc_balance_time;
  report(s3 && *s3 <= 1200.0, "SoC balance <= 1200 s under scheme #3", time_text(s3));
  report(s1 && *s1 <= 1500.0, "SoC balance <= 1500 s under scheme #1", time_text(s1));
  report(s2 && *s2 <= 1500.0, "SoC balance <= 1500 s under scheme #2", time_text(s2));

  const auto t3 = opt.summary.temp_balance_time, t1 = eq.summary.temp_balance_time,
             t2 = rw.summary.temp_balance_time;
  const auto within = [](const std::optional<double>& t) { return t && *t <= 2000.0; };
  report(within(t3) && within(t1) && within(t2), "temperature balance <= 2000 s (schemes #1, #2, #3)",
         fmt("#1 %s, #2 %s, #3 %s", time_text(t1).c_str(), time_text(t2).c_str(), time_text(t3).c_str()));

  // A scheme that never balances counts as infinitely late.
  const double inf = INFINITY;
  report(s3 && s3.value_or(inf) <= s1.value_or(inf), "scheme #3 SoC balance time <= scheme #1",
         fmt("%s vs %s", time_text(s3).c_str(), time_text(s1).c_str()));

  const int k0 = opt.summary.initial_k, k1 = opt.summary.final_k;
  report(k0 >= 8 && k0 <= 20, "initial k in [8, 20]", fmt("%d (mean k %.2f)", k0, opt.summary.mean_k));
  report(k1 <= k0, "final k <= initial k", fmt("%d -> %d", k0, k1));

  std::printf("      info: scheme #3 fallback steps %d, max delivered deviation %.2e, mean solve %.4f s\n",
              opt.summary.fallbacks, opt.summary.max_delivered_deviation, opt.summary.mean_solver_time);
}

// ---------------------------------------------------------------- scaling

void scaling_criteria(const std::vector<double>& demand) {
  progress("computation scaling");
  BenchmarkSpec spec;
  spec.cell_counts = {50, 100, 400};
  spec.k_caps = {15};
  spec.schemes = {Scheme::Equal};
  spec.steps = 20;
  const auto rows = cmd_benchmark(spec, demand);
  const auto find = [&](int n, int cap) {
    for (const auto& r : rows)
      if (r.n == n && r.k_cap == cap) return r;
    throw std::logic_error("missing benchmark row");
  };
  const auto r50 = find(50, 15), r400 = find(400, 15);
  report(r50.reduction_pct >= 60.0, "time reduction >= 60% at n = 50 (k cap 15 vs cell level)",
         fmt("%.2f%% (%.4f s vs %.4f s)", r50.reduction_pct, r50.mean_time, find(50, 0).mean_time));
  report(r400.reduction_pct >= 90.0, "time reduction >= 90% at n = 400 (k cap 15 vs cell level)",
         fmt("%.2f%% (%.4f s vs %.4f s)", r400.reduction_pct, r400.mean_time, find(400, 0).mean_time));
  const double t100 = find(100, 15).mean_time, t400 = r400.mean_time;
  const double rel = std::abs(t400 - t100) / t100;
  report(rel < 0.20, "fixed-k time differs < 20% between n = 100 and n = 400",
         fmt("%.1f%% (%.4f s vs %.4f s)", 100.0 * rel, t100, t400));
}

// ---------------------------------------------------------------- oracle

void oracle_criteria() {
  progress("oracle equivalence");
  const auto t0 = std::chrono::steady_clock::now();
  int count = 0, bad = 0;
  double worst = 0.0;
  for (int n : {2, 3}) {
    for (std::uint64_t s = 0; s < 20; ++s) {
      const auto cfg = random_oracle_instance(n, 1000 + s);
      const auto oracle = brute_force_oracle(cfg);
      const auto sol = solve_cell_level_step(cfg);
      ++count;
      if (!oracle || !sol.optimal()) {
        ++bad;
        continue;
      }
      const double rel = std::abs(sol.objective - oracle->objective) / std::max(std::abs(oracle->objective), 1e-9);
      worst = std::max(worst, rel);
      if (rel > 0.02) ++bad;
    }
  }
  const double wall = seconds_since(t0);
  report(bad == 0 && count >= 40 && wall <= 60.0, "oracle equivalence within 2% (n = 2, 3; 20 instances each)",
         fmt("%d/%d outside, worst %.2e, %.1f s", bad, count, worst, wall));
}

// ---------------------------------------------------------------- problem sizes

void table_criteria() {
  bool ok = true;
  std::string detail;
  Rng rng(3);
  for (auto [H, k] : {std::pair{1, 1}, {10, 5}, {10, 15}}) {
    std::deque<CellParams> params;
    std::vector<CellView> views;
    for (int i = 0; i < 2 * k; ++i) {
      CellParams p;
      p.internal_resistance = rng.uniform(0.0313, 0.0413);
      params.push_back(p);
      views.push_back({&params.back(), {rng.uniform(0.7, 0.75), rng.uniform(301, 305)}});
    }
    HorizonInput in;
    for (int j = 0; j < k; ++j) {
      const std::size_t m[] = {static_cast<std::size_t>(2 * j), static_cast<std::size_t>(2 * j + 1)};
      in.units.push_back(make_unit(aggregate(views, m), 0.005));
    }
    in.demand.assign(H, 100.0);
    const auto c = table_counts(build_inter_cluster(in));
    const bool match = c.variables == 6 * H * k - k && c.constraints == 11 * H * k + 5 * k + H;
    ok = ok && match;
    detail += fmt("(H=%d,k=%d) %d/%d vars, %d/%d rows; ", H, k, c.variables, 6 * H * k - k, c.constraints,
                  11 * H * k + 5 * k + H);
  }
  detail.resize(detail.size() - 2);
  report(ok, "variable and constraint counts match the closed forms", detail);
}

// ---------------------------------------------------------------- properties

// Inter-cluster problems from the seeded 400-cell population, clustered at
// several k, demand windows from the reference profile, default bounds and
// capped penalties as in the closed loop.
void relaxation_criteria(const std::vector<double>& demand) {
  progress("relaxation tightness");
  SimConfig cfg;
  const auto pop = make_population(cfg.population, cfg.seed);
  const std::size_t n = pop.params.size();
  std::vector<CellView> views(n);
  std::vector<CellFeatures> feats(n);
  for (std::size_t i = 0; i < n; ++i) {
    views[i] = {&pop.params[i], pop.states[i]};
    feats[i] = {pop.states[i].soc, pop.states[i].temperature, pop.params[i].internal_resistance};
  }
  std::vector<Point> pts;
  for (const auto& f : normalize_features(feats)) pts.push_back(f.normalized);

  double worst_cone = 0.0, worst_row = 0.0, worst_abs = 0.0;
  int solved = 0, instances = 0;
  for (int trial = 0; trial < 24; ++trial) {
    const int k = 4 + 2 * (trial % 8);
    KMeansOptions ko;
    ko.seed = static_cast<std::uint64_t>(trial);
    const auto a = kmeans(pts, k, ko);
    HorizonInput in;
    in.aux_means = k > 8;
    for (int j = 0; j < k; ++j) {
      std::vector<std::size_t> m;
      for (std::size_t i = 0; i < n; ++i)
        if (a.labels[i] == j) m.push_back(i);
      in.units.push_back(make_unit(aggregate(views, m), cfg.cluster_dq));
    }
    const std::size_t offset = static_cast<std::size_t>(97 * trial) % (demand.size() - cfg.horizon);
    in.demand.assign(demand.begin() + offset, demand.begin() + offset + cfg.horizon);
    const auto cap = tight_penalty_cap(in.units, in.horizon(), in.dt);
    in.lambda_e = std::min(in.lambda_e, cap.energy);
    in.lambda_t = std::min(in.lambda_t, cap.temperature);
    const auto dp = build_inter_cluster(in);
    const auto sol = solve(dp.problem);
    ++instances;
    if (!sol.optimal()) continue;
    ++solved;
    for (int t = 0; t < in.horizon(); ++t) {
      double net = 0.0;
      for (int j = 0; j < k; ++j) {
        const auto& lay = dp.layout.units[j];
        const auto& u = in.units[j];
        const double e = t == 0 ? 0.0 : sol.x[lay.e[t]];
        const double ps = sol.x[lay.ps[t]], pl = sol.x[lay.pl[t]];
        // Cone minimum of P_l from P_l * 2 (E + E0) >= R C P_S^2. Relative
        // to the loss with a 1 W floor, as for the demand rows.
        const double pl_min = u.resistance * u.capacitance * ps * ps / (2.0 * (e + u.e0));
        worst_cone = std::max(worst_cone, std::abs(pl - pl_min) / std::max(1.0, pl_min));
        worst_abs = std::max(worst_abs, std::abs(pl - pl_min));
        net += ps - pl;
      }
      worst_row = std::max(worst_row, std::abs(net - in.demand[t]) / std::max(1.0, std::abs(in.demand[t])));
    }
  }
  report(solved == instances && worst_cone <= 1e-6, "loss relaxation tight at the optimum (<= 1e-6 relative)",
         fmt("worst %.2e (largest gap %.2e W) over %d/%d solved problems", worst_cone, worst_abs, solved, instances));
  report(solved == instances && worst_row <= 1e-6, "demand rows satisfied (<= 1e-6 relative)",
         fmt("worst %.2e", worst_row));
}

void cell_property_criteria() {
  SimConfig cfg;
  const auto pop = make_population(cfg.population, cfg.seed);
  Rng rng(17);

  double worst_charge = 0.0;
  for (std::size_t c = 0; c < pop.params.size(); ++c) {
    const auto& p = pop.params[c];
    CellState s = pop.states[c];
    double charge = 0.0;
    for (int k = 0; k < 200; ++k) {
      const double i = rng.uniform(-1.0, 1.0);
      charge += i * cfg.dt;
      s = electrical_step(s, p, i, cfg.dt).state;
    }
    const double moved = p.capacity * (s.soc - pop.states[c].soc);
    worst_charge = std::max(worst_charge, std::abs(moved + charge) / std::abs(charge));
  }
  report(worst_charge <= 1e-9, "charge conservation (<= 1e-9 relative)",
         fmt("worst %.2e over %zu cells", worst_charge, pop.params.size()));

  double worst_decay = 0.0;
  for (std::size_t c = 0; c < pop.params.size(); ++c) {
    const auto& p = pop.params[c];
    const double factor = 1.0 - cfg.dt / (p.mass * p.specific_heat * p.convective_resistance());
    CellState s = pop.states[c];
    for (int k = 0; k < 50; ++k) {
      const auto next = thermal_step(s, p, 0.0, cfg.t_env, cfg.dt);
      const double ratio = (next.temperature - cfg.t_env) / (s.temperature - cfg.t_env);
      worst_decay = std::max(worst_decay, std::abs(ratio - factor) / factor);
      s = next;
    }
  }
  report(worst_decay <= 1e-12, "zero-current thermal decay factor (<= 1e-12)", fmt("worst %.2e", worst_decay));

  // n identical cells against n times one cell.
  bool exact = true;
  double worst_ident = 0.0;
  for (int n : {1, 2, 3, 7, 16, 50}) {
    CellParams p;
    p.internal_resistance = 0.0357;
    const CellState st{0.72, 303.0};
    std::vector<CellView> views(n, CellView{&p, st});
    const auto m = aggregate(views);
    exact = exact && m.capacity == n * p.capacity && m.current_max == n * p.current_max &&
            m.current_min == n * p.current_min && m.temperature == st.temperature;
    const auto rel = [](double a, double b) { return std::abs(a - b) / std::abs(b); };
    worst_ident = std::max({worst_ident, rel(m.resistance, p.series_resistance() / n), rel(m.soc, st.soc),
                            rel(m.mixed_ocv, ocv(p.ocv, st.soc)), rel(m.mass, n * p.mass)});
  }
  report(exact && worst_ident <= 1e-14, "identical-cell aggregation identities",
         fmt("sums exact: %s, worst derived %.2e", exact ? "yes" : "no", worst_ident));
}

void dominance_criterion() {
  // Members share one SoC: with unequal OCVs equal power shares are not
  // equal currents and the ordering between schemes #1 and #2 can flip.
  Rng rng(31);
  int ordered = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 9;
    const double soc = rng.uniform(0.70, 0.75);
    std::deque<CellParams> params;
    std::vector<CellView> views;
    std::vector<std::size_t> members;
    for (int i = 0; i < n; ++i) {
      CellParams p;
      p.internal_resistance = rng.uniform(0.0313, 0.0413);
      params.push_back(p);
      views.push_back({&params.back(), {soc, rng.uniform(301.0, 305.0)}});
      members.push_back(static_cast<std::size_t>(i));
    }
    const double ps = rng.uniform(-0.5, 0.9) * n * 3.6 * 7.5 * 0.8;
    const auto loss = [&](const std::vector<double>& pb) {
      double l = 0.0;
      for (int j = 0; j < n; ++j) {
        const auto& p = *views[j].params;
        const double i = pb[j] / p.ocv(soc);
        l += p.series_resistance() * i * i;
      }
      return l;
    };
    const double l1 = loss(split_equal(ps, n));
    const double l2 = loss(split_resistance(ps, split_resistances(views, members, false)));
    OptimalSplitOptions o;
    o.intra.dq = 0.5;
    o.intra.delta_t = 50.0;
    o.intra.cap_penalties = true;
    const auto s3 = split_optimal(views, members, ps, l2, o);
    const double l3 = loss(s3.power);
    if (!s3.fallback && l2 <= l1 * (1 + 1e-12) && l3 <= l2 * (1 + 1e-5) + 1e-9) ++ordered;
    worst = std::max(worst, (l3 - l2) / std::max(l2, 1e-12));
  }
  report(ordered == 100, "split loss ordering #3 <= #2 <= #1 on 100 random clusters",
         fmt("%d/100 ordered, worst (#3 - #2)/#2 %+.2e", ordered, worst));
}

void determinism_criterion(const std::vector<double>& demand) {
  progress("determinism");
  SimConfig cfg;
  cfg.duration = 60.0;
  const auto a = trace_csv(run(cfg, demand));
  const auto b = trace_csv(run(cfg, demand));
  cfg.scheme = Scheme::Equal;
  const auto c = trace_csv(run(cfg, demand));
  const auto d = trace_csv(run(cfg, demand));
  report(a == b && c == d, "bit-identical traces across repeat runs (60 s, schemes #3 and #1)",
         fmt("%zu and %zu bytes, %s", a.size(), c.size(), a == b && c == d ? "identical" : "differ"));
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto demand = load_profile_csv(BESS_REFERENCE_PROFILE, 1.0).power;

  table_criteria();
  oracle_criteria();
  relaxation_criteria(demand);
  cell_property_criteria();
  dominance_criterion();
  determinism_criterion(demand);
  scaling_criteria(demand);
  closed_loop_criteria(demand);

  std::printf("%d criteria failed, %.0f s\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
