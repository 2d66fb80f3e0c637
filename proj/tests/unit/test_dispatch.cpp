#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bess/dispatch.hpp"
#include "bess/rng.hpp"

using namespace bess;

namespace {

struct Pack {
  std::vector<CellParams> params;
  std::vector<CellView> views;

  void add(double soc, double temp, double r, int copies = 1) {
    for (int i = 0; i < copies; ++i) {
      CellParams p;
      p.internal_resistance = r;
      params.push_back(p);
      views.push_back({nullptr, {soc, temp}});
    }
  }
  void bind() {
    for (std::size_t i = 0; i < views.size(); ++i) views[i].params = &params[i];
  }
  UnitSpec unit(std::vector<std::size_t> members, double dq = 0.005) {
    bind();
    return make_unit(aggregate(views, members), dq);
  }
};

HorizonInput input_with(std::vector<UnitSpec> units, std::vector<double> demand) {
  HorizonInput in;
  in.units = std::move(units);
  in.demand = std::move(demand);
  return in;
}

}  // namespace

TEST_CASE("table counts follow the closed forms") {
  for (auto [H, k] : {std::pair{1, 1}, {10, 5}, {10, 15}}) {
    Pack pack;
    Rng rng(11);
    for (int j = 0; j < k; ++j) pack.add(rng.uniform(0.7, 0.75), rng.uniform(301, 305), rng.uniform(0.0313, 0.0413), 3);
    std::vector<UnitSpec> units;
    for (int j = 0; j < k; ++j) {
      const std::size_t b = 3 * j;
      units.push_back(pack.unit({b, b + 1, b + 2}));
    }
    const auto dp = build_inter_cluster(input_with(units, std::vector<double>(H, 100.0)));
    const auto counts = table_counts(dp);
    CHECK(counts.variables == 6 * H * k - k);
    CHECK(counts.constraints == 11 * H * k + 5 * k + H);
  }
}

TEST_CASE("single unit single step has five variables") {
  Pack pack;
  pack.add(0.72, 303, 0.035);
  const auto dp = build_inter_cluster(input_with({pack.unit({0})}, {10.0}));
  CHECK(table_counts(dp).variables == 5);
}

TEST_CASE("identical clusters split evenly") {
  Pack pack;
  pack.add(0.72, 303, 0.035, 10);
  const auto a = pack.unit({0, 1, 2, 3, 4});
  const auto b = pack.unit({5, 6, 7, 8, 9});
  const auto dp = build_inter_cluster(input_with({a, b}, std::vector<double>(10, 100.0)));
  const auto sol = solve(dp.problem);
  REQUIRE(sol.optimal());
  const auto first = extract_first_step(sol, dp.layout);
  CHECK(first[0].ps == doctest::Approx(first[1].ps).epsilon(1e-6));
  CHECK(first[0].pl == doctest::Approx(first[1].pl).epsilon(1e-5));
  CHECK(first[0].ps - first[0].pl + first[1].ps - first[1].pl == doctest::Approx(100.0).epsilon(1e-8));
}

TEST_CASE("zero demand with balanced states is idle") {
  Pack pack;
  pack.add(0.72, 298, 0.035, 4);
  const auto dp = build_inter_cluster(input_with({pack.unit({0, 1}), pack.unit({2, 3})}, std::vector<double>(5, 0.0)));
  const auto sol = solve(dp.problem);
  REQUIRE(sol.optimal());
  CHECK(std::abs(sol.objective) < 1e-6);
  for (const auto& f : extract_first_step(sol, dp.layout)) {
    CHECK(std::abs(f.ps) < 1e-5);
    CHECK(std::abs(f.pl) < 1e-6);
  }
}

TEST_CASE("single unit tracks demand") {
  Pack pack;
  pack.add(0.72, 303, 0.035, 4);
  const auto dp = build_inter_cluster(input_with({pack.unit({0, 1, 2, 3})}, {50.0, 60.0, -20.0}));
  const auto sol = solve(dp.problem);
  REQUIRE(sol.optimal());
  const auto f = extract_first_step(sol, dp.layout)[0];
  CHECK(f.ps - f.pl == doctest::Approx(50.0).epsilon(1e-8));
}

namespace {

double cone_residual(const Solution& sol, const DispatchProblem& dp, const std::vector<UnitSpec>& units, int j, int t) {
  const auto& lay = dp.layout.units[j];
  const auto& u = units[j];
  const double e = t == 0 ? 0.0 : sol.x[lay.e[t]];
  const double ps = sol.x[lay.ps[t]], pl = sol.x[lay.pl[t]];
  const double rhs = u.resistance * u.capacitance * ps * ps;
  return (pl * 2.0 * (e + u.e0) - rhs) / std::max(1.0, rhs);
}

}  // namespace

TEST_CASE("loss relaxation is tight and demand rows hold") {
  // Loose balancing bounds: no slack is active, so only the loss term pulls
  // on P_l.
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    Pack pack;
    const int k = 2 + static_cast<int>(rng.index(4));
    for (int j = 0; j < k; ++j) pack.add(rng.uniform(0.7, 0.75), rng.uniform(301, 305), rng.uniform(0.0313, 0.0413), 4);
    std::vector<UnitSpec> units;
    for (int j = 0; j < k; ++j) {
      const std::size_t b = 4 * j;
      units.push_back(pack.unit({b, b + 1, b + 2, b + 3}, 0.5));
    }
    std::vector<double> demand(10);
    for (auto& d : demand) d = rng.uniform(-30.0 * k, 60.0 * k);
    auto in = input_with(units, demand);
    in.delta_t = 50.0;
    const auto dp = build_inter_cluster(in);
    const auto sol = solve(dp.problem);
    REQUIRE(sol.optimal());
    for (int t = 0; t < 10; ++t) {
      double net = 0.0;
      for (int j = 0; j < k; ++j) {
        CHECK(cone_residual(sol, dp, units, j, t) <= 1e-6);
        net += sol.x[dp.layout.units[j].ps[t]] - sol.x[dp.layout.units[j].pl[t]];
      }
      CHECK(std::abs(net - demand[t]) <= 1e-6 * std::max(1.0, std::abs(demand[t])));
    }
  }
}

TEST_CASE("active temperature slack can inflate planned loss") {
  // A small cold cluster next to a warm one: one extra watt of planned loss
  // warms it by dt/(m C_th) ~ 1/160 K, worth lambda_t/160 > 1 in the
  // objective. The optimum then sits strictly inside the loss cone.
  Pack pack;
  pack.add(0.72, 301, 0.035, 4);
  pack.add(0.72, 305, 0.035, 4);
  const std::vector<UnitSpec> units = {pack.unit({0, 1, 2, 3}), pack.unit({4, 5, 6, 7})};
  const auto dp = build_inter_cluster(input_with(units, std::vector<double>(5, 20.0)));
  const auto sol = solve(dp.problem);
  REQUIRE(sol.optimal());
  CHECK(cone_residual(sol, dp, units, 0, 0) > 1e-3);
}

TEST_CASE("brute force grid agrees with the conic solve") {
  // k = 2, H = 1. The grid has 201 points per axis and is refined three
  // times around the best point. Slacks are evaluated exactly.
  Rng rng(9);
  for (int trial = 0; trial < 6; ++trial) {
    Pack pack;
    pack.add(rng.uniform(0.70, 0.75), rng.uniform(301, 305), rng.uniform(0.0313, 0.0413), 3);
    pack.add(rng.uniform(0.70, 0.75), rng.uniform(301, 305), rng.uniform(0.0313, 0.0413), 3);
    const auto a = pack.unit({0, 1, 2}), b = pack.unit({3, 4, 5});
    const double demand = rng.uniform(-80.0, 120.0);
    auto in = input_with({a, b}, {demand});
    const auto dp = build_inter_cluster(in);
    const auto sol = solve(dp.problem);
    REQUIRE(sol.optimal());

    const UnitSpec* us[2] = {&a, &b};
    auto min_loss = [](const UnitSpec& u, double ps) { return u.resistance * u.capacitance * ps * ps / (2.0 * u.e0); };
    auto evaluate = [&](const double ps[2], const double pl[2]) {
      double x[2], T[2], total = pl[0] + pl[1];
      for (int j = 0; j < 2; ++j) {
        const auto& u = *us[j];
        x[j] = u.u0 * u.u0 + 2.0 / u.capacitance * (-in.dt * ps[j]);
        const double g = in.dt / u.thermal_capacitance;
        T[j] = u.temperature + g * (pl[j] - (u.temperature - in.t_env) / u.convective_resistance);
      }
      const double xm = 0.5 * (x[0] + x[1]), tm = 0.5 * (T[0] + T[1]);
      for (int j = 0; j < 2; ++j) {
        total += in.lambda_e * std::max(0.0, std::abs(x[j] - xm) - us[j]->delta_e);
        total += in.lambda_t * std::max(0.0, std::abs(T[j] - tm) - in.delta_t);
      }
      return total;
    };
    // Grid over P_S of the first unit and the planned loss beyond the cone
    // minimum (burn >= 0). P_S of the second unit then follows from the
    // demand row; the burn is split between the units by ternary search,
    // which is exact since the objective is convex in the split.
    auto at = [&](double p1, double burn) {
      const double c = b.resistance * b.capacitance / (2.0 * b.e0);
      const double rest = demand + burn - (p1 - min_loss(a, p1));
      const double disc = 1.0 - 4.0 * c * rest;
      if (disc < 0) return kInf;
      const double p2 = (1.0 - std::sqrt(disc)) / (2.0 * c);
      if (p2 < b.u0 * b.current_min || p2 > b.u0 * b.current_max) return kInf;
      const double ps[2] = {p1, p2};
      const double m0 = min_loss(a, p1), m1 = min_loss(b, p2);
      auto g = [&](double f) {
        const double pl[2] = {m0 + f * burn, m1 + (1 - f) * burn};
        return evaluate(ps, pl);
      };
      double l = 0.0, h = 1.0;
      for (int i = 0; i < 100; ++i) {
        const double f1 = l + (h - l) / 3, f2 = h - (h - l) / 3;
        if (g(f1) < g(f2))
          h = f2;
        else
          l = f1;
      }
      return g(0.5 * (l + h));
    };
    const double lo = a.u0 * a.current_min, hi = a.u0 * a.current_max;
    const double burn_max = hi + b.u0 * b.current_max - demand;
    double best = kInf, b1 = 0, bb = 0;
    auto sweep = [&](double l1, double h1, double l2, double h2) {
      l2 = std::max(0.0, l2);
      for (int i = 0; i <= 200; ++i)
        for (int j = 0; j <= 200; ++j) {
          const double p1 = l1 + (h1 - l1) * i / 200.0, burn = l2 + (h2 - l2) * j / 200.0;
          const double v = at(p1, burn);
          if (v < best) best = v, b1 = p1, bb = burn;
        }
    };
    sweep(lo, hi, 0.0, burn_max);
    double w1 = (hi - lo) / 100.0, wb = burn_max / 100.0;
    for (int level = 0; level < 3; ++level) {
      sweep(b1 - w1, b1 + w1, bb - wb, bb + wb);
      w1 /= 100.0;
      wb /= 100.0;
    }
    REQUIRE(std::isfinite(best));
    CHECK(sol.objective <= best * 1.02 + 1e-6);
    CHECK(sol.objective >= best * 0.98 - 1e-6);
  }
}

TEST_CASE("larger penalties never increase slack") {
  Pack pack;
  pack.add(0.70, 301, 0.033, 3);
  pack.add(0.75, 305, 0.040, 3);
  pack.add(0.72, 303, 0.036, 3);
  std::vector<UnitSpec> units = {pack.unit({0, 1, 2}), pack.unit({3, 4, 5}), pack.unit({6, 7, 8})};
  double previous = kInf;
  for (double lambda : {0.1, 1.0, 10.0, 100.0, 1000.0, 10000.0}) {
    auto in = input_with(units, std::vector<double>(10, 80.0));
    in.lambda_e = in.lambda_t = lambda;
    const auto dp = build_inter_cluster(in);
    const auto sol = solve(dp.problem);
    REQUIRE(sol.optimal());
    double slack = 0.0;
    for (const auto& lay : dp.layout.units)
      for (int t = 0; t < 10; ++t) slack += sol.x[lay.xi_e[t]] + sol.x[lay.xi_t[t]];
    CHECK(slack <= previous + 1e-6 * std::max(1.0, previous));
    previous = slack;
  }
}

TEST_CASE("loss scales with resistance on an interior instance") {
  Pack pack;
  pack.add(0.72, 298, 0.035, 2);
  pack.add(0.72, 298, 0.045, 2);
  auto units = std::vector<UnitSpec>{pack.unit({0, 1}, 0.5), pack.unit({2, 3}, 0.5)};
  auto run = [&](double c) {
    // Small demand keeps the loss a first-order effect, so it scales with R.
    auto in = input_with(units, {1.0});
    in.delta_t = 100.0;
    for (auto& u : in.units) u.resistance *= c;
    const auto sol = solve(build_inter_cluster(in).problem);
    REQUIRE(sol.optimal());
    return sol.objective;
  };
  const double base = run(1.0);
  CHECK(run(2.0) == doctest::Approx(2.0 * base).epsilon(2e-3));
}

TEST_CASE("slacks keep randomized instances feasible") {
  Rng rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    Pack pack;
    const int k = 2 + static_cast<int>(rng.index(5));
    for (int j = 0; j < k; ++j) pack.add(rng.uniform(0.1, 0.9), rng.uniform(280, 320), rng.uniform(0.02, 0.06), 2);
    std::vector<UnitSpec> units;
    for (int j = 0; j < k; ++j) units.push_back(pack.unit({std::size_t(2 * j), std::size_t(2 * j + 1)}));
    std::vector<double> demand(10);
    for (auto& d : demand) d = rng.uniform(-10.0 * k, 20.0 * k);
    const auto sol = solve(build_inter_cluster(input_with(units, demand)).problem);
    CHECK(sol.optimal());
  }
}

TEST_CASE("exact current limits agree with frozen limits when inactive") {
  Pack pack;
  pack.add(0.72, 303, 0.035, 4);
  auto in = input_with({pack.unit({0, 1}), pack.unit({2, 3})}, std::vector<double>(4, 30.0));
  const auto frozen = solve(build_inter_cluster(in).problem);
  in.exact_current_limits = true;
  const auto exact = solve(build_inter_cluster(in).problem);
  REQUIRE(frozen.optimal());
  REQUIRE(exact.optimal());
  CHECK(exact.objective == doctest::Approx(frozen.objective).epsilon(1e-5));
}

TEST_CASE("aux means give the same optimum as inline means") {
  Pack pack;
  pack.add(0.70, 301, 0.033, 2);
  pack.add(0.74, 304, 0.040, 2);
  pack.add(0.72, 302, 0.036, 2);
  auto in = input_with({pack.unit({0, 1}), pack.unit({2, 3}), pack.unit({4, 5})}, std::vector<double>(6, 40.0));
  const auto a = solve(build_inter_cluster(in).problem);
  in.aux_means = true;
  const auto dp = build_inter_cluster(in);
  const auto b = solve(dp.problem);
  REQUIRE(a.optimal());
  REQUIRE(b.optimal());
  CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-6));
  CHECK(table_counts(dp).variables == 6 * 6 * 3 - 3);
}

TEST_CASE("intra-cluster split") {
  SUBCASE("identical members split evenly") {
    Pack pack;
    pack.add(0.72, 303, 0.035, 4);
    pack.bind();
    const std::size_t members[] = {0, 1, 2, 3};
    const double net[] = {40.0};
    const auto dp = build_intra_cluster(pack.views, members, net, {});
    const auto sol = solve(dp.problem);
    REQUIRE(sol.optimal());
    const auto f = extract_first_step(sol, dp.layout);
    for (const auto& x : f) CHECK(x.ps == doctest::Approx(f[0].ps).epsilon(1e-6));
  }
  SUBCASE("single member carries everything") {
    Pack pack;
    pack.add(0.72, 303, 0.035);
    pack.bind();
    const std::size_t members[] = {0};
    const double net[] = {12.0};
    const auto dp = build_intra_cluster(pack.views, members, net, {});
    const auto sol = solve(dp.problem);
    REQUIRE(sol.optimal());
    const auto f = extract_first_step(sol, dp.layout)[0];
    CHECK(f.ps - f.pl == doctest::Approx(12.0).epsilon(1e-8));
  }
  SUBCASE("two members approach the conductance ratio") {
    // R + R_C = 30 and 60 mOhm, balanced states, loose balancing bounds.
    Pack pack;
    pack.add(0.72, 298, 0.020);
    pack.add(0.72, 298, 0.050);
    pack.bind();
    const std::size_t members[] = {0, 1};
    const double net[] = {20.0};
    IntraOptions o;
    o.dq = 0.5;
    o.delta_t = 100.0;
    const auto dp = build_intra_cluster(pack.views, members, net, o);
    const auto sol = solve(dp.problem);
    REQUIRE(sol.optimal());
    const auto f = extract_first_step(sol, dp.layout);
    // Independent 1-D search over the split fraction of internal power.
    const double u = pack.params[0].ocv(0.72);
    double best_frac = 0.0, best = kInf;
    for (int i = 0; i <= 20000; ++i) {
      const double frac = i / 20000.0;
      // Solve for the total internal power P meeting the net demand.
      auto net_of = [&](double P) {
        const double i0 = frac * P / u, i1 = (1 - frac) * P / u;
        return P - 0.030 * i0 * i0 - 0.060 * i1 * i1;
      };
      double lo = 0.0, hi = 40.0;
      for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        (net_of(mid) < 20.0 ? lo : hi) = mid;
      }
      const double P = 0.5 * (lo + hi);
      const double l = P - 20.0;
      if (l < best) {
        best = l;
        best_frac = frac;
      }
    }
    CHECK(f[0].ps / (f[0].ps + f[1].ps) == doctest::Approx(best_frac).epsilon(1e-3));
    CHECK(f[0].ps / f[1].ps == doctest::Approx(2.0).epsilon(2e-3));
  }
}

TEST_CASE("invalid input is rejected") {
  Pack pack;
  pack.add(0.72, 303, 0.035);
  auto in = input_with({pack.unit({0})}, {});
  CHECK_THROWS_AS(build_inter_cluster(in), std::invalid_argument);
  in.demand = {1.0};
  in.dt = 0.0;
  CHECK_THROWS_AS(build_inter_cluster(in), std::invalid_argument);
  in.dt = 1.0;
  in.units[0].delta_e = -1.0;
  CHECK_THROWS_AS(build_inter_cluster(in), std::invalid_argument);
}

TEST_CASE("extract_first_step refuses non-optimal solutions") {
  Solution s;
  s.status = SolveStatus::Infeasible;
  CHECK_THROWS_AS(extract_first_step(s, Layout{}), std::runtime_error);
}
