#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <deque>
#include <random>

#include "bess/cluster_model.hpp"

using namespace bess;

namespace {

OcvCurve line(double alpha, double beta) { return OcvCurve({OcvSegment{0.0, 1.0, alpha, beta}}); }

struct Group {
  std::deque<CellParams> params;  // stable addresses
  std::vector<CellView> views;

  void add(const CellParams& p, CellState s) {
    params.push_back(p);
    views.push_back({&params.back(), s});
  }
};

}  // namespace

TEST_CASE("identical cells sum capacity and bounds") {
  Group g;
  CellParams p;
  for (int i = 0; i < 5; ++i) g.add(p, {0.7, 300.0});
  const auto m = aggregate(g.views);
  CHECK(m.capacity == 5 * 9000.0);
  CHECK(m.capacity / 3600.0 == doctest::Approx(12.5));
  CHECK(m.current_max == 5 * p.current_max);
  CHECK(m.current_min == 5 * p.current_min);
  CHECK(m.resistance == doctest::Approx(p.series_resistance() / 5).epsilon(1e-14));
  CHECK(m.soc == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(m.mass == doctest::Approx(5 * p.mass));
  CHECK(m.convective_resistance == doctest::Approx(p.convective_resistance() / 5));
  for (double q : {0.0, 0.05, 0.1, 0.5, 0.8, 0.93, 1.0}) CHECK(cluster_ocv(m, q) == doctest::Approx(ocv(p.ocv, q)).epsilon(1e-14));
}

TEST_CASE("conductance weighted OCV") {
  Group g;
  CellParams a;
  a.ocv = line(3.0, 1.2);
  a.internal_resistance = 0.02;
  a.converter_resistance = 0.01;
  CellParams b = a;
  b.internal_resistance = 0.05;
  g.add(a, {0.5, 300.0});   // 3.6 V
  g.add(b, {0.75, 300.0});  // 3.9 V
  const auto m = aggregate(g.views);
  // (3.6/0.03 + 3.9/0.06) / (1/0.03 + 1/0.06)
  CHECK(m.mixed_ocv == doctest::Approx(3.7).epsilon(1e-14));
  CHECK(m.resistance == doctest::Approx(0.02).epsilon(1e-14));

  // Member order does not matter.
  Group h;
  h.add(b, {0.75, 300.0});
  h.add(a, {0.5, 300.0});
  CHECK(aggregate(h.views).mixed_ocv == doctest::Approx(m.mixed_ocv).epsilon(1e-15));
}

TEST_CASE("averaged OCV segments") {
  Group g;
  CellParams a, b;
  a.ocv = line(3.0, 1.2);
  b.ocv = line(3.2, 1.0);
  g.add(a, {0.5, 300.0});
  g.add(b, {0.5, 300.0});
  const auto m = aggregate(g.views);
  CHECK(cluster_ocv(m, 0.5) == doctest::Approx(3.65).epsilon(1e-14));
  CHECK_THROWS_AS(cluster_ocv(m, 1.2), std::domain_error);
  CHECK_THROWS_AS(cluster_ocv(m, -0.1), std::domain_error);
}

TEST_CASE("printed resistance formula equals the parallel form") {
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> r(0.02, 0.08), rc(0.0, 0.02);
  for (int trial = 0; trial < 100; ++trial) {
    Group g;
    const int n = 1 + trial % 12;
    const double conv = rc(gen);
    std::vector<double> rs;
    for (int i = 0; i < n; ++i) {
      CellParams p;
      p.internal_resistance = r(gen);
      p.converter_resistance = conv;
      rs.push_back(p.internal_resistance);
      g.add(p, {0.7, 300.0});
    }
    // (R_n + Rc) / (1 + sum_{i<n} (R_n + Rc)/(R_i + Rc))
    double den = 1.0;
    for (int i = 0; i + 1 < n; ++i) den += (rs[n - 1] + conv) / (rs[i] + conv);
    const double printed = (rs[n - 1] + conv) / den;
    CHECK(aggregate(g.views).resistance == doctest::Approx(printed).epsilon(1e-12));
  }
}

TEST_CASE("singleton cluster reproduces the cell") {
  Group g;
  CellParams p;
  p.internal_resistance = 0.037;
  g.add(p, {0.72, 303.0});
  const auto m = aggregate(g.views);
  CHECK(m.resistance == doctest::Approx(p.series_resistance()).epsilon(1e-15));
  CHECK(m.mixed_ocv == doctest::Approx(ocv(p.ocv, 0.72)).epsilon(1e-15));
  CHECK(m.voltage() == doctest::Approx(ocv(p.ocv, 0.72)).epsilon(1e-15));
  CHECK(m.capacity == p.capacity);
  CHECK(m.temperature == 303.0);
  CHECK(m.soc == doctest::Approx(0.72).epsilon(1e-15));
}

TEST_CASE("loss consistency for identical members") {
  Group g;
  CellParams p;
  const int n = 7;
  for (int i = 0; i < n; ++i) g.add(p, {0.7, 300.0});
  const auto m = aggregate(g.views);
  for (double i : {-7.5, -1.0, 0.3, 5.0}) {
    const double cluster = m.resistance * (n * i) * (n * i);
    const double members = n * p.series_resistance() * i * i;
    CHECK(cluster == doctest::Approx(members).epsilon(1e-14));
  }
}

TEST_CASE("cluster SoC dynamics match identical members") {
  Group g;
  CellParams p;
  const int n = 4;
  for (int i = 0; i < n; ++i) g.add(p, {0.7, 300.0});
  auto m = aggregate(g.views);
  double q_bar = m.soc;
  std::vector<CellState> states(n, CellState{0.7, 300.0});
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> cur(-5.0, 5.0);
  for (int t = 0; t < 100; ++t) {
    const double i = cur(gen);
    q_bar -= n * i / m.capacity;
    double weighted = 0.0;
    for (auto& s : states) {
      s = electrical_step(s, p, i, 1.0).state;
      weighted += p.capacity * s.soc;
    }
    CHECK(q_bar == doctest::Approx(weighted / m.capacity).epsilon(1e-12));
  }
}

TEST_CASE("capacity weighted SoC and mean temperature") {
  Group g;
  CellParams a, b;
  b.capacity = 2 * a.capacity;
  g.add(a, {0.6, 300.0});
  g.add(b, {0.9, 306.0});
  const auto m = aggregate(g.views);
  CHECK(m.soc == doctest::Approx((0.6 + 2 * 0.9) / 3).epsilon(1e-14));
  CHECK(m.temperature == doctest::Approx(303.0));
  const std::size_t one[] = {1};
  CHECK(aggregate(g.views, one).soc == doctest::Approx(0.9));
  CHECK_THROWS_AS(aggregate(g.views, std::span<const std::size_t>{}), std::invalid_argument);
}

TEST_CASE("energy maps") {
  Group g;
  CellParams p;
  p.ocv = line(3.0, 1.2);
  g.add(p, {0.75, 300.0});
  const auto m = aggregate(g.views);
  const auto map = soc_energy_maps(m);
  CHECK(map.capacitance == doctest::Approx(7500.0));
  CHECK(map.energy_from_soc(m.soc) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(map.energy_from_soc(0.70) == doctest::Approx(-1741.5).epsilon(1e-12));
  for (double q = 0.05; q < 1.0; q += 0.05) CHECK(std::abs(map.soc_from_energy(map.energy_from_soc(q)) - q) <= 1e-9);
  CHECK_THROWS_AS(map.soc_from_energy(-map.e0 - 1.0), std::domain_error);
}

TEST_CASE("energy bound") {
  const OcvSegment seg{0.0, 1.0, 3.0, 1.2};
  CHECK(delta_E_bound(seg, 0.0) == 0.0);
  CHECK(delta_E_bound(seg, 0.005) == doctest::Approx(0.036036).epsilon(1e-12));
  double prev = 0.0;
  for (int i = 1; i <= 100; ++i) {
    const double v = delta_E_bound(seg, i * 1e-3);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("mismatched segmentations are rejected") {
  Group g;
  CellParams a, b;
  b.ocv = line(3.0, 1.2);
  g.add(a, {0.5, 300.0});
  g.add(b, {0.5, 300.0});
  CHECK_THROWS_AS(aggregate(g.views), std::invalid_argument);
}
