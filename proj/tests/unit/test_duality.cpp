#include <cmath>
#include <numbers>

#include "doctest.h"
#include "ldgas/duality.hpp"
#include "ldgas/error.hpp"
#include "support/oracles.hpp"

using namespace ldgas;
using namespace ldgas::oracle;

namespace {

const ConfinementPotential kBox = ConfinementPotential::make(Polynomial{}, Walls::box(-1, 1));
const ConfinementPotential kGauss = ConfinementPotential::make(Polynomial{0, 0, 0.25});
const LinearStatistic kLinear{Polynomial{0, 1}};
const LinearStatistic kSquare{Polynomial{0, 0, 1}};
const LinearStatistic kQuartic{Polynomial::monomial(4)};

const DualityCurve& box_curve() {
  static const DualityCurve c = integrate_J(build_curve(kBox, kLinear, -3, 3, 801));
  return c;
}

double at_grid(const DualityCurve& c, const std::vector<double>& values, double s) {
  for (std::size_t i = 0; i < c.size(); ++i)
    if (std::abs(c.s_grid[i] - s) < 1e-12) return values[i];
  FAIL("s not on grid: " << s);
  return 0;
}

}  // namespace

TEST_CASE("box gas x*(s) follows the closed form") {
  const auto& c = box_curve();
  CHECK(c.size() >= 801);
  double err = 0;
  for (std::size_t i = 0; i < c.size(); ++i) err = std::max(err, std::abs(c.x_values[i] - box_x(c.s_grid[i])));
  CHECK(err < 1e-8);
  CHECK(c.s_grid[c.zero_index] == 0.0);
  CHECK(c.x_values[c.zero_index] == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(c.lower_flag == DomainFlag::Interior);
  CHECK(c.upper_flag == DomainFlag::Interior);
  // Regime switches are inserted as grid points right at s = +-1.
  REQUIRE(c.kinks.size() == 2);
  CHECK(std::abs(c.s_grid[c.kinks[0]] + 1) < 1e-12);
  CHECK(std::abs(c.s_grid[c.kinks[1]] - 1) < 1e-12);
}

TEST_CASE("box gas J(s)") {
  const auto& c = box_curve();
  CHECK(c.j_values[c.zero_index] == 0.0);
  double err = 0;
  for (std::size_t i = 0; i < c.size(); ++i) err = std::max(err, std::abs(c.j_values[i] - box_J(c.s_grid[i])));
  CHECK(err < 1e-7);
  CHECK(evaluate_J(c, 0.5) == doctest::Approx(-0.0625).epsilon(1e-10));
  CHECK(evaluate_J(c, -2.0) ==
        doctest::Approx(-2 + std::log(std::sqrt(2.0)) + 0.75).epsilon(1e-10));
}

TEST_CASE("J is concave and J' = x*") {
  const auto& c = box_curve();
  for (std::size_t i = 1; i + 1 < c.size(); ++i) {
    const double h0 = c.s_grid[i] - c.s_grid[i - 1], h1 = c.s_grid[i + 1] - c.s_grid[i];
    const double slope0 = (c.j_values[i] - c.j_values[i - 1]) / h0;
    const double slope1 = (c.j_values[i + 1] - c.j_values[i]) / h1;
    CHECK(slope1 - slope0 <= 1e-8);
    CHECK(c.x_values[i + 1] <= c.x_values[i]);
  }
  CHECK(evaluate_J(c, 1.3) == doctest::Approx(box_J(1.3)).epsilon(1e-11));
  // Five-point central differences on uniformly spaced stretches.
  for (std::size_t i = 2; i + 2 < c.size(); ++i) {
    const double h = c.s_grid[i + 1] - c.s_grid[i];
    bool uniform = true;
    for (int k = -2; k < 2; ++k)
      uniform = uniform && std::abs(c.s_grid[i + k + 1] - c.s_grid[i + k] - h) < 1e-12;
    if (!uniform) continue;
    const double d = (c.j_values[i - 2] - 8 * c.j_values[i - 1] + 8 * c.j_values[i + 1] - c.j_values[i + 2]) / (12 * h);
    CHECK(std::abs(d - c.x_values[i]) < 1e-6);
  }
}

TEST_CASE("box gas inverse map and rate function") {
  const auto& c = box_curve();
  const auto table = integrate_Psi(invert_curve(c), c.x_values[c.zero_index]);
  CHECK(table.s_star(0.25) == doctest::Approx(-0.5).epsilon(1e-9));
  CHECK(table.s_star(0.75) == doctest::Approx(-2.0).epsilon(1e-7));
  CHECK(std::abs(table.s_star(table.x0)) < 1e-12);

  CHECK(table.psi(0.5) == doctest::Approx(0.25).epsilon(1e-9));
  const double oracle = legendre(box_J, 0.75, -50, 50);
  CHECK(oracle == doctest::Approx(0.25 + 0.5 * std::log(2.0)).epsilon(1e-10));
  CHECK(table.psi(0.75) == doctest::Approx(oracle).epsilon(1e-8));
  CHECK(std::abs(table.psi(table.x0)) < 1e-15);

  for (std::size_t i = 0; i < table.x_grid.size(); ++i) {
    CHECK(table.psi_values[i] >= -1e-10);
    CHECK(std::abs(table.psi_values[i] - legendre(box_J, table.x_grid[i], -50, 50)) < 1e-6);
  }
  for (std::size_t i = 1; i + 1 < table.x_grid.size(); ++i) {
    const double s0 = (table.psi_values[i] - table.psi_values[i - 1]) / (table.x_grid[i] - table.x_grid[i - 1]);
    const double s1 = (table.psi_values[i + 1] - table.psi_values[i]) / (table.x_grid[i + 1] - table.x_grid[i]);
    CHECK(s1 - s0 >= -1e-8);
  }
  // Round trip s*(x*(s)) = s.
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(std::abs(table.s_star(c.x_values[i]) - c.s_grid[i]) < 1e-7);
  CHECK(legendre_check(c, table) < 1e-6);
}

TEST_CASE("wide box-gas grid reaches the outer rate-function branches") {
  const auto c = integrate_J(build_curve(kBox, kLinear, -12, 12, 801));
  const auto table = integrate_Psi(invert_curve(c), 0.0);
  CHECK(table.psi(0.8) == doctest::Approx(legendre(box_J, 0.8, -100, 100)).epsilon(1e-7));
  CHECK(table.psi(-0.9) == doctest::Approx(0.25 - 0.5 * std::log(2 * 0.1)).epsilon(1e-7));
}

TEST_CASE("quartic model x*, J and the lower domain boundary") {
  const auto c = integrate_J(build_curve(kGauss, kQuartic, -0.02, 1.0 / 32, 101));
  CHECK(c.lower_flag == DomainFlag::DomainBoundary);
  CHECK(c.s_grid.front() == doctest::Approx(-1.0 / 96).epsilon(1e-9));
  REQUIRE(c.lower_infeasible);
  CHECK(*c.lower_infeasible < -1.0 / 96);
  CHECK(c.kinks.empty());
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(std::abs(c.x_values[i] - quartic_x(c.s_grid[i])) < 1e-8);
    CHECK(std::abs(c.j_values[i] - quartic_J(c.s_grid[i])) < 1e-8);
  }
  CHECK(c.s_grid.back() == 1.0 / 32);
  CHECK(c.j_values.back() == doctest::Approx(-25.0 / 432 + 0.25 * std::log(1.5)).epsilon(1e-9));
  const auto table = integrate_Psi(invert_curve(c), c.x_values[c.zero_index]);
  CHECK(legendre_check(c, table) < 1e-6);
}

TEST_CASE("quartic x* on [0, 1]") {
  const auto c = build_curve(kGauss, kQuartic, 0, 1, 201);
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(std::abs(c.x_values[i] - quartic_x(c.s_grid[i])) < 1e-8);
  CHECK(c.x_values[c.zero_index] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("without continuation the quartic curve stops at the confinement edge") {
  CurveOptions opt;
  opt.continue_past_confinement = false;
  const auto c = build_curve(kGauss, kQuartic, -0.5, 0.5, 21, opt);
  CHECK(c.lower_flag == DomainFlag::DomainBoundary);
  CHECK(c.s_grid.front() == 0.0);
}

TEST_CASE("shortcut J equals the excess mean-field energy") {
  const auto& c = box_curve();
  const CurveProblem box{kBox, kLinear};
  const double e0 = mean_field_energy(tilted_measure(box, 0.0));
  for (double s : {-2.5, -0.75, 0.25, 1.5, 2.5})
    CHECK(std::abs(evaluate_J(c, s) - (mean_field_energy(tilted_measure(box, s)) - e0)) < 1e-6);

  const auto q = integrate_J(build_curve(kGauss, kQuartic, 0, 0.5, 51));
  const CurveProblem quartic{kGauss, kQuartic};
  const double q0 = mean_field_energy(tilted_measure(quartic, 0.0));
  for (double s : {0.01, 0.1, 0.2, 0.3, 0.5})
    CHECK(std::abs(at_grid(q, q.j_values, s) - (mean_field_energy(tilted_measure(quartic, s)) - q0)) < 1e-6);
}

TEST_CASE("grid validation and flat segments") {
  CHECK_THROWS_AS(build_curve(kBox, kLinear, 0.5, 1.0, 11), Error);
  CHECK_THROWS_AS(build_curve(kBox, kLinear, -1.0, 1.0, 1), Error);
  CHECK_THROWS_AS(build_curve(kBox, kLinear, 0.0, 0.0, 5), Error);

  DualityCurve flat;
  flat.s_grid = {-1, 0, 1, 2};
  flat.x_values = {1, 0, 0, -1};
  flat.j_values = {0, 0, 0, 0};
  flat.zero_index = 1;
  try {
    (void)invert_curve(flat);
    FAIL("expected FLAT_SEGMENT");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FlatSegment);
  }
}

TEST_CASE("integrate_J without a problem uses the interpolated curve") {
  DualityCurve c;
  for (int i = -40; i <= 40; ++i) {
    c.s_grid.push_back(i / 40.0);
    c.x_values.push_back(-i / 80.0);
  }
  c.zero_index = 40;
  c = integrate_J(std::move(c));
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(c.j_values[i] == doctest::Approx(box_J(c.s_grid[i])).epsilon(1e-13));
}

TEST_CASE("threaded sweeps give identical curves") {
  CurveOptions opt;
  opt.threads = 3;
  const auto a = integrate_J(build_curve(kBox, kLinear, -3, 3, 101));
  const auto b = integrate_J(build_curve(kBox, kLinear, -3, 3, 101, opt));
  CHECK(a.s_grid == b.s_grid);
  CHECK(a.x_values == b.x_values);
  CHECK(a.j_values == b.j_values);
}

TEST_CASE("planar diagram counts from the quartic cumulants") {
  const auto report = cumulants(kGauss, kQuartic, 5);
  const auto planar = report.scaled(2.0);
  const double expect[] = {2, 36, 1728, 145152, 17915904};
  for (int m = 0; m < 5; ++m) CHECK(std::abs(planar[m] / expect[m] - 1) < 1e-4);
  CHECK(report.derivatives[0] == doctest::Approx(tilted_statistic({kGauss, kQuartic}, 0.0)).epsilon(1e-10));
}

TEST_CASE("box gas cumulants") {
  const auto report = cumulants(kBox, kLinear, 2);
  CHECK(std::abs(report.derivatives[0]) < 1e-14);
  CHECK(report.derivatives[1] == doctest::Approx(-0.5).epsilon(1e-9));
  const GasParameters gas(32, 2.0);
  CHECK(report.finite_n(gas)[1] == doctest::Approx(1.0 / (2 * gas.speed())).epsilon(1e-9));
  CHECK_THROWS_AS(cumulants(kBox, kLinear, 0), Error);
}

TEST_CASE("cumulants at a critical point are rejected") {
  // V = lambda in the box puts the regime switch of the tilted gas at s = 0.
  const auto shifted = ConfinementPotential::make(Polynomial{0, 1}, Walls::box(-1, 1));
  try {
    (void)cumulants(shifted, kLinear, 3);
    FAIL("expected NOT_ANALYTIC");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotAnalytic);
  }
}

TEST_CASE("joint surface of (lambda, lambda^2) in the box") {
  const std::vector<double> g1{-1.2, -0.6, 0.0, 0.5, 1.2};
  const std::vector<double> g2{-0.3, 0.0, 0.3, 0.6};
  const auto surf = joint_build_surface(kBox, kLinear, kSquare, g1, g2);
  const auto k0 = surf.index(surf.zero1, surf.zero2);
  // Arcsine moments: (1/pi) int_0^pi cos^2 = 1/2, by a Simpson oracle.
  const double m2 = numerics::adaptive_simpson([](double t) { return std::cos(t) * std::cos(t); }, 0,
                                               std::numbers::pi, 1e-14) / std::numbers::pi;
  CHECK(std::abs(surf.x1[k0]) < 1e-14);
  CHECK(surf.x2[k0] == doctest::Approx(m2).epsilon(1e-12));
  for (std::size_t i = 0; i < g1.size(); ++i)
    CHECK(surf.x1[surf.index(i, surf.zero2)] == doctest::Approx(box_x(g1[i])).epsilon(1e-12));
  const CurveProblem square{kBox, kSquare};
  for (std::size_t j = 0; j < g2.size(); ++j)
    CHECK(surf.x2[surf.index(surf.zero1, j)] == doctest::Approx(tilted_statistic(square, g2[j])).epsilon(1e-12));

  const auto tables = joint_integrate(surf);
  CHECK(tables.max_path_discrepancy < 1e-6);
  CHECK(tables.j_s1_first[surf.index(3, surf.zero2)] == doctest::Approx(-1.0 / 16).epsilon(1e-10));
  for (std::size_t i = 0; i < g1.size(); ++i)
    CHECK(tables.j_s1_first[surf.index(i, surf.zero2)] == doctest::Approx(box_J(g1[i])).epsilon(1e-9));
  CHECK(mixed_partial_asymmetry(surf) < 1e-5);
  for (double p : tables.psi) CHECK(p >= -1e-10);
}

TEST_CASE("joint J with identical statistics depends on s1 + s2 only") {
  const std::vector<double> g1{-0.6, 0.0, 0.4, 0.9};
  const std::vector<double> g2{-0.5, 0.0, 0.5};
  const auto surf = joint_build_surface(kBox, kLinear, kLinear, g1, g2);
  const auto tables = joint_integrate(surf);
  for (std::size_t i = 0; i < g1.size(); ++i)
    for (std::size_t j = 0; j < g2.size(); ++j)
      CHECK(tables.j_s1_first[surf.index(i, j)] == doctest::Approx(box_J(g1[i] + g2[j])).epsilon(1e-9));
}

TEST_CASE("joint grids must contain the origin") {
  CHECK_THROWS_AS(joint_build_surface(kBox, kLinear, kSquare, {0.1, 0.2}, {0.0}), Error);
  CHECK_THROWS_AS(joint_build_surface(kBox, kLinear, kSquare, {0.0, -0.1}, {0.0}), Error);
}
