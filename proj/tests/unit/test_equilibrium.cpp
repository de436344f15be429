#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "ldgas/equilibrium.hpp"
#include "ldgas/error.hpp"
#include "ldgas/numerics.hpp"

using namespace ldgas;

namespace {

constexpr double kPi = std::numbers::pi;

ConfinementPotential box_tilted(double s) {
  return ConfinementPotential::make(Polynomial{0, s}, Walls::box(-1, 1));
}

ConfinementPotential quartic_tilted(double s) {
  return ConfinementPotential::make(Polynomial{0, 0, 0.25, 0, s});
}

double quartic_L(double s) { return (std::sqrt(1.0 + 96.0 * s) - 1.0) / (48.0 * s); }

// Printed density of the Gaussian potential tilted by s*x^4.
double quartic_density(double s, double x) {
  const double l = quartic_L(s);
  if (x * x >= 4.0 * l) return 0.0;
  return (0.5 + 8.0 * s * l + 4.0 * s * x * x) * std::sqrt(4.0 * l - x * x) / kPi;
}

// Mass of rho by adaptive Simpson in the angle variable x = c + r cos(theta).
double mass_by_quadrature(const EquilibriumMeasure& rho) {
  const double c = rho.support().centre(), r = rho.support().half_width();
  return numerics::adaptive_simpson(
             [&](double t) { return rho.numerator()(c + r * std::cos(t)); }, 0.0, kPi, 1e-14) /
         kPi;
}

// Independent oracle for -(1/2) double-integral log|x-y|: midpoint rule in
// angles after subtracting the diagonal singularity, using
// int_0^pi log|cos t - cos p| dp = -pi log 2 for every t.
double interaction_by_quadrature(const EquilibriumMeasure& rho, int n) {
  const double c = rho.support().centre(), r = rho.support().half_width();
  std::vector<double> t(n), g(n), ct(n);
  for (int i = 0; i < n; ++i) {
    t[i] = (i + 0.5) * kPi / n;
    ct[i] = std::cos(t[i]);
    g[i] = rho.numerator()(c + r * ct[i]) / kPi;
  }
  const double h = kPi / n;
  double regular = 0.0, diag = 0.0;
  for (int i = 0; i < n; ++i) {
    diag += g[i] * g[i];
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      regular += g[i] * (g[j] - g[i]) * std::log(std::abs(ct[i] - ct[j]));
    }
  }
  regular *= h * h;
  diag *= h * (-kPi * std::log(2.0));
  // x - y = r (cos t - cos p); the log r term integrates against total mass 1.
  const double log_energy = regular + diag + std::log(r);
  return -0.5 * log_energy;
}

}  // namespace

TEST_CASE("arcsine law for the empty box") {
  const auto rho = solve_one_cut(box_tilted(0.0));
  CHECK(rho.support().a == -1.0);
  CHECK(rho.support().b == 1.0);
  CHECK(rho.support().edge_a == EdgeType::Hard);
  CHECK(rho.support().edge_b == EdgeType::Hard);
  CHECK(density(rho, 0.0) == doctest::Approx(1.0 / kPi).epsilon(1e-14));
  CHECK(density(rho, 0.6) == doctest::Approx(1.0 / (kPi * std::sqrt(1 - 0.36))).epsilon(1e-13));
  CHECK(statistic_value(rho, Polynomial{0, 1}) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("box gas at s = 2 has a soft edge at 0") {
  const auto rho = solve_one_cut(box_tilted(2.0));
  CHECK(rho.support().a == -1.0);
  CHECK(rho.support().edge_a == EdgeType::Hard);
  CHECK(rho.support().edge_b == EdgeType::Soft);
  CHECK(std::abs(rho.support().b) < 1e-12);
  CHECK(std::abs(statistic_value(rho, Polynomial{0, 1}) + 0.75) < 1e-12);
  // Printed density: ((a + b - 2x) s + 2) / (2 pi sqrt((b-x)(x-a))).
  for (double x : {-0.9, -0.5, -0.1}) {
    const double expect = ((-1.0 - 2 * x) * 2.0 + 2.0) / (2 * kPi * std::sqrt((0 - x) * (x + 1)));
    CHECK(std::abs(density(rho, x) - expect) < 1e-10);
  }
}

TEST_CASE("semicircle for the Gaussian potential") {
  const auto rho = solve_one_cut(quartic_tilted(0.0));
  CHECK(std::abs(rho.support().a + 2.0) < 1e-12);
  CHECK(std::abs(rho.support().b - 2.0) < 1e-12);
  CHECK(rho.support().edge_a == EdgeType::Soft);
  CHECK(density(rho, 0.0) == doctest::Approx(1.0 / kPi).epsilon(1e-12));
  CHECK(density(rho, 1.3) == doctest::Approx(std::sqrt(4 - 1.69) / (2 * kPi)).epsilon(1e-12));
  CHECK(statistic_value(rho, Polynomial::monomial(4)) == doctest::Approx(2.0).epsilon(1e-13));
}

TEST_CASE("density outside the support and at edges") {
  const auto rho = solve_one_cut(box_tilted(2.0));
  CHECK(density(rho, 0.5) == 0.0);
  CHECK(density(rho, -1.5) == 0.0);
  const auto hard = density_at(rho, -1.0);
  REQUIRE(std::holds_alternative<EdgeSingularity>(hard));
  CHECK(std::get<EdgeSingularity>(hard).exponent == -0.5);
  // R(-1) = 2 for s = 2, support width 1.
  CHECK(std::get<EdgeSingularity>(hard).coefficient == doctest::Approx(2.0 / kPi).epsilon(1e-10));
  const auto soft = density_at(rho, rho.support().b);
  REQUIRE(std::holds_alternative<double>(soft));
  CHECK(std::get<double>(soft) == 0.0);
}

TEST_CASE("quartic statistic at s = 1/32") {
  const auto rho = solve_one_cut(quartic_tilted(1.0 / 32));
  // L(1/32) = 2/3, x* = L^2 (3 - L) = 28/27.
  CHECK(std::abs(statistic_value(rho, Polynomial::monomial(4)) - 28.0 / 27.0) < 1e-12);
}

TEST_CASE("solver matches the printed quartic density") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> us(0.0, 1.0);
  for (double s : {0.01, 0.1, 0.35, 0.7, 1.0}) {
    const auto rho = solve_one_cut(quartic_tilted(s));
    const double edge = 2.0 * std::sqrt(quartic_L(s));
    CHECK(std::abs(rho.support().b - edge) < 1e-10);
    for (int i = 0; i < 20; ++i) {
      const double x = (2.0 * us(rng) - 1.0) * edge;
      CHECK(std::abs(density(rho, x) - quartic_density(s, x)) < 1e-8);
    }
  }
}

TEST_CASE("box gas regime switches") {
  for (double s = -3.0; s <= 3.0001; s += 0.125) {
    const auto rho = solve_one_cut(box_tilted(s));
    const auto& sup = rho.support();
    if (std::abs(s) < 1.0) {
      CHECK(sup.edge_a == EdgeType::Hard);
      CHECK(sup.edge_b == EdgeType::Hard);
    } else if (s > 1.0) {
      CHECK(sup.edge_a == EdgeType::Hard);
      CHECK(sup.edge_b == EdgeType::Soft);
      CHECK(std::abs(sup.b - (-1.0 + 2.0 / s)) < 1e-12);
    } else if (s < -1.0) {
      CHECK(sup.edge_a == EdgeType::Soft);
      CHECK(sup.edge_b == EdgeType::Hard);
      CHECK(std::abs(sup.a - (1.0 + 2.0 / s)) < 1e-12);
    }
  }
}

TEST_CASE("type invariants of solver output") {
  std::vector<ConfinementPotential> cases{
      box_tilted(0.0), box_tilted(0.5), box_tilted(2.5), box_tilted(-1.7),
      quartic_tilted(0.0), quartic_tilted(0.3),
      ConfinementPotential::make(Polynomial{0.3, -0.5, 0.8, 0.2, 0.4}),
      ConfinementPotential::make(Polynomial{0, 0, 1}, Walls(Bound::at(-0.5), Bound::infinite())),
  };
  for (const auto& w : cases) {
    const auto rho = solve_one_cut(w);
    CAPTURE(w.v().to_string());
    CHECK(std::abs(mass_by_quadrature(rho) - 1.0) < 1e-10);
    CHECK(min_density(rho) >= -1e-12);
    CHECK(euler_lagrange_residual(rho) < 1e-8);
    const auto& sup = rho.support();
    if (sup.edge_a == EdgeType::Soft) CHECK(std::abs(rho.numerator()(sup.a)) < 1e-10);
    if (sup.edge_b == EdgeType::Soft) CHECK(std::abs(rho.numerator()(sup.b)) < 1e-10);
  }
}

TEST_CASE("Euler-Lagrange constancy against direct quadrature of the log potential") {
  const auto rho = solve_one_cut(ConfinementPotential::make(Polynomial{0, 0.3, 0.5, 0, 0.2}));
  const double c = rho.support().centre(), r = rho.support().half_width();
  // Field at x in the angle variable, with the singular value g(tx)
  // subtracted and restored through int_0^pi log|cos tx - cos t| dt = -pi log 2.
  auto field = [&](double x) {
    const double tx = std::acos((x - c) / r);
    const double gx = rho.numerator()(x) / kPi;
    auto integrand = [&](double t) {
      if (t == tx) return 0.0;
      const double y = c + r * std::cos(t);
      return std::log(std::abs(std::cos(tx) - std::cos(t))) * (rho.numerator()(y) / kPi - gx);
    };
    const double smooth = numerics::adaptive_simpson(integrand, 0.0, tx, 1e-12, 30) +
                          numerics::adaptive_simpson(integrand, tx, kPi, 1e-12, 30);
    return smooth - gx * kPi * std::log(2.0) + std::log(r) - rho.source_potential().v()(x);
  };
  const double ref = field(c + 0.1 * r);
  for (double u : {-0.8, -0.35, 0.45, 0.77}) CHECK(std::abs(field(c + u * r) - ref) < 1e-6);
}

TEST_CASE("interaction energy matches a brute-force oracle") {
  // Arcsine law: -(1/2) log(1/2) = log(2)/2.
  const auto arcsine = solve_one_cut(box_tilted(0.0));
  CHECK(std::abs(mean_field_energy(arcsine) - 0.5 * std::log(2.0)) < 1e-14);
  CHECK(std::abs(interaction_by_quadrature(arcsine, 800) - 0.5 * std::log(2.0)) < 1e-6);

  // Semicircle with V = x^2/4: 1/8 + 1/4.
  const auto semi = solve_one_cut(quartic_tilted(0.0));
  CHECK(std::abs(mean_field_energy(semi) - 0.375) < 1e-12);

  for (const auto& w : {box_tilted(2.0), quartic_tilted(0.2),
                        ConfinementPotential::make(Polynomial{0, 0.3, 0.5, -0.1, 0.2})}) {
    const auto rho = solve_one_cut(w);
    CHECK(std::abs(interaction_energy(rho) - interaction_by_quadrature(rho, 1600)) < 1e-5);
  }
}

TEST_CASE("energy shift by translation") {
  const auto rho = solve_one_cut(quartic_tilted(0.2));
  const double shift = 0.37;
  const Polynomial v = rho.source_potential().v();
  // Translating rho by shift leaves the log interaction unchanged.
  const EquilibriumMeasure moved(
      SupportInterval{rho.support().a + shift, rho.support().b + shift, EdgeType::Soft, EdgeType::Soft},
      rho.numerator().shifted(-shift), rho.source_potential());
  const double delta = mean_field_energy(moved, v) - mean_field_energy(rho, v);
  const double expect = statistic_value(rho, v.shifted(shift) - v);
  CHECK(std::abs(delta - expect) < 1e-12);
}

TEST_CASE("continuation matches cold start") {
  for (double s : {0.05, 0.4, 0.9}) {
    const auto cold = solve_one_cut(quartic_tilted(s));
    const auto prev = solve_one_cut(quartic_tilted(s - 0.01));
    const auto warm = solve_one_cut(quartic_tilted(s), &prev);
    CHECK(std::abs(cold.support().a - warm.support().a) < 1e-10);
    CHECK(std::abs(cold.support().b - warm.support().b) < 1e-10);
  }
  for (double s : {-2.5, 0.3, 1.4}) {
    const auto cold = solve_one_cut(box_tilted(s));
    const auto prev = solve_one_cut(box_tilted(s - 0.01));
    const auto warm = solve_one_cut(box_tilted(s), &prev);
    CHECK(std::abs(cold.support().a - warm.support().a) < 1e-10);
    CHECK(std::abs(cold.support().b - warm.support().b) < 1e-10);
  }
}

TEST_CASE("quantiles invert the distribution function") {
  const auto rho = solve_one_cut(box_tilted(2.0));
  const auto q = rho.quantiles(16);
  for (int i = 0; i < 16; ++i) CHECK(rho.cdf(q[i]) == doctest::Approx((i + 0.5) / 16).epsilon(1e-12));
  for (std::size_t i = 1; i < q.size(); ++i) CHECK(q[i] > q[i - 1]);
}

TEST_CASE("solver errors") {
  // Deep double well: the one-cut ansatz has negative density at the origin.
  try {
    (void)solve_one_cut(ConfinementPotential::make(Polynomial{0, 0, -5, 0, 1}));
    FAIL("expected NO_ONE_CUT");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoOneCut);
  }
  // Inverted parabola with no walls: the edge equations have no solution.
  try {
    (void)solve_one_cut(ConfinementPotential::local(Polynomial{0, 0, -1}));
    FAIL("expected NO_CONVERGENCE");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoConvergence);
  }
}
