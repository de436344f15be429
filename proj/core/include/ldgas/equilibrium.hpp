#pragma once

// One-cut equilibrium measures of a log-gas in a polynomial potential with
// optional hard walls.
//
// Every one-cut measure is written as
//
//     rho(x) = R(x) / (pi * sqrt((b - x)(x - a)))     on [a, b]
//
// with R a polynomial. For a given support the Stieltjes transform is
// G(z) = W'(z) + R(z) / sqrt((z-a)(z-b)), and G(z) ~ 1/z fixes R as one minus
// the polynomial part of W'(z) sqrt((z-a)(z-b)) expanded at infinity. A soft
// edge is a zero of R; a hard edge sits on a wall with R > 0 there.

#include <optional>
#include <variant>
#include <vector>

#include "ldgas/model.hpp"

namespace ldgas {

enum class EdgeType { Soft, Hard };

struct SupportInterval {
  double a = -1.0;
  double b = 1.0;
  EdgeType edge_a = EdgeType::Soft;
  EdgeType edge_b = EdgeType::Soft;

  double centre() const noexcept { return 0.5 * (a + b); }
  double half_width() const noexcept { return 0.5 * (b - a); }
  bool same_regime(const SupportInterval& other) const noexcept {
    return edge_a == other.edge_a && edge_b == other.edge_b;
  }
};

/// Divergent density value at a hard edge: rho ~ coefficient * |x - edge|^exponent.
struct EdgeSingularity {
  double coefficient;
  double exponent;
};

using DensityValue = std::variant<double, EdgeSingularity>;

struct SolverOptions {
  /// Chebyshev points used for the nonnegativity check.
  int sample_points = 512;
  double nonnegativity_tol = 1e-12;
  int max_newton_iterations = 100;
};

class EquilibriumMeasure {
 public:
  EquilibriumMeasure(SupportInterval support, Polynomial numerator,
                     ConfinementPotential source_potential);

  const SupportInterval& support() const noexcept { return support_; }
  /// Numerator R of rho = R / (pi sqrt((b-x)(x-a))).
  const Polynomial& numerator() const noexcept { return numerator_; }
  const ConfinementPotential& source_potential() const noexcept { return source_; }

  /// Chebyshev coefficients of R(c + r u), u in [-1, 1]. Entry 0 is the mass.
  const std::vector<double>& chebyshev_numerator() const noexcept { return alpha_; }

  /// Mass between a and x.
  double cdf(double x) const;
  /// Points x_i with cdf(x_i) = (i + 1/2) / n.
  std::vector<double> quantiles(int n) const;

  /// Integral of log|x - t| d rho(t), valid for x inside the support.
  double log_potential(double x) const;

 private:
  SupportInterval support_;
  Polynomial numerator_;
  ConfinementPotential source_;
  std::vector<double> alpha_;
};

/// Solves for the one-cut equilibrium measure of W. A previous solution (or
/// just its support) may be passed as a warm start for continuation; the
/// result does not depend on it beyond solver tolerance.
///
/// Throws Error(NoOneCut) when the only consistent one-cut candidates have
/// negative density inside the support, Error(NoConvergence) when no edge
/// configuration can be solved.
EquilibriumMeasure solve_one_cut(const ConfinementPotential& w, const SolverOptions& options = {});
EquilibriumMeasure solve_one_cut(const ConfinementPotential& w, const EquilibriumMeasure* warm_start,
                                 const SolverOptions& options = {});
EquilibriumMeasure solve_one_cut(const ConfinementPotential& w, const SupportInterval& hint,
                                 const SolverOptions& options = {});

DensityValue density_at(const EquilibriumMeasure& rho, double x);
/// density_at collapsed to a double (+inf at a hard edge).
double density(const EquilibriumMeasure& rho, double x);

/// Integral of f against rho, exact for polynomial f.
double statistic_value(const EquilibriumMeasure& rho, const Polynomial& f);
double statistic_value(const EquilibriumMeasure& rho, const LinearStatistic& f);

/// -(1/2) double-integral of log|x - y| d rho d rho.
double interaction_energy(const EquilibriumMeasure& rho);

/// Mean-field energy with the given external potential:
/// interaction_energy(rho) + integral of potential against rho.
double mean_field_energy(const EquilibriumMeasure& rho, const Polynomial& potential);
/// Mean-field energy with the potential that produced rho.
double mean_field_energy(const EquilibriumMeasure& rho);

/// Sample standard deviation of log_potential(x) - W(x) over interior
/// Chebyshev points; zero for an exact equilibrium.
double euler_lagrange_residual(const EquilibriumMeasure& rho, int points = 64);

/// Minimum of rho over Chebyshev sample points of the support.
double min_density(const EquilibriumMeasure& rho, int points = 512);

/// R for the support [a, b]: one minus the polynomial part of
/// W'(z) sqrt((z-a)(z-b)) at infinity.
Polynomial tricomi_numerator(const Polynomial& w_prime, double a, double b);

}  // namespace ldgas
