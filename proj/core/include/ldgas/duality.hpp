#pragma once

// Large-deviation functions from the tilted equilibrium problem.
//
// For the tilted potential W_s = V + s f the typical value of F is
// x*(s) = int f d rho*_s. Then
//
//     J(s)   =  int_0^s x*(t) dt,         J(0) = 0,
//     Psi(x) = -int_{x0}^x s*(y) dy,      Psi(x0) = 0, x0 = x*(0),
//
// where s* is the inverse function of x*. Both are tabulated here.

#include <cstddef>
#include <optional>
#include <vector>

#include "ldgas/equilibrium.hpp"
#include "ldgas/error.hpp"
#include "ldgas/model.hpp"
#include "ldgas/numerics.hpp"

namespace ldgas {

/// A potential and the statistic used to tilt it.
struct CurveProblem {
  ConfinementPotential potential;
  LinearStatistic statistic;
};

enum class DomainFlag { Interior, DomainBoundary, NonSteepBoundary };

struct CurveOptions {
  /// Beyond the confinement domain, keep following the saddle point with an
  /// analytically continued potential instead of stopping.
  bool continue_past_confinement = true;
  /// Bracket width for regime switches and domain boundaries.
  double switch_tolerance = 1e-13;
  /// Intervals with |dx| above this multiple of the median are bisected.
  double refine_factor = 10.0;
  double refine_min_width = 1e-4;
  int refine_passes = 12;
  /// Absolute tolerance per grid interval when integrating J.
  double integration_tolerance = 1e-13;
  /// Worker threads for independent sweeps and interval integrals.
  int threads = 1;
  SolverOptions solver{};
};

/// Tabulated x*(s) and J(s) on an increasing s-grid containing 0.
struct DualityCurve {
  std::vector<double> s_grid;
  std::vector<double> x_values;
  std::vector<double> j_values;
  std::vector<SupportInterval> supports;
  /// Grid indices where the edge regime of the support changes.
  std::vector<std::size_t> kinks;
  DomainFlag lower_flag = DomainFlag::Interior;
  DomainFlag upper_flag = DomainFlag::Interior;
  /// For a DomainBoundary end: the first s (outside the grid) with no solution.
  std::optional<double> lower_infeasible;
  std::optional<double> upper_infeasible;
  /// Why the solver failed past a DomainBoundary end.
  std::optional<ErrorCode> lower_failure;
  std::optional<ErrorCode> upper_failure;
  std::size_t zero_index = 0;
  /// Present when the curve was built from a problem; allows re-evaluation.
  std::optional<CurveProblem> problem;
  CurveOptions options{};

  std::size_t size() const noexcept { return s_grid.size(); }
};

/// Inverse map s*(x) and rate function on an increasing x-grid.
struct RateFunctionTable {
  std::vector<double> x_grid;
  std::vector<double> s_star_values;
  std::vector<double> psi_values;
  /// Grid indices where s*(x) is only piecewise smooth.
  std::vector<std::size_t> breaks;
  double x0 = 0.0;
  std::optional<numerics::MonotoneCubic> interpolant;

  double s_star(double x) const;
  /// Psi at any x in the table range, integrating the interpolant from x0.
  double psi(double x) const;
};

/// Equilibrium measure of the tilted potential; continues past the
/// confinement domain when allowed.
EquilibriumMeasure tilted_measure(const CurveProblem& problem, double s,
                                  const std::optional<SupportInterval>& hint = std::nullopt,
                                  bool continue_past_confinement = true,
                                  const SolverOptions& solver = {});

/// x*(s) = int f d rho*_s.
double tilted_statistic(const CurveProblem& problem, double s,
                        const std::optional<SupportInterval>& hint = std::nullopt,
                        bool continue_past_confinement = true);

/// Tabulates x*(s) on n_points uniform points of [s_min, s_max] plus s = 0,
/// regime switches and adaptive refinement. Where the tilted problem has no
/// solution the range is truncated and the end flagged DomainBoundary.
/// Throws Error(InvalidArgument) unless s_min <= 0 <= s_max, s_min < s_max
/// and n_points >= 2. j_values are filled by integrate_J.
DualityCurve build_curve(const ConfinementPotential& v, const LinearStatistic& f, double s_min,
                         double s_max, int n_points, const CurveOptions& options = {});

/// J(s) by adaptive Simpson over each grid interval, outward from s = 0.
/// Uses the solver when the curve carries its problem, the interpolated
/// x*(s) otherwise.
DualityCurve integrate_J(DualityCurve curve);

/// J at any s in the grid range: the nearest node value plus the integral of
/// x* from that node (solver when available, interpolant otherwise).
double evaluate_J(const DualityCurve& curve, double s);

/// Inverts x*(s). Throws Error(FlatSegment) if x* is not strictly
/// decreasing.
RateFunctionTable invert_curve(const DualityCurve& curve);

/// Psi(x) = -int_{x0}^x s*(y) dy on the table grid.
RateFunctionTable integrate_Psi(RateFunctionTable table, double x0);

/// max_i |J(s_i) - Psi(x*(s_i)) - s_i x*(s_i)|.
double legendre_check(const DualityCurve& curve, const RateFunctionTable& table);

struct CumulantOptions {
  double initial_step = 1e-2;
  int halvings = 2;
  double relative_tolerance = 1e-6;
  double absolute_tolerance = 1e-9;
  int max_step_reductions = 16;
  bool continue_past_confinement = true;
};

/// Derivatives d^m J / ds^m at s = 0 for m = 1..m_max.
struct CumulantReport {
  std::vector<int> orders;
  std::vector<double> derivatives;
  std::vector<double> error_estimates;
  double step = 0.0;

  /// (-1/speed)^{m-1} d^m J(0): the m-th cumulant of F at the given speed.
  std::vector<double> scaled(double speed) const;
  /// Leading-order cumulants of F for N particles at inverse temperature beta.
  std::vector<double> finite_n(const GasParameters& gas) const { return scaled(gas.speed()); }
};

/// Central differences of x*(s) = J'(s) around 0 with Richardson
/// extrapolation over step, step/2, step/4. Throws Error(NotAnalytic) when a
/// regime switch sits inside every admissible stencil and
/// Error(InvalidArgument) for m_max < 1.
CumulantReport cumulants(const ConfinementPotential& v, const LinearStatistic& f, int m_max,
                         const CumulantOptions& options = {});

// Two statistics.

struct JointSurface {
  std::vector<double> s1_grid;
  std::vector<double> s2_grid;
  /// Row-major in (s1, s2): index i1 * s2_grid.size() + i2.
  std::vector<double> x1;
  std::vector<double> x2;
  std::vector<SupportInterval> supports;
  std::vector<char> feasible;
  std::size_t zero1 = 0;
  std::size_t zero2 = 0;
  ConfinementPotential potential;
  LinearStatistic f1;
  LinearStatistic f2;

  std::size_t index(std::size_t i1, std::size_t i2) const noexcept {
    return i1 * s2_grid.size() + i2;
  }
  /// Equilibrium measure of V + s1 f1 + s2 f2.
  EquilibriumMeasure measure(double s1, double s2,
                             const std::optional<SupportInterval>& hint = std::nullopt) const;
};

/// Evaluates (x1*, x2*) at every node. Both grids must be increasing and
/// contain 0. Nodes without a one-cut solution are marked infeasible.
JointSurface joint_build_surface(const ConfinementPotential& v, const LinearStatistic& f1,
                                 const LinearStatistic& f2, std::vector<double> s1_grid,
                                 std::vector<double> s2_grid, int threads = 1);

struct JointTables {
  /// J via (0,0) -> (s1,0) -> (s1,s2).
  std::vector<double> j_s1_first;
  /// J via (0,0) -> (0,s2) -> (s1,s2).
  std::vector<double> j_s2_first;
  /// Psi(x1*, x2*) = J - s1 x1* - s2 x2* at each node.
  std::vector<double> psi;
  double max_path_discrepancy = 0.0;
};

/// Integrates dJ = x1* ds1 + x2* ds2 along both axis paths. Throws
/// Error(PathMismatch) when the paths differ by more than mismatch_tolerance
/// and Error(InvalidArgument) if any node is infeasible.
JointTables joint_integrate(const JointSurface& surface, double mismatch_tolerance = 1e-5,
                            double integration_tolerance = 1e-13, int threads = 1);

/// Largest |dx1*/ds2 - dx2*/ds1| over the grid nodes, by central
/// differences of the solver with a step kept inside one edge regime.
double mixed_partial_asymmetry(const JointSurface& surface, double step = 1e-4);

}  // namespace ldgas
