#pragma once

// Non-analytic points of J(s) and steepness at the ends of its domain.
//
// An l-th order transition at s_cr is a jump of the (l-1)-th derivative of
// x*(s) = J'(s), i.e. of the l-th derivative of J.

#include <optional>
#include <string>
#include <vector>

#include "ldgas/duality.hpp"

namespace ldgas {

struct CriticalPoint {
  double s_cr;
  /// Smallest l with a discontinuous l-th derivative of J.
  int order;
  /// Right minus left value of the (order-1)-th derivative of x* at s_cr.
  double jump;
  double s_lo;
  double s_hi;
};

struct TransitionOptions {
  /// Derivatives of x* of orders 0..max_order-1 are compared.
  int max_order = 4;
  /// Grid intervals in each one-sided fit window.
  int window = 8;
  int fit_degree = 4;
  double min_threshold = 1e-3;
  double noise_factor = 50.0;
  /// Upper bound on the refined bracket width.
  double bracket_width = 1e-4;
};

/// Compares one-sided polynomial fits of x*(s) at every grid point; a point is
/// flagged at derivative order k when the left and right estimates differ by
/// more than max(min_threshold, noise_factor * noise), where the noise is the
/// change in each one-sided estimate when its window slides one point
/// outward. Adjacent flags are merged and each cluster is bracketed by
/// bisection on the edge regime of solver solutions.
std::vector<CriticalPoint> detect_transitions(const DualityCurve& curve,
                                              const TransitionOptions& options = {});

enum class CurveEnd { Lower, Upper };

struct SteepnessReport {
  /// Absent when the curve has no domain boundary.
  std::optional<CurveEnd> end;
  /// Boundary location (last solvable s); absent with end.
  std::optional<double> boundary_s;
  /// Limit C of x*(s) approaching the boundary, or the largest |x*| on the
  /// grid for a curve without boundary.
  double boundary_slope;
  bool steep;
  std::string note;
};

/// One report per DomainBoundary/NonSteepBoundary end, found by following
/// x*(s) along a geometric sequence of s approaching the boundary; steep when
/// |x*| exceeds divergence_threshold on the way. Without flagged ends a
/// single steep-by-default report is returned.
std::vector<SteepnessReport> check_steepness(const DualityCurve& curve,
                                             double divergence_threshold = 1e6);

/// Marks the ends with a non-steep report as NonSteepBoundary.
void apply_steepness(DualityCurve& curve, const std::vector<SteepnessReport>& reports);

}  // namespace ldgas
