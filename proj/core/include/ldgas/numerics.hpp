#pragma once

// Small numerical kernels used across the library: Chebyshev quadrature,
// bracketed root finding, adaptive Simpson, finite-difference weights and
// shape-preserving cubic interpolation.

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace ldgas::numerics {

/// Gauss-Chebyshev (first kind) nodes cos((2j+1)pi/(2n)), j = 0..n-1.
/// The rule (1/n) sum g(u_j) equals (1/pi) int g(u)/sqrt(1-u^2) du for
/// polynomials g of degree <= 2n-1.
std::vector<double> chebyshev_nodes(int n);

/// Coefficients alpha_k of g(u) = sum_k alpha_k T_k(u) for a polynomial g of
/// degree <= degree, computed by a discrete cosine transform on
/// degree+1 Chebyshev nodes (exact up to rounding).
std::vector<double> chebyshev_coefficients(const std::function<double(double)>& g, int degree);

/// Sum_k alpha_k T_k(u) by Clenshaw recurrence.
double chebyshev_eval(std::span<const double> alpha, double u) noexcept;

/// Root of f in [lo, hi] with f(lo) and f(hi) of opposite sign. Brent's
/// method; returns nullopt if the bracket is invalid.
std::optional<double> find_root(const std::function<double(double)>& f, double lo, double hi,
                                double x_tol = 1e-15, int max_iter = 200);

/// Adaptive Simpson quadrature with Richardson correction.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        int max_depth = 40);

/// Finite-difference weights (Fornberg) for the derivative of the given order
/// at z using the sample abscissae x.
std::vector<double> fd_weights(double z, std::span<const double> x, int order);

/// Least-squares polynomial fit of the given degree to (x, y), returning
/// derivatives 0..max_order at x0. Abscissae are centred at x0 internally.
std::vector<double> fit_derivatives(std::span<const double> x, std::span<const double> y,
                                    double x0, int degree, int max_order);

/// Monotone piecewise-cubic Hermite interpolant. Node slopes come from
/// fourth-order differences inside each smooth segment and are limited with
/// the Fritsch-Carlson conditions, so monotone data give a monotone curve.
class MonotoneCubic {
 public:
  /// xs strictly increasing. breaks lists indices at which the data are
  /// only piecewise smooth; slope stencils never cross a break.
  MonotoneCubic(std::vector<double> xs, std::vector<double> ys,
                std::span<const std::size_t> breaks = {});

  double operator()(double x) const;
  /// Exact integral of the interpolant over [x_i, x_{i+1}].
  double interval_integral(std::size_t i) const;
  /// Exact integral of the interpolant from x_i to x, with x in [x_i, x_{i+1}].
  double partial_integral(std::size_t i, double x) const;
  /// Index i with x in [x_i, x_{i+1}], clamped to the end intervals.
  std::size_t interval_of(double x) const;

  std::span<const double> xs() const noexcept { return xs_; }
  std::span<const double> ys() const noexcept { return ys_; }
  std::span<const double> slopes() const noexcept { return d_; }

 private:
  std::vector<double> xs_, ys_, d_;
};

}  // namespace ldgas::numerics
