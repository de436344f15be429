#include "ldgas/numerics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ldgas::numerics {

std::vector<double> chebyshev_nodes(int n) {
  std::vector<double> u(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) u[static_cast<std::size_t>(j)] = std::cos((2.0 * j + 1.0) * std::numbers::pi / (2.0 * n));
  return u;
}

std::vector<double> chebyshev_coefficients(const std::function<double(double)>& g, int degree) {
  if (degree < 0) return {};
  const int n = degree + 1;
  std::vector<double> values(static_cast<std::size_t>(n));
  std::vector<double> theta(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    theta[static_cast<std::size_t>(j)] = (2.0 * j + 1.0) * std::numbers::pi / (2.0 * n);
    values[static_cast<std::size_t>(j)] = g(std::cos(theta[static_cast<std::size_t>(j)]));
  }
  std::vector<double> alpha(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j)
      acc += values[static_cast<std::size_t>(j)] * std::cos(k * theta[static_cast<std::size_t>(j)]);
    alpha[static_cast<std::size_t>(k)] = (k == 0 ? 1.0 : 2.0) * acc / n;
  }
  return alpha;
}

double chebyshev_eval(std::span<const double> alpha, double u) noexcept {
  double b1 = 0.0, b2 = 0.0;
  for (std::size_t k = alpha.size(); k-- > 1;) {
    const double b0 = 2.0 * u * b1 - b2 + alpha[k];
    b2 = b1;
    b1 = b0;
  }
  return (alpha.empty() ? 0.0 : alpha[0]) + u * b1 - b2;
}

std::optional<double> find_root(const std::function<double(double)>& f, double lo, double hi,
                                double x_tol, int max_iter) {
  double a = lo, b = hi;
  double fa = f(a), fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if (!std::isfinite(fa) || !std::isfinite(fb) || (fa > 0) == (fb > 0)) return std::nullopt;
  double c = a, fc = fa, d = b - a, e = d;
  for (int iter = 0; iter < max_iter; ++iter) {
    if ((fb > 0) == (fc > 0)) {
      c = a;
      fc = fa;
      d = e = b - a;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b; b = c; c = a;
      fa = fb; fb = fc; fc = fa;
    }
    const double tol = 2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) + 0.5 * x_tol;
    const double m = 0.5 * (c - b);
    if (std::abs(m) <= tol || fb == 0.0) return b;
    if (std::abs(e) >= tol && std::abs(fa) > std::abs(fb)) {
      double p, q, r;
      const double s = fb / fa;
      if (a == c) {
        p = 2.0 * m * s;
        q = 1.0 - s;
      } else {
        q = fa / fc;
        r = fb / fc;
        p = s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0));
        q = (q - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0) q = -q;
      p = std::abs(p);
      if (2.0 * p < std::min(3.0 * m * q - std::abs(tol * q), std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = m;
        e = m;
      }
    } else {
      d = m;
      e = m;
    }
    a = b;
    fa = fb;
    b += (std::abs(d) > tol) ? d : (m > 0 ? tol : -tol);
    fb = f(b);
    if (!std::isfinite(fb)) return std::nullopt;
  }
  return b;
}

namespace {

double simpson_step(const std::function<double(double)>& f, double a, double b, double fa,
                    double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        int max_depth) {
  if (a == b) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

std::vector<double> fd_weights(double z, std::span<const double> x, int order) {
  const int n = static_cast<int>(x.size()) - 1;
  const int m = order;
  // c[i][k]: weight of x_i for the k-th derivative.
  std::vector<std::vector<double>> c(static_cast<std::size_t>(n + 1),
                                     std::vector<double>(static_cast<std::size_t>(m + 1), 0.0));
  double c1 = 1.0;
  double c4 = x[0] - z;
  c[0][0] = 1.0;
  for (int i = 1; i <= n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[static_cast<std::size_t>(i)] - z;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(j)];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          c[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
              c1 * (k * c[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(k - 1)] -
                    c5 * c[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(k)]) / c2;
        c[static_cast<std::size_t>(i)][0] = -c1 * c5 * c[static_cast<std::size_t>(i - 1)][0] / c2;
      }
      for (int k = mn; k >= 1; --k)
        c[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] =
            (c4 * c[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] -
             k * c[static_cast<std::size_t>(j)][static_cast<std::size_t>(k - 1)]) / c3;
      c[static_cast<std::size_t>(j)][0] = c4 * c[static_cast<std::size_t>(j)][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(static_cast<std::size_t>(n + 1));
  for (int i = 0; i <= n; ++i) w[static_cast<std::size_t>(i)] = c[static_cast<std::size_t>(i)][static_cast<std::size_t>(m)];
  return w;
}

std::vector<double> fit_derivatives(std::span<const double> x, std::span<const double> y, double x0,
                                    int degree, int max_order) {
  const auto n = static_cast<Eigen::Index>(x.size());
  if (n < degree + 1) throw std::invalid_argument("fit_derivatives: too few points");
  double scale = 0.0;
  for (double xi : x) scale = std::max(scale, std::abs(xi - x0));
  if (scale == 0.0) scale = 1.0;
  Eigen::MatrixXd a(n, degree + 1);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = (x[static_cast<std::size_t>(i)] - x0) / scale;
    double p = 1.0;
    for (int k = 0; k <= degree; ++k) {
      a(i, k) = p;
      p *= t;
    }
    b(i) = y[static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(b);
  std::vector<double> out(static_cast<std::size_t>(max_order + 1), 0.0);
  double factorial = 1.0;
  for (int k = 0; k <= max_order && k <= degree; ++k) {
    if (k > 0) factorial *= k;
    out[static_cast<std::size_t>(k)] = coef(k) * factorial / std::pow(scale, k);
  }
  return out;
}

MonotoneCubic::MonotoneCubic(std::vector<double> xs, std::vector<double> ys,
                             std::span<const std::size_t> breaks)
    : xs_(std::move(xs)), ys_(std::move(ys)), d_(xs_.size(), 0.0) {
  const std::size_t n = xs_.size();
  if (n < 2 || ys_.size() != n) throw std::invalid_argument("MonotoneCubic: need >= 2 matching points");
  for (std::size_t i = 1; i < n; ++i)
    if (!(xs_[i] > xs_[i - 1])) throw std::invalid_argument("MonotoneCubic: abscissae must increase");

  // Segment boundaries [seg_lo, seg_hi] that slope stencils stay inside.
  std::vector<std::size_t> cuts{0};
  for (std::size_t b : breaks)
    if (b > 0 && b + 1 < n) cuts.push_back(b);
  cuts.push_back(n - 1);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const std::size_t lo = cuts[s], hi = cuts[s + 1];
    const std::size_t len = hi - lo + 1;
    for (std::size_t i = lo; i <= hi; ++i) {
      const std::size_t width = std::min<std::size_t>(5, len);
      std::size_t start = (i >= lo + width / 2) ? i - width / 2 : lo;
      if (start + width - 1 > hi) start = hi + 1 - width;
      const auto w = fd_weights(xs_[i], std::span<const double>(xs_).subspan(start, width), 1);
      double slope = 0.0;
      for (std::size_t k = 0; k < width; ++k) slope += w[k] * ys_[start + k];
      // A break node is shared by two segments: average the one-sided
      // slopes, or flatten if they disagree in sign.
      if (i == lo && s > 0) {
        const double prev = d_[i];
        d_[i] = (prev > 0) == (slope > 0) ? 0.5 * (prev + slope) : 0.0;
      } else {
        d_[i] = slope;
      }
    }
  }

  // Fritsch-Carlson limiter.
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double delta = (ys_[i + 1] - ys_[i]) / (xs_[i + 1] - xs_[i]);
    if (delta == 0.0) {
      d_[i] = d_[i + 1] = 0.0;
      continue;
    }
    if ((d_[i] > 0) != (delta > 0) && d_[i] != 0.0) d_[i] = 0.0;
    if ((d_[i + 1] > 0) != (delta > 0) && d_[i + 1] != 0.0) d_[i + 1] = 0.0;
    const double alpha = d_[i] / delta, beta = d_[i + 1] / delta;
    const double r2 = alpha * alpha + beta * beta;
    if (r2 > 9.0) {
      const double tau = 3.0 / std::sqrt(r2);
      d_[i] = tau * alpha * delta;
      d_[i + 1] = tau * beta * delta;
    }
  }
}

std::size_t MonotoneCubic::interval_of(double x) const {
  const std::size_t n = xs_.size();
  if (x <= xs_.front()) return 0;
  if (x >= xs_.back()) return n - 2;
  return static_cast<std::size_t>(std::upper_bound(xs_.begin(), xs_.end(), x) - xs_.begin()) - 1;
}

double MonotoneCubic::operator()(double x) const {
  const std::size_t i = interval_of(x);
  const double h = xs_[i + 1] - xs_[i];
  const double t = (x - xs_[i]) / h;
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
  return h00 * ys_[i] + h10 * h * d_[i] + h01 * ys_[i + 1] + h11 * h * d_[i + 1];
}

double MonotoneCubic::interval_integral(std::size_t i) const {
  const double h = xs_[i + 1] - xs_[i];
  return h * 0.5 * (ys_[i] + ys_[i + 1]) + h * h * (d_[i] - d_[i + 1]) / 12.0;
}

double MonotoneCubic::partial_integral(std::size_t i, double x) const {
  const double h = xs_[i + 1] - xs_[i];
  const double t = (x - xs_[i]) / h;
  const double t2 = t * t, t3 = t2 * t, t4 = t3 * t;
  const double i00 = 0.5 * t4 - t3 + t, i10 = 0.25 * t4 - 2.0 * t3 / 3.0 + 0.5 * t2;
  const double i01 = -0.5 * t4 + t3, i11 = 0.25 * t4 - t3 / 3.0;
  return h * (i00 * ys_[i] + i10 * h * d_[i] + i01 * ys_[i + 1] + i11 * h * d_[i + 1]);
}

}  // namespace ldgas::numerics
