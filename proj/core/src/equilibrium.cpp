#include "ldgas/equilibrium.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "ldgas/error.hpp"
#include "ldgas/numerics.hpp"

namespace ldgas {

namespace {

constexpr double kPi = std::numbers::pi;

// Moment conditions for a soft-soft support centred at c with half-width r:
//   <W'(c + r u)> = 0,   <r u W'(c + r u)> = 1,
// averages taken against the arcsine law on [-1, 1].
struct SoftSoftSystem {
  Polynomial wp, wpp;
  std::vector<double> nodes;

  explicit SoftSoftSystem(const Polynomial& w_prime)
      : wp(w_prime), wpp(w_prime.derivative()),
        nodes(numerics::chebyshev_nodes(std::max(2, w_prime.degree() + 3))) {}

  std::array<double, 2> residual(double c, double r) const {
    double g0 = 0.0, g1 = 0.0;
    for (double u : nodes) {
      const double v = wp(c + r * u);
      g0 += v;
      g1 += r * u * v;
    }
    const double n = static_cast<double>(nodes.size());
    return {g0 / n, g1 / n - 1.0};
  }

  // Jacobian d(g0, g1)/d(c, r), row-major.
  std::array<double, 4> jacobian(double c, double r) const {
    double j00 = 0, j01 = 0, j10 = 0, j11 = 0;
    for (double u : nodes) {
      const double x = c + r * u;
      const double v = wp(x), d = wpp(x);
      j00 += d;
      j01 += u * d;
      j10 += r * u * d;
      j11 += u * v + r * u * u * d;
    }
    const double n = static_cast<double>(nodes.size());
    return {j00 / n, j01 / n, j10 / n, j11 / n};
  }
};

double norm2(const std::array<double, 2>& g) { return std::hypot(g[0], g[1]); }

std::optional<std::pair<double, double>> newton_soft_soft(const SoftSoftSystem& sys, double c,
                                                          double r, int max_iter) {
  if (!(r > 0.0) || !std::isfinite(c)) return std::nullopt;
  auto g = sys.residual(c, r);
  for (int it = 0; it < max_iter; ++it) {
    const double scale = 1.0 + std::abs(c) + r;
    if (norm2(g) < 1e-15) return std::make_pair(c, r);
    const auto jac = sys.jacobian(c, r);
    const double det = jac[0] * jac[3] - jac[1] * jac[2];
    if (!(std::abs(det) > 0.0) || !std::isfinite(det)) return std::nullopt;
    const double dc = -(jac[3] * g[0] - jac[1] * g[1]) / det;
    const double dr = -(-jac[2] * g[0] + jac[0] * g[1]) / det;
    double step = 1.0;
    bool accepted = false;
    for (int k = 0; k < 40; ++k, step *= 0.5) {
      const double cn = c + step * dc, rn = r + step * dr;
      if (!(rn > 0.0)) continue;
      const auto gn = sys.residual(cn, rn);
      if (std::isfinite(gn[0]) && std::isfinite(gn[1]) && norm2(gn) < norm2(g)) {
        c = cn;
        r = rn;
        g = gn;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // Stalled at rounding level: accept if the residual is already tiny.
      if (norm2(g) < 1e-12) return std::make_pair(c, r);
      return std::nullopt;
    }
    if (std::abs(step * dc) + std::abs(step * dr) < 1e-16 * scale) return std::make_pair(c, r);
  }
  if (norm2(g) < 1e-12) return std::make_pair(c, r);
  return std::nullopt;
}

// Expands [x - step, x + step] until f changes sign; returns a bracket.
std::optional<std::pair<double, double>> bracket_outward(const std::function<double(double)>& f,
                                                         double x, double step) {
  const double fx = f(x);
  if (fx == 0.0) return std::make_pair(x, x);
  for (int k = 0; k < 80; ++k, step *= 2.0) {
    const double lo = x - step, hi = x + step;
    const double flo = f(lo), fhi = f(hi);
    if (std::isfinite(fhi) && (fhi > 0) != (fx > 0)) return std::make_pair(x, hi);
    if (std::isfinite(flo) && (flo > 0) != (fx > 0)) return std::make_pair(lo, x);
    if (step > 1e12) break;
  }
  return std::nullopt;
}

// Nested one-dimensional solve: for each r, c(r) zeroes g0; then r zeroes g1.
std::optional<std::pair<double, double>> nested_soft_soft(const SoftSoftSystem& sys, double c_guess,
                                                          double r_guess) {
  double c_last = c_guess;
  auto centre_for = [&](double r) -> std::optional<double> {
    auto g0 = [&](double c) { return sys.residual(c, r)[0]; };
    auto br = bracket_outward(g0, c_last, 1e-3 * (1.0 + r));
    if (!br) return std::nullopt;
    if (br->first == br->second) return br->first;
    auto root = numerics::find_root(g0, br->first, br->second, 1e-15);
    if (root) c_last = *root;
    return root;
  };
  auto h = [&](double r) {
    auto c = centre_for(r);
    if (!c) return std::numeric_limits<double>::quiet_NaN();
    return sys.residual(*c, r)[1];
  };
  // g1 = -1 at r -> 0; grow r until positive.
  double lo = std::max(1e-8, 1e-3 * r_guess);
  double hlo = h(lo);
  if (!std::isfinite(hlo)) return std::nullopt;
  double hi = std::max(r_guess, 2.0 * lo);
  double hhi = h(hi);
  // Modest growth: for concave-at-infinity continuations g1 is positive only
  // on a finite window of r that doubling can jump over.
  for (int k = 0; k < 200 && std::isfinite(hhi) && (hhi > 0) == (hlo > 0); ++k) {
    lo = hi;
    hlo = hhi;
    hi *= 1.25;
    hhi = h(hi);
  }
  if (!std::isfinite(hhi) || (hhi > 0) == (hlo > 0)) return std::nullopt;
  auto r = numerics::find_root(h, lo, hi, 1e-14);
  if (!r) return std::nullopt;
  auto c = centre_for(*r);
  if (!c) return std::nullopt;
  return std::make_pair(*c, *r);
}

struct Candidate {
  SupportInterval support;
  Polynomial numerator;
};

enum class Verdict { Valid, Negative, Rejected };

class Solver {
 public:
  Solver(const ConfinementPotential& w, std::optional<SupportInterval> warm, const SolverOptions& opt)
      : w_(w), wp_(w.v().derivative()), warm_(warm), opt_(opt), system_(wp_) {}

  EquilibriumMeasure run() {
    const Walls& walls = w_.walls();
    const bool lo = walls.lower().finite(), hi = walls.upper().finite();

    if (auto c = soft_soft()) consider(*c);
    if (!chosen_ && lo) {
      if (auto c = hard_soft()) consider(*c);
    }
    if (!chosen_ && hi) {
      if (auto c = soft_hard()) consider(*c);
    }
    if (!chosen_ && lo && hi) {
      const double a = walls.lower().value(), b = walls.upper().value();
      consider(Candidate{{a, b, EdgeType::Hard, EdgeType::Hard}, tricomi_numerator(wp_, a, b)});
    }
    if (chosen_) return EquilibriumMeasure(chosen_->support, chosen_->numerator, w_);

    std::ostringstream os;
    if (saw_negative_) {
      os << "no one-cut equilibrium for W = " << w_.v().to_string()
         << ": density turns negative inside the support";
      throw Error(ErrorCode::NoOneCut, os.str());
    }
    os << "edge equations did not converge for W = " << w_.v().to_string();
    throw Error(ErrorCode::NoConvergence, os.str());
  }

 private:
  double scale() const {
    const Walls& walls = w_.walls();
    double s = 1.0;
    if (walls.lower().finite()) s = std::max(s, std::abs(walls.lower().value()));
    if (walls.upper().finite()) s = std::max(s, std::abs(walls.upper().value()));
    return s;
  }

  std::optional<Candidate> soft_soft() {
    if (wp_.degree() < 1) return std::nullopt;  // constant field: no soft pair
    std::optional<std::pair<double, double>> cr;
    if (warm_) {
      const auto& ws = *warm_;
      cr = newton_soft_soft(system_, ws.centre(), ws.half_width(), opt_.max_newton_iterations);
    }
    if (!cr) {
      double c0 = warm_ ? warm_->centre() : 0.0;
      double r0 = warm_ ? warm_->half_width() : 1.0;
      if (!warm_) {
        if (auto br = bracket_outward([&](double x) { return wp_(x); }, 0.0, 1e-3)) {
          if (br->first == br->second) {
            c0 = br->first;
          } else if (auto root = numerics::find_root([&](double x) { return wp_(x); }, br->first,
                                                     br->second)) {
            c0 = *root;
          }
        }
      }
      if (auto rough = nested_soft_soft(system_, c0, r0)) {
        cr = newton_soft_soft(system_, rough->first, rough->second, opt_.max_newton_iterations);
        if (!cr) cr = rough;
      }
    }
    if (!cr) return std::nullopt;
    const double c = cr->first, r = cr->second;
    return Candidate{{c - r, c + r, EdgeType::Soft, EdgeType::Soft},
                     tricomi_numerator(wp_, c - r, c + r)};
  }

  // Soft edge found by marching outward from the pinned edge until the
  // numerator at the moving edge changes sign.
  std::optional<double> moving_edge(double pinned, double direction, std::optional<double> limit) {
    auto g = [&](double e) {
      const double a = direction > 0 ? pinned : e;
      const double b = direction > 0 ? e : pinned;
      return tricomi_numerator(wp_, a, b)(e);
    };
    double prev = pinned;
    double prev_value = 1.0;  // R at the moving edge tends to 1 as the support shrinks
    double step = 1e-3 * scale();
    for (int k = 0; k < 200; ++k, step *= 1.5) {
      double next = pinned + direction * step;
      bool at_limit = false;
      if (limit && direction * (next - *limit) >= 0.0) {
        next = *limit;
        at_limit = true;
      }
      const double value = g(next);
      if (!std::isfinite(value)) return std::nullopt;
      if (value == 0.0) return next;
      if ((value > 0) != (prev_value > 0)) {
        auto root = numerics::find_root(g, std::min(prev, next), std::max(prev, next), 1e-15);
        return root;
      }
      prev = next;
      prev_value = value;
      if (at_limit || step > 1e12) break;
    }
    return std::nullopt;
  }

  std::optional<Candidate> hard_soft() {
    const Walls& walls = w_.walls();
    const double a = walls.lower().value();
    std::optional<double> limit;
    if (walls.upper().finite()) limit = walls.upper().value();
    auto b = moving_edge(a, +1.0, limit);
    if (!b) return std::nullopt;
    return Candidate{{a, *b, EdgeType::Hard, EdgeType::Soft}, tricomi_numerator(wp_, a, *b)};
  }

  std::optional<Candidate> soft_hard() {
    const Walls& walls = w_.walls();
    const double b = walls.upper().value();
    std::optional<double> limit;
    if (walls.lower().finite()) limit = walls.lower().value();
    auto a = moving_edge(b, -1.0, limit);
    if (!a) return std::nullopt;
    return Candidate{{*a, b, EdgeType::Soft, EdgeType::Hard}, tricomi_numerator(wp_, *a, b)};
  }

  Verdict check(const Candidate& cand) const {
    const auto& s = cand.support;
    if (!(s.b > s.a) || !std::isfinite(s.a) || !std::isfinite(s.b)) return Verdict::Rejected;
    const Walls& walls = w_.walls();
    const double tol = 1e-12 * scale();
    if (walls.lower().finite() && s.a < walls.lower().value() - tol) return Verdict::Rejected;
    if (walls.upper().finite() && s.b > walls.upper().value() + tol) return Verdict::Rejected;

    const double c = s.centre(), r = s.half_width();
    // Hard edges need a nonnegative numerator; compare on the density scale.
    const double rho_scale = 1.0 / (kPi * r);
    if (s.edge_a == EdgeType::Hard && cand.numerator(s.a) * rho_scale < -opt_.nonnegativity_tol)
      return Verdict::Rejected;
    if (s.edge_b == EdgeType::Hard && cand.numerator(s.b) * rho_scale < -opt_.nonnegativity_tol)
      return Verdict::Rejected;

    const int n = opt_.sample_points;
    for (int j = 0; j < n; ++j) {
      const double theta = (2.0 * j + 1.0) * kPi / (2.0 * n);
      const double x = c + r * std::cos(theta);
      const double rho = cand.numerator(x) / (kPi * r * std::sin(theta));
      if (rho < -opt_.nonnegativity_tol) return Verdict::Negative;
    }
    return Verdict::Valid;
  }

  void consider(const Candidate& cand) {
    if (chosen_) return;
    switch (check(cand)) {
      case Verdict::Valid: chosen_ = cand; break;
      case Verdict::Negative: saw_negative_ = true; break;
      case Verdict::Rejected: break;
    }
  }

  const ConfinementPotential& w_;
  Polynomial wp_;
  std::optional<SupportInterval> warm_;
  SolverOptions opt_;
  SoftSoftSystem system_;
  std::optional<Candidate> chosen_;
  bool saw_negative_ = false;
};

}  // namespace

Polynomial tricomi_numerator(const Polynomial& w_prime, double a, double b) {
  const double c = 0.5 * (a + b), r = 0.5 * (b - a);
  const Polynomial d = w_prime.shifted(c);
  const int deg = d.degree();
  // sqrt(w^2 - r^2) = w * sum_k e_k r^{2k} w^{-2k}, e_k = (-1)^k binom(1/2, k).
  std::vector<double> e(static_cast<std::size_t>(std::max(deg, 0) / 2 + 2));
  e[0] = 1.0;
  for (std::size_t k = 0; k + 1 < e.size(); ++k)
    e[k + 1] = e[k] * (static_cast<double>(k) - 0.5) / static_cast<double>(k + 1);

  std::vector<double> poly(static_cast<std::size_t>(std::max(deg + 2, 1)), 0.0);
  const double r2 = r * r;
  for (int j = 0; j <= deg; ++j) {
    double rpow = 1.0;
    for (int k = 0; j + 1 - 2 * k >= 0; ++k) {
      poly[static_cast<std::size_t>(j + 1 - 2 * k)] +=
          d.coefficient(j) * e[static_cast<std::size_t>(k)] * rpow;
      rpow *= r2;
    }
  }
  for (double& v : poly) v = -v;
  poly[0] += 1.0;
  return Polynomial(std::move(poly)).shifted(-c);
}

EquilibriumMeasure::EquilibriumMeasure(SupportInterval support, Polynomial numerator,
                                       ConfinementPotential source_potential)
    : support_(support), numerator_(std::move(numerator)), source_(std::move(source_potential)) {
  const double c = support_.centre(), r = support_.half_width();
  alpha_ = numerics::chebyshev_coefficients([&](double u) { return numerator_(c + r * u); },
                                            std::max(numerator_.degree(), 0));
}

double EquilibriumMeasure::cdf(double x) const {
  if (x <= support_.a) return 0.0;
  if (x >= support_.b) return alpha_.empty() ? 0.0 : alpha_[0];
  const double u = (x - support_.centre()) / support_.half_width();
  const double theta = std::acos(std::clamp(u, -1.0, 1.0));
  double acc = alpha_[0] * (kPi - theta);
  for (std::size_t k = 1; k < alpha_.size(); ++k)
    acc -= alpha_[k] * std::sin(static_cast<double>(k) * theta) / static_cast<double>(k);
  return acc / kPi;
}

std::vector<double> EquilibriumMeasure::quantiles(int n) const {
  std::vector<double> q(static_cast<std::size_t>(n));
  const double c = support_.centre(), r = support_.half_width();
  for (int i = 0; i < n; ++i) {
    const double target = (i + 0.5) / n;
    auto f = [&](double theta) { return cdf(c + r * std::cos(theta)) - target; };
    auto theta = numerics::find_root(f, 0.0, kPi, 1e-14);
    q[static_cast<std::size_t>(i)] = c + r * std::cos(theta.value_or(kPi * (1.0 - target)));
  }
  return q;
}

double EquilibriumMeasure::log_potential(double x) const {
  const double c = support_.centre(), r = support_.half_width();
  const double u = (x - c) / r;
  if (std::abs(u) <= 1.0) {
    // log|u - v| = log(1/2) - sum_k (2/k) T_k(u) T_k(v) on [-1, 1].
    double acc = alpha_[0] * std::log(0.5 * r);
    double tkm1 = 1.0, tk = u;
    for (std::size_t k = 1; k < alpha_.size(); ++k) {
      acc -= alpha_[k] * tk / static_cast<double>(k);
      const double next = 2.0 * u * tk - tkm1;
      tkm1 = tk;
      tk = next;
    }
    return acc;
  }
  // Outside: log|u - v| = log(xi/2) - sum_k (2/k) (sign u)^k xi^-k T_k(v).
  const double au = std::abs(u);
  const double xi = au + std::sqrt(au * au - 1.0);
  const double sgn = u > 0 ? 1.0 : -1.0;
  double acc = alpha_[0] * std::log(0.5 * r * xi);
  double p = 1.0;
  for (std::size_t k = 1; k < alpha_.size(); ++k) {
    p *= sgn / xi;
    acc -= alpha_[k] * p / static_cast<double>(k);
  }
  return acc;
}

EquilibriumMeasure solve_one_cut(const ConfinementPotential& w, const SolverOptions& options) {
  return Solver(w, std::nullopt, options).run();
}

EquilibriumMeasure solve_one_cut(const ConfinementPotential& w, const EquilibriumMeasure* warm_start,
                                 const SolverOptions& options) {
  std::optional<SupportInterval> hint;
  if (warm_start) hint = warm_start->support();
  return Solver(w, hint, options).run();
}

EquilibriumMeasure solve_one_cut(const ConfinementPotential& w, const SupportInterval& hint,
                                 const SolverOptions& options) {
  return Solver(w, hint, options).run();
}

DensityValue density_at(const EquilibriumMeasure& rho, double x) {
  const auto& s = rho.support();
  if (x < s.a || x > s.b) return 0.0;
  if (x == s.a || x == s.b) {
    const EdgeType type = x == s.a ? s.edge_a : s.edge_b;
    if (type == EdgeType::Soft) return 0.0;
    return EdgeSingularity{rho.numerator()(x) / (kPi * std::sqrt(s.b - s.a)), -0.5};
  }
  return rho.numerator()(x) / (kPi * std::sqrt((s.b - x) * (x - s.a)));
}

double density(const EquilibriumMeasure& rho, double x) {
  const auto v = density_at(rho, x);
  if (const double* d = std::get_if<double>(&v)) return *d;
  return std::numeric_limits<double>::infinity();
}

double statistic_value(const EquilibriumMeasure& rho, const Polynomial& f) {
  const int deg = std::max(f.degree(), 0) + std::max(rho.numerator().degree(), 0);
  const int n = deg / 2 + 2;
  const double c = rho.support().centre(), r = rho.support().half_width();
  double acc = 0.0;
  for (double u : numerics::chebyshev_nodes(n)) {
    const double x = c + r * u;
    acc += f(x) * rho.numerator()(x);
  }
  return acc / n;
}

double statistic_value(const EquilibriumMeasure& rho, const LinearStatistic& f) {
  return statistic_value(rho, f.f());
}

double interaction_energy(const EquilibriumMeasure& rho) {
  // With rho(c + r u) du = sum_k alpha_k T_k(u) / (pi sqrt(1-u^2)) du and
  // log|u - v| = log(1/2) - sum_k (2/k) T_k(u) T_k(v), the double integral
  // is alpha_0^2 log(r/2) - sum_k alpha_k^2 / (2k).
  const auto& alpha = rho.chebyshev_numerator();
  const double r = rho.support().half_width();
  double log_energy = alpha[0] * alpha[0] * std::log(0.5 * r);
  for (std::size_t k = 1; k < alpha.size(); ++k)
    log_energy -= alpha[k] * alpha[k] / (2.0 * static_cast<double>(k));
  return -0.5 * log_energy;
}

double mean_field_energy(const EquilibriumMeasure& rho, const Polynomial& potential) {
  return interaction_energy(rho) + statistic_value(rho, potential);
}

double mean_field_energy(const EquilibriumMeasure& rho) {
  return mean_field_energy(rho, rho.source_potential().v());
}

double euler_lagrange_residual(const EquilibriumMeasure& rho, int points) {
  const double c = rho.support().centre(), r = rho.support().half_width();
  const auto& w = rho.source_potential().v();
  std::vector<double> phi;
  phi.reserve(static_cast<std::size_t>(points));
  for (double u : numerics::chebyshev_nodes(points)) {
    const double x = c + r * u;
    phi.push_back(rho.log_potential(x) - w(x));
  }
  double mean = 0.0;
  for (double v : phi) mean += v;
  mean /= static_cast<double>(phi.size());
  double var = 0.0;
  for (double v : phi) var += (v - mean) * (v - mean);
  return std::sqrt(var / static_cast<double>(phi.size() - 1));
}

double min_density(const EquilibriumMeasure& rho, int points) {
  const double c = rho.support().centre(), r = rho.support().half_width();
  double lowest = std::numeric_limits<double>::infinity();
  for (int j = 0; j < points; ++j) {
    const double theta = (2.0 * j + 1.0) * kPi / (2.0 * points);
    const double x = c + r * std::cos(theta);
    lowest = std::min(lowest, rho.numerator()(x) / (kPi * r * std::sin(theta)));
  }
  return lowest;
}

}  // namespace ldgas
