#include "ldgas/duality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ldgas/error.hpp"
#include "parallel.hpp"

namespace ldgas {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Point {
  double s;
  double x;
  SupportInterval support;
};

Point evaluate(const CurveProblem& problem, double s, const std::optional<SupportInterval>& hint,
               const CurveOptions& options) {
  const auto rho = tilted_measure(problem, s, hint, options.continue_past_confinement, options.solver);
  return {s, statistic_value(rho, problem.statistic), rho.support()};
}

std::optional<Point> try_evaluate(const CurveProblem& problem, double s,
                                  const std::optional<SupportInterval>& hint,
                                  const CurveOptions& options, ErrorCode* failure = nullptr) {
  try {
    return evaluate(problem, s, hint, options);
  } catch (const Error& e) {
    if (failure) *failure = e.code();
    return std::nullopt;
  }
}

double bracket_width(double s, const CurveOptions& options) {
  return options.switch_tolerance * (1.0 + std::abs(s));
}

struct SweepResult {
  std::vector<Point> points;  // ordered away from s = 0, excluding it
  std::vector<double> switches;
  bool truncated = false;
  double infeasible = 0.0;
  ErrorCode failure = ErrorCode::NoConvergence;
};

// Follows x*(s) from the origin through `targets` (monotone away from 0),
// bracketing regime switches and stopping at the first infeasible point.
SweepResult sweep(const CurveProblem& problem, const Point& origin, const std::vector<double>& targets,
                  const CurveOptions& options) {
  SweepResult out;
  Point last = origin;
  for (double s : targets) {
    auto next = try_evaluate(problem, s, last.support, options, &out.failure);
    if (!next) {
      double ok = last.s, bad = s;
      std::optional<Point> best;
      while (std::abs(bad - ok) > bracket_width(bad, options)) {
        const double mid = 0.5 * (ok + bad);
        if (auto p = try_evaluate(problem, mid, best ? best->support : last.support, options,
                                  &out.failure)) {
          best = p;
          ok = mid;
        } else {
          bad = mid;
        }
      }
      if (best && std::abs(best->s - last.s) > bracket_width(best->s, options)) {
        // The boundary may sit past a regime switch.
        if (!best->support.same_regime(last.support)) {
          auto refined = sweep(problem, last, {best->s}, options);
          out.points.insert(out.points.end(), refined.points.begin(), refined.points.end());
          out.switches.insert(out.switches.end(), refined.switches.begin(), refined.switches.end());
        } else {
          out.points.push_back(*best);
        }
      }
      out.truncated = true;
      out.infeasible = bad;
      return out;
    }
    for (int guard = 0; guard < 16 && !next->support.same_regime(last.support); ++guard) {
      // Keep `lo` in the old regime and `hi` in a different one.
      Point lo = last, hi = *next;
      while (std::abs(hi.s - lo.s) > bracket_width(hi.s, options)) {
        const double mid = 0.5 * (lo.s + hi.s);
        auto p = try_evaluate(problem, mid, lo.support, options);
        if (!p) break;
        if (p->support.same_regime(lo.support)) {
          lo = *p;
        } else {
          hi = *p;
        }
      }
      if (hi.s == next->s) {
        out.switches.push_back(next->s);
        break;
      }
      out.points.push_back(hi);
      out.switches.push_back(hi.s);
      last = hi;
    }
    out.points.push_back(*next);
    last = *next;
  }
  return out;
}

void refine(const CurveProblem& problem, std::vector<Point>& pts, std::vector<double>& switches,
            const CurveOptions& options) {
  for (int pass = 0; pass < options.refine_passes; ++pass) {
    if (pts.size() < 3) return;
    std::vector<double> dx(pts.size() - 1);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) dx[i] = std::abs(pts[i + 1].x - pts[i].x);
    std::vector<double> sorted = dx;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2),
                     sorted.end());
    const double median = sorted[sorted.size() / 2];
    if (!(median > 0.0)) return;

    std::vector<Point> out;
    out.reserve(pts.size() * 2);
    bool changed = false;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      out.push_back(pts[i]);
      const double width = pts[i + 1].s - pts[i].s;
      if (dx[i] > options.refine_factor * median && width > options.refine_min_width) {
        auto mid = try_evaluate(problem, pts[i].s + 0.5 * width, pts[i].support, options);
        if (mid) {
          if (!mid->support.same_regime(pts[i].support) &&
              !mid->support.same_regime(pts[i + 1].support)) {
            switches.push_back(mid->s);
          }
          out.push_back(*mid);
          changed = true;
        }
      }
    }
    out.push_back(pts.back());
    pts = std::move(out);
    if (!changed) return;
  }
}

std::vector<double> uniform_grid(double lo, double hi, int n) {
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / (n - 1);
    g[static_cast<std::size_t>(i)] = (i == n - 1) ? hi : lo + (hi - lo) * t;
  }
  return g;
}

}  // namespace

EquilibriumMeasure tilted_measure(const CurveProblem& problem, double s,
                                  const std::optional<SupportInterval>& hint,
                                  bool continue_past_confinement, const SolverOptions& solver) {
  const ConfinementPotential w = continue_past_confinement
                                     ? tilt_local(problem.potential, problem.statistic, s)
                                     : tilt(problem.potential, problem.statistic, s);
  if (hint) return solve_one_cut(w, *hint, solver);
  return solve_one_cut(w, solver);
}

double tilted_statistic(const CurveProblem& problem, double s,
                        const std::optional<SupportInterval>& hint, bool continue_past_confinement) {
  return statistic_value(tilted_measure(problem, s, hint, continue_past_confinement), problem.statistic);
}

DualityCurve build_curve(const ConfinementPotential& v, const LinearStatistic& f, double s_min,
                         double s_max, int n_points, const CurveOptions& options) {
  if (!(s_min <= 0.0 && 0.0 <= s_max) || !(s_min < s_max) || n_points < 2) {
    std::ostringstream os;
    os << "invalid s-grid [" << s_min << ", " << s_max << "] with " << n_points
       << " points: need s_min <= 0 <= s_max, s_min < s_max and at least 2 points";
    throw Error(ErrorCode::InvalidArgument, os.str());
  }
  const CurveProblem problem{v, f};
  const double merge = 1e-12 * (s_max - s_min);
  std::vector<double> up, down;
  for (double s : uniform_grid(s_min, s_max, n_points)) {
    if (s > merge) up.push_back(s);
    if (s < -merge) down.push_back(s);
  }
  std::reverse(down.begin(), down.end());

  const Point origin = evaluate(problem, 0.0, std::nullopt, options);
  SweepResult sweeps[2];
  const std::vector<double>* targets[2] = {&down, &up};
  detail::parallel_for(2, options.threads,
                       [&](std::size_t k) { sweeps[k] = sweep(problem, origin, *targets[k], options); });

  std::vector<Point> pts(sweeps[0].points.rbegin(), sweeps[0].points.rend());
  pts.push_back(origin);
  pts.insert(pts.end(), sweeps[1].points.begin(), sweeps[1].points.end());
  std::vector<double> switches = sweeps[0].switches;
  switches.insert(switches.end(), sweeps[1].switches.begin(), sweeps[1].switches.end());

  refine(problem, pts, switches, options);

  DualityCurve curve;
  curve.problem = problem;
  curve.options = options;
  for (const auto& p : pts) {
    curve.s_grid.push_back(p.s);
    curve.x_values.push_back(p.x);
    curve.supports.push_back(p.support);
  }
  curve.j_values.assign(pts.size(), kNaN);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].s == 0.0) curve.zero_index = i;
    if (std::find(switches.begin(), switches.end(), pts[i].s) != switches.end())
      curve.kinks.push_back(i);
  }
  if (sweeps[0].truncated) {
    curve.lower_flag = DomainFlag::DomainBoundary;
    curve.lower_infeasible = sweeps[0].infeasible;
    curve.lower_failure = sweeps[0].failure;
  }
  if (sweeps[1].truncated) {
    curve.upper_flag = DomainFlag::DomainBoundary;
    curve.upper_infeasible = sweeps[1].infeasible;
    curve.upper_failure = sweeps[1].failure;
  }
  return curve;
}

DualityCurve integrate_J(DualityCurve curve) {
  const std::size_t n = curve.size();
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "integrate_J needs at least two grid points");
  const auto& opt = curve.options;

  std::optional<numerics::MonotoneCubic> fallback;
  auto interpolated = [&](std::size_t i) {
    if (!fallback) {
      // x* decreases in s; the interpolant is built on -x* to stay generic.
      std::vector<double> neg(curve.x_values.size());
      for (std::size_t k = 0; k < neg.size(); ++k) neg[k] = -curve.x_values[k];
      fallback.emplace(curve.s_grid, neg, curve.kinks);
    }
    return -fallback->interval_integral(i);
  };

  std::vector<double> pieces(n - 1, kNaN);
  std::vector<char> ok(n - 1, 0);
  if (curve.problem) {
    const CurveProblem& problem = *curve.problem;
    detail::parallel_for(n - 1, opt.threads, [&](std::size_t i) {
      const double a = curve.s_grid[i], b = curve.s_grid[i + 1];
      const SupportInterval& ha = curve.supports[i];
      const SupportInterval& hb = curve.supports[i + 1];
      const double mid = 0.5 * (a + b);
      auto f = [&](double s) {
        if (s == a) return curve.x_values[i];
        if (s == b) return curve.x_values[i + 1];
        const auto rho = tilted_measure(problem, s, s < mid ? ha : hb, opt.continue_past_confinement,
                                        opt.solver);
        return statistic_value(rho, problem.statistic);
      };
      try {
        pieces[i] = numerics::adaptive_simpson(f, a, b, opt.integration_tolerance);
        ok[i] = std::isfinite(pieces[i]);
      } catch (const Error&) {
        ok[i] = 0;
      }
    });
  }
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (!ok[i]) pieces[i] = interpolated(i);

  const std::size_t z = curve.zero_index;
  curve.j_values.assign(n, 0.0);
  for (std::size_t i = z; i + 1 < n; ++i) curve.j_values[i + 1] = curve.j_values[i] + pieces[i];
  for (std::size_t i = z; i-- > 0;) curve.j_values[i] = curve.j_values[i + 1] - pieces[i];
  return curve;
}

double evaluate_J(const DualityCurve& curve, double s) {
  const auto& g = curve.s_grid;
  if (g.size() < 2 || !(s >= g.front() && s <= g.back()))
    throw Error(ErrorCode::InvalidArgument, "s outside the curve range");
  std::size_t i = static_cast<std::size_t>(std::upper_bound(g.begin(), g.end(), s) - g.begin());
  i = std::min(i, g.size() - 1);
  if (i > 0 && s - g[i - 1] <= g[i] - s) --i;  // nearest node
  if (s == g[i]) return curve.j_values[i];
  if (curve.problem) {
    const auto& opt = curve.options;
    try {
      return curve.j_values[i] + numerics::adaptive_simpson(
                                     [&](double t) {
                                       const auto rho = tilted_measure(*curve.problem, t, curve.supports[i],
                                                                       opt.continue_past_confinement, opt.solver);
                                       return statistic_value(rho, curve.problem->statistic);
                                     },
                                     g[i], s, opt.integration_tolerance);
    } catch (const Error&) {
    }
  }
  std::vector<double> neg(curve.x_values.size());
  for (std::size_t k = 0; k < neg.size(); ++k) neg[k] = -curve.x_values[k];
  const numerics::MonotoneCubic spline(g, neg, curve.kinks);
  const std::size_t j = spline.interval_of(s);
  return curve.j_values[j] - spline.partial_integral(j, s);
}

double RateFunctionTable::s_star(double x) const {
  if (!interpolant) throw Error(ErrorCode::InvalidArgument, "rate table has no interpolant");
  return (*interpolant)(x);
}

double RateFunctionTable::psi(double x) const {
  if (!interpolant) throw Error(ErrorCode::InvalidArgument, "rate table has no interpolant");
  const std::size_t i = interpolant->interval_of(x);
  return psi_values[i] - interpolant->partial_integral(i, x);
}

RateFunctionTable invert_curve(const DualityCurve& curve) {
  const std::size_t n = curve.size();
  RateFunctionTable table;
  std::vector<std::size_t> breaks;
  for (std::size_t k = n; k-- > 0;) {
    const double x = curve.x_values[k], s = curve.s_grid[k];
    if (!table.x_grid.empty()) {
      const double prev_x = table.x_grid.back(), prev_s = table.s_star_values.back();
      const double tol = 1e-14 * (1.0 + std::abs(x));
      if (std::abs(x - prev_x) <= tol && std::abs(s - prev_s) <= 1e-12 * (1.0 + std::abs(s)))
        continue;  // duplicate sample
      if (!(x > prev_x + tol)) {
        std::ostringstream os;
        os << "x*(s) is not strictly decreasing near s = " << s
           << ": J is not strictly concave there, so the Legendre transform yields only its convex "
              "envelope";
        throw Error(ErrorCode::FlatSegment, os.str());
      }
    }
    if (std::find(curve.kinks.begin(), curve.kinks.end(), k) != curve.kinks.end())
      breaks.push_back(table.x_grid.size());
    table.x_grid.push_back(x);
    table.s_star_values.push_back(s);
  }
  if (table.x_grid.size() < 2)
    throw Error(ErrorCode::InvalidArgument, "curve has fewer than two distinct points");
  table.breaks = breaks;
  table.interpolant.emplace(table.x_grid, table.s_star_values, breaks);
  table.psi_values.assign(table.x_grid.size(), kNaN);
  table.x0 = curve.x_values[curve.zero_index];
  return table;
}

RateFunctionTable integrate_Psi(RateFunctionTable table, double x0) {
  if (!table.interpolant) table.interpolant.emplace(table.x_grid, table.s_star_values, table.breaks);
  const auto& spline = *table.interpolant;
  const std::size_t n = table.x_grid.size();
  table.x0 = x0;
  table.psi_values.assign(n, 0.0);
  // Grid nodes on either side of x0.
  const std::size_t i0 = spline.interval_of(x0);
  const double left_part = spline.partial_integral(i0, x0);  // from x_{i0} to x0
  const double right_part = spline.interval_integral(i0) - left_part;
  table.psi_values[i0] = left_part;                        // -int_{x0}^{x_{i0}} s*
  table.psi_values[i0 + 1] = -right_part;
  if (x0 == table.x_grid[i0]) table.psi_values[i0] = 0.0;
  if (x0 == table.x_grid[i0 + 1]) table.psi_values[i0 + 1] = 0.0;
  for (std::size_t i = i0 + 1; i + 1 < n; ++i)
    table.psi_values[i + 1] = table.psi_values[i] - spline.interval_integral(i);
  for (std::size_t i = i0; i-- > 0;)
    table.psi_values[i] = table.psi_values[i + 1] + spline.interval_integral(i);
  return table;
}

double legendre_check(const DualityCurve& curve, const RateFunctionTable& table) {
  double worst = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const double s = curve.s_grid[i], x = curve.x_values[i];
    const double r = std::abs(curve.j_values[i] - table.psi(x) - s * x);
    if (!(r <= worst)) worst = r;  // NaN propagates as the worst value
  }
  return worst;
}

std::vector<double> CumulantReport::scaled(double speed) const {
  std::vector<double> out(derivatives.size());
  for (std::size_t k = 0; k < derivatives.size(); ++k)
    out[k] = std::pow(-1.0 / speed, orders[k] - 1) * derivatives[k];
  return out;
}

CumulantReport cumulants(const ConfinementPotential& v, const LinearStatistic& f, int m_max,
                         const CumulantOptions& options) {
  if (m_max < 1) throw Error(ErrorCode::InvalidArgument, "cumulant order m_max must be >= 1");
  const CurveProblem problem{v, f};
  const auto rho0 = tilted_measure(problem, 0.0, std::nullopt, options.continue_past_confinement);
  const SupportInterval regime0 = rho0.support();

  CumulantReport report;
  for (int m = 1; m <= m_max; ++m) report.orders.push_back(m);
  report.derivatives.assign(static_cast<std::size_t>(m_max), kNaN);
  report.error_estimates.assign(static_cast<std::size_t>(m_max),
                                std::numeric_limits<double>::infinity());
  report.derivatives[0] = statistic_value(rho0, f);
  report.error_estimates[0] = 0.0;
  if (m_max == 1) return report;

  const int kmax = m_max - 1;          // highest derivative of x*
  const int reach = (kmax + 1) / 2;    // stencil half-width in steps
  const int levels = options.halvings + 1;
  bool any_valid = false;

  for (int attempt = 0; attempt <= options.max_step_reductions; ++attempt) {
    const double h = options.initial_step * std::ldexp(1.0, -attempt);
    // x*(j h / 2^l) for j = -reach..reach, l = 0..levels-1.
    std::vector<std::vector<double>> samples(static_cast<std::size_t>(levels));
    bool usable = true;
    for (int l = 0; l < levels && usable; ++l) {
      const double hl = std::ldexp(h, -l);
      auto& row = samples[static_cast<std::size_t>(l)];
      row.assign(static_cast<std::size_t>(2 * reach + 1), 0.0);
      for (int j = -reach; j <= reach && usable; ++j) {
        if (j == 0) {
          row[static_cast<std::size_t>(reach)] = report.derivatives[0];
          continue;
        }
        try {
          const auto rho = tilted_measure(problem, j * hl, regime0, options.continue_past_confinement);
          if (!rho.support().same_regime(regime0)) usable = false;
          row[static_cast<std::size_t>(j + reach)] = statistic_value(rho, f);
        } catch (const Error&) {
          usable = false;
        }
      }
    }
    if (!usable) continue;
    any_valid = true;

    bool all_converged = true;
    for (int k = 1; k <= kmax; ++k) {
      const int q = (k + 1) / 2;
      std::vector<double> nodes;
      for (int j = -q; j <= q; ++j) nodes.push_back(j);
      const auto w = numerics::fd_weights(0.0, nodes, k);
      // Richardson table over step halvings; the error expands in h^2.
      std::vector<std::vector<double>> t(static_cast<std::size_t>(levels));
      for (int l = 0; l < levels; ++l) {
        const double hl = std::ldexp(h, -l);
        double d = 0.0;
        for (int j = -q; j <= q; ++j)
          d += w[static_cast<std::size_t>(j + q)] * samples[static_cast<std::size_t>(l)][static_cast<std::size_t>(j + reach)];
        d /= std::pow(hl, k);
        auto& tl = t[static_cast<std::size_t>(l)];
        tl.push_back(d);
        for (int r = 1; r <= l; ++r) {
          const double factor = std::pow(4.0, r) - 1.0;
          const double prev = t[static_cast<std::size_t>(l - 1)][static_cast<std::size_t>(r - 1)];
          tl.push_back(tl[static_cast<std::size_t>(r - 1)] + (tl[static_cast<std::size_t>(r - 1)] - prev) / factor);
        }
      }
      const auto& last = t.back();
      const double value = last.back();
      const double err = levels > 1 ? std::abs(value - last[last.size() - 2]) : std::abs(value);
      const std::size_t m = static_cast<std::size_t>(k);  // index of order m = k + 1
      if (err < report.error_estimates[m]) {
        report.derivatives[m] = value;
        report.error_estimates[m] = err;
        report.step = h;
      }
      if (!(err <= options.relative_tolerance * std::abs(value) + options.absolute_tolerance))
        all_converged = false;
    }
    if (all_converged) break;
  }
  if (!any_valid) {
    std::ostringstream os;
    os << "J is not analytic at s = 0: every difference stencil down to step "
       << options.initial_step * std::ldexp(1.0, -options.max_step_reductions)
       << " crosses a change of edge regime or leaves the solution domain";
    throw Error(ErrorCode::NotAnalytic, os.str());
  }
  return report;
}

// Joint statistics.

namespace {

ConfinementPotential joint_potential(const ConfinementPotential& v, const LinearStatistic& f1,
                                     const LinearStatistic& f2, double s1, double s2) {
  return ConfinementPotential::make(v.v() + s1 * f1.f() + s2 * f2.f(), v.walls());
}

// Integral of g(t) over [a, b] where g is evaluated by a solver whose edge
// regime is reported alongside the value; pieces are split at regime changes.
template <class Eval>
double piecewise_integral(Eval&& eval, double a, double b, double tol) {
  if (a == b) return 0.0;
  constexpr int kProbe = 8;
  std::vector<double> cuts{a};
  auto [ga, ra] = eval(a);
  (void)ga;
  SupportInterval prev_regime = ra;
  double prev_t = a;
  for (int k = 1; k <= kProbe; ++k) {
    const double t = a + (b - a) * k / kProbe;
    auto [gt, rt] = eval(t);
    (void)gt;
    if (!rt.same_regime(prev_regime)) {
      double lo = prev_t, hi = t;
      while (std::abs(hi - lo) > 1e-13 * (1.0 + std::abs(hi))) {
        const double mid = 0.5 * (lo + hi);
        if (eval(mid).second.same_regime(prev_regime)) lo = mid;
        else hi = mid;
      }
      cuts.push_back(0.5 * (lo + hi));
    }
    prev_regime = rt;
    prev_t = t;
  }
  cuts.push_back(b);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    total += numerics::adaptive_simpson([&](double t) { return eval(t).first; }, cuts[i], cuts[i + 1],
                                        tol * std::abs(cuts[i + 1] - cuts[i]) / std::abs(b - a));
  return total;
}

std::size_t zero_position(const std::vector<double>& grid, const char* name) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw Error(ErrorCode::InvalidArgument, std::string(name) + " grid must be increasing");
    }
  }
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (grid[i] == 0.0) return i;
  throw Error(ErrorCode::InvalidArgument, std::string(name) + " grid must contain 0");
}

}  // namespace

EquilibriumMeasure JointSurface::measure(double s1, double s2,
                                         const std::optional<SupportInterval>& hint) const {
  const auto w = joint_potential(potential, f1, f2, s1, s2);
  if (hint) return solve_one_cut(w, *hint);
  return solve_one_cut(w);
}

JointSurface joint_build_surface(const ConfinementPotential& v, const LinearStatistic& f1,
                                 const LinearStatistic& f2, std::vector<double> s1_grid,
                                 std::vector<double> s2_grid, int threads) {
  JointSurface surf{std::move(s1_grid), std::move(s2_grid), {}, {}, {}, {}, 0, 0, v, f1, f2};
  surf.zero1 = zero_position(surf.s1_grid, "s1");
  surf.zero2 = zero_position(surf.s2_grid, "s2");
  const std::size_t n1 = surf.s1_grid.size(), n2 = surf.s2_grid.size();
  surf.x1.assign(n1 * n2, kNaN);
  surf.x2.assign(n1 * n2, kNaN);
  surf.supports.assign(n1 * n2, SupportInterval{});
  surf.feasible.assign(n1 * n2, 0);

  auto solve_node = [&](std::size_t i1, std::size_t i2, std::optional<SupportInterval>& hint) {
    const std::size_t k = surf.index(i1, i2);
    try {
      const auto rho = surf.measure(surf.s1_grid[i1], surf.s2_grid[i2], hint);
      surf.x1[k] = statistic_value(rho, f1);
      surf.x2[k] = statistic_value(rho, f2);
      surf.supports[k] = rho.support();
      surf.feasible[k] = 1;
      hint = rho.support();
    } catch (const Error&) {
      surf.feasible[k] = 0;
    }
  };

  // Axis s2 = 0 by continuation from the origin, then each column in s2.
  std::optional<SupportInterval> hint;
  solve_node(surf.zero1, surf.zero2, hint);
  const std::optional<SupportInterval> origin = hint;
  for (std::size_t i = surf.zero1 + 1; i < n1; ++i) solve_node(i, surf.zero2, hint);
  hint = origin;
  for (std::size_t i = surf.zero1; i-- > 0;) solve_node(i, surf.zero2, hint);

  detail::parallel_for(n1, threads, [&](std::size_t i1) {
    std::optional<SupportInterval> start;
    if (surf.feasible[surf.index(i1, surf.zero2)]) start = surf.supports[surf.index(i1, surf.zero2)];
    auto h = start;
    for (std::size_t j = surf.zero2 + 1; j < n2; ++j) solve_node(i1, j, h);
    h = start;
    for (std::size_t j = surf.zero2; j-- > 0;) solve_node(i1, j, h);
  });
  return surf;
}

JointTables joint_integrate(const JointSurface& surface, double mismatch_tolerance,
                            double integration_tolerance, int threads) {
  const std::size_t n1 = surface.s1_grid.size(), n2 = surface.s2_grid.size();
  for (char ok : surface.feasible)
    if (!ok) throw Error(ErrorCode::InvalidArgument, "joint surface has infeasible nodes");

  // Integral of x_which along the segment from (p1, p2) in direction axis.
  auto leg = [&](int which, int axis, double fixed, double a, double b,
                 const SupportInterval& hint) {
    auto eval = [&](double t) {
      const double s1 = axis == 1 ? t : fixed;
      const double s2 = axis == 1 ? fixed : t;
      const auto rho = surface.measure(s1, s2, hint);
      const double x = statistic_value(rho, which == 1 ? surface.f1 : surface.f2);
      return std::make_pair(x, rho.support());
    };
    return piecewise_integral(eval, a, b, integration_tolerance);
  };

  JointTables out;
  out.j_s1_first.assign(n1 * n2, 0.0);
  out.j_s2_first.assign(n1 * n2, 0.0);
  out.psi.assign(n1 * n2, 0.0);
  const auto& g1 = surface.s1_grid;
  const auto& g2 = surface.s2_grid;
  const std::size_t z1 = surface.zero1, z2 = surface.zero2;

  // Axis legs from the origin.
  std::vector<double> axis1(n1, 0.0), axis2(n2, 0.0);
  for (std::size_t i = z1; i + 1 < n1; ++i)
    axis1[i + 1] = axis1[i] + leg(1, 1, 0.0, g1[i], g1[i + 1], surface.supports[surface.index(i, z2)]);
  for (std::size_t i = z1; i-- > 0;)
    axis1[i] = axis1[i + 1] - leg(1, 1, 0.0, g1[i], g1[i + 1], surface.supports[surface.index(i + 1, z2)]);
  for (std::size_t j = z2; j + 1 < n2; ++j)
    axis2[j + 1] = axis2[j] + leg(2, 2, 0.0, g2[j], g2[j + 1], surface.supports[surface.index(z1, j)]);
  for (std::size_t j = z2; j-- > 0;)
    axis2[j] = axis2[j + 1] - leg(2, 2, 0.0, g2[j], g2[j + 1], surface.supports[surface.index(z1, j + 1)]);

  // s1 first: columns in s2 starting from the s1 axis.
  detail::parallel_for(n1, threads, [&](std::size_t i) {
    auto& J = out.j_s1_first;
    J[surface.index(i, z2)] = axis1[i];
    for (std::size_t j = z2; j + 1 < n2; ++j)
      J[surface.index(i, j + 1)] =
          J[surface.index(i, j)] + leg(2, 2, g1[i], g2[j], g2[j + 1], surface.supports[surface.index(i, j)]);
    for (std::size_t j = z2; j-- > 0;)
      J[surface.index(i, j)] = J[surface.index(i, j + 1)] -
                               leg(2, 2, g1[i], g2[j], g2[j + 1], surface.supports[surface.index(i, j + 1)]);
  });
  // s2 first: rows in s1 starting from the s2 axis.
  detail::parallel_for(n2, threads, [&](std::size_t j) {
    auto& J = out.j_s2_first;
    J[surface.index(z1, j)] = axis2[j];
    for (std::size_t i = z1; i + 1 < n1; ++i)
      J[surface.index(i + 1, j)] =
          J[surface.index(i, j)] + leg(1, 1, g2[j], g1[i], g1[i + 1], surface.supports[surface.index(i, j)]);
    for (std::size_t i = z1; i-- > 0;)
      J[surface.index(i, j)] = J[surface.index(i + 1, j)] -
                               leg(1, 1, g2[j], g1[i], g1[i + 1], surface.supports[surface.index(i + 1, j)]);
  });

  for (std::size_t i = 0; i < n1; ++i) {
    for (std::size_t j = 0; j < n2; ++j) {
      const std::size_t k = surface.index(i, j);
      out.max_path_discrepancy =
          std::max(out.max_path_discrepancy, std::abs(out.j_s1_first[k] - out.j_s2_first[k]));
      out.psi[k] = out.j_s1_first[k] - g1[i] * surface.x1[k] - g2[j] * surface.x2[k];
    }
  }
  if (!(out.max_path_discrepancy <= mismatch_tolerance)) {
    std::ostringstream os;
    os << "the two integration paths for J disagree by " << out.max_path_discrepancy
       << " (tolerance " << mismatch_tolerance << ")";
    throw Error(ErrorCode::PathMismatch, os.str());
  }
  return out;
}

double mixed_partial_asymmetry(const JointSurface& surface, double step) {
  double worst = 0.0;
  for (std::size_t i = 0; i < surface.s1_grid.size(); ++i) {
    for (std::size_t j = 0; j < surface.s2_grid.size(); ++j) {
      const std::size_t k = surface.index(i, j);
      if (!surface.feasible[k]) continue;
      const double s1 = surface.s1_grid[i], s2 = surface.s2_grid[j];
      const SupportInterval& here = surface.supports[k];
      double asym = kNaN;
      for (int attempt = 0; attempt < 24; ++attempt) {
        const double h = std::ldexp(step, -attempt);
        const auto r1p = surface.measure(s1 + h, s2, here), r1m = surface.measure(s1 - h, s2, here);
        const auto r2p = surface.measure(s1, s2 + h, here), r2m = surface.measure(s1, s2 - h, here);
        const bool same = r1p.support().same_regime(here) && r1m.support().same_regime(here) &&
                          r2p.support().same_regime(here) && r2m.support().same_regime(here);
        const double d12 = (statistic_value(r2p, surface.f1) - statistic_value(r2m, surface.f1)) / (2 * h);
        const double d21 = (statistic_value(r1p, surface.f2) - statistic_value(r1m, surface.f2)) / (2 * h);
        asym = std::abs(d12 - d21);
        if (same) break;
      }
      worst = std::max(worst, asym);
    }
  }
  return worst;
}

}  // namespace ldgas
