#include "ldgas/transitions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ldgas/error.hpp"
#include "ldgas/numerics.hpp"

namespace ldgas {

namespace {

using Derivs = std::vector<double>;

Derivs fit_window(const DualityCurve& c, std::size_t lo, std::size_t hi, double at, int degree,
                  int max_k) {
  const std::span<const double> s(c.s_grid), x(c.x_values);
  return numerics::fit_derivatives(s.subspan(lo, hi - lo + 1), x.subspan(lo, hi - lo + 1), at, degree,
                                   max_k);
}

struct Flag {
  std::size_t index;
  int k;          // derivative order of x* that jumps
  double jump;    // right minus left
  double excess;  // |jump| / threshold
};

std::optional<Flag> scan_point(const DualityCurve& c, std::size_t i, const TransitionOptions& o) {
  const std::size_t w = static_cast<std::size_t>(o.window);
  const int max_k = o.max_order - 1;
  const int degree = std::max(o.fit_degree, max_k);
  const double at = c.s_grid[i];
  const Derivs left = fit_window(c, i - w, i, at, degree, max_k);
  const Derivs right = fit_window(c, i, i + w, at, degree, max_k);
  const Derivs left_out = fit_window(c, i - w - 1, i - 1, at, degree, max_k);
  const Derivs right_out = fit_window(c, i + 1, i + w + 1, at, degree, max_k);
  for (int k = 0; k <= max_k; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    const double noise = std::max(std::abs(left[kk] - left_out[kk]), std::abs(right[kk] - right_out[kk]));
    const double threshold = std::max(o.min_threshold, o.noise_factor * noise);
    const double jump = right[kk] - left[kk];
    if (std::abs(jump) > threshold) return Flag{i, k, jump, std::abs(jump) / threshold};
  }
  return std::nullopt;
}

}  // namespace

std::vector<CriticalPoint> detect_transitions(const DualityCurve& curve, const TransitionOptions& options) {
  if (options.max_order < 1 || options.window < 2)
    throw Error(ErrorCode::InvalidArgument, "max_order must be >= 1 and window >= 2");
  std::vector<CriticalPoint> out;
  const std::size_t n = curve.size();
  const std::size_t w = static_cast<std::size_t>(options.window);
  if (n < 2 * w + 3) return out;

  std::vector<Flag> flags;
  for (std::size_t i = w + 1; i + w + 1 < n; ++i)
    if (auto f = scan_point(curve, i, options)) flags.push_back(*f);

  // Clusters of flags closer than a window.
  std::vector<std::vector<Flag>> clusters;
  for (const auto& f : flags) {
    if (clusters.empty() || f.index > clusters.back().back().index + w) clusters.emplace_back();
    clusters.back().push_back(f);
  }

  for (const auto& cl : clusters) {
    int k = cl.front().k;
    for (const auto& f : cl) k = std::min(k, f.k);
    const Flag* rep = nullptr;
    for (const auto& f : cl)
      if (f.k == k && (!rep || f.excess > rep->excess)) rep = &f;

    const std::size_t i = rep->index;
    CriticalPoint cp{curve.s_grid[i], k + 1, rep->jump, curve.s_grid[i - 1], curve.s_grid[i + 1]};

    // Narrow the bracket to a change of edge regime when there is one.
    std::size_t lo = cl.front().index >= 1 ? cl.front().index - 1 : 0;
    std::size_t hi = std::min(n - 1, cl.back().index + 1);
    const double spacing = std::min(curve.s_grid[i] - curve.s_grid[i - 1], curve.s_grid[i + 1] - curve.s_grid[i]);
    const double target = std::min(options.bracket_width, 1e-2 * spacing);
    if (curve.problem && !curve.supports.empty() && !curve.supports[lo].same_regime(curve.supports[hi])) {
      const SupportInterval left_regime = curve.supports[lo];
      double a = curve.s_grid[lo], b = curve.s_grid[hi];
      // Start from the grid points adjacent to the regime change.
      for (std::size_t j = lo; j < hi; ++j) {
        if (!curve.supports[j + 1].same_regime(left_regime)) {
          a = curve.s_grid[j];
          b = curve.s_grid[j + 1];
          break;
        }
      }
      SupportInterval hint = left_regime;
      while (b - a > target) {
        const double mid = 0.5 * (a + b);
        try {
          const auto rho = tilted_measure(*curve.problem, mid, hint, curve.options.continue_past_confinement,
                                          curve.options.solver);
          if (rho.support().same_regime(left_regime)) {
            a = mid;
            hint = rho.support();
          } else {
            b = mid;
          }
        } catch (const Error&) {
          break;
        }
      }
      // A switch point that is itself a grid node sits on the bracket edge;
      // widen symmetrically so that it lies strictly inside.
      if (b - a < target) {
        const double c = 0.5 * (a + b);
        a = c - 0.5 * target;
        b = c + 0.5 * target;
      }
      cp.s_lo = a;
      cp.s_hi = b;
      cp.s_cr = 0.5 * (a + b);
    }
    out.push_back(cp);
  }
  return out;
}

namespace {

std::optional<double> try_x(const DualityCurve& c, double s, std::optional<SupportInterval>& hint) {
  try {
    const auto rho = tilted_measure(*c.problem, s, hint, c.options.continue_past_confinement, c.options.solver);
    hint = rho.support();
    return statistic_value(rho, c.problem->statistic);
  } catch (const Error&) {
    return std::nullopt;
  }
}

SteepnessReport approach(const DualityCurve& c, CurveEnd end, double threshold) {
  const bool lower = end == CurveEnd::Lower;
  const std::size_t idx = lower ? 0 : c.size() - 1;
  const double s_end = c.s_grid[idx];
  const std::optional<double> bad = lower ? c.lower_infeasible : c.upper_infeasible;
  SteepnessReport r;
  r.end = end;
  r.boundary_s = s_end;
  r.boundary_slope = c.x_values[idx];
  double max_abs = std::abs(c.x_values[idx]);

  if (c.problem && c.size() >= 2) {
    const double inner = c.s_grid[lower ? 1 : c.size() - 2];
    const double boundary = bad ? 0.5 * (s_end + *bad) : s_end;
    double d = std::abs(boundary - inner);
    std::optional<SupportInterval> hint = c.supports[lower ? 1 : c.size() - 2];
    const double inward = lower ? 1.0 : -1.0;
    for (int k = 0; k < 60 && d > 1e-15 * (1.0 + std::abs(boundary)); ++k, d *= 0.5) {
      const auto x = try_x(c, boundary + inward * d, hint);
      if (!x) break;
      r.boundary_slope = *x;
      max_abs = std::max(max_abs, std::abs(*x));
      if (max_abs > threshold) break;
    }
  }
  r.steep = max_abs > threshold || !std::isfinite(max_abs);
  std::ostringstream os;
  os.precision(10);
  if (r.steep) {
    os << "x*(s) diverges (|x*| > " << threshold << ") as s approaches the domain boundary " << s_end
       << "; J is steep there and the Legendre transform recovers the full rate function on that side.";
  } else {
    os << "x*(s) stays bounded as s approaches the domain boundary " << s_end << ", with limit C = "
       << r.boundary_slope << ". J is not steep: Psi is only reconstructed for x "
       << (lower ? "<= " : ">= ") << r.boundary_slope
       << " on this side. A failure of the steepness condition may correspond to a 'change of "
          "speed' in the LDP.";
  }
  const auto failure = lower ? c.lower_failure : c.upper_failure;
  if (failure == ErrorCode::NoOneCut)
    os << " Past this point the one-cut density turns negative: the gas splits into several "
          "intervals, which is outside the one-cut model, so the boundary is a limit of the method "
          "rather than of the domain of J.";
  else if (failure == ErrorCode::IllConfined)
    os << " Past this point the tilted potential no longer confines the gas.";
  r.note = os.str();
  return r;
}

}  // namespace

std::vector<SteepnessReport> check_steepness(const DualityCurve& curve, double divergence_threshold) {
  if (curve.size() == 0) throw Error(ErrorCode::InvalidArgument, "empty curve");
  std::vector<SteepnessReport> out;
  if (curve.lower_flag != DomainFlag::Interior)
    out.push_back(approach(curve, CurveEnd::Lower, divergence_threshold));
  if (curve.upper_flag != DomainFlag::Interior)
    out.push_back(approach(curve, CurveEnd::Upper, divergence_threshold));
  if (!out.empty()) return out;

  SteepnessReport r;
  r.boundary_slope = 0.0;
  for (double x : curve.x_values) r.boundary_slope = std::max(r.boundary_slope, std::abs(x));
  r.steep = true;
  std::ostringstream os;
  os.precision(10);
  os << "no domain boundary inside [" << curve.s_grid.front() << ", " << curve.s_grid.back()
     << "]: J is steep by default on this range.";
  if (curve.problem) {
    const Walls& walls = curve.problem->potential.walls();
    if (walls.lower().finite() && walls.upper().finite()) {
      // f is bounded on the walls, so x*(s) stays bounded for every s.
      const double a = walls.lower().value(), b = walls.upper().value();
      double bound = 0.0;
      for (int j = 0; j <= 2000; ++j)
        bound = std::max(bound, std::abs(curve.problem->statistic(a + (b - a) * j / 2000.0)));
      os << " The gas is confined to [" << a << ", " << b << "], so the statistic is bounded (|F| <= "
         << bound << ") and x*(s) stays finite as s -> +-infinity; the domain of J is the whole real "
            "line and steepness holds trivially.";
    }
  }
  r.note = os.str();
  out.push_back(r);
  return out;
}

void apply_steepness(DualityCurve& curve, const std::vector<SteepnessReport>& reports) {
  for (const auto& r : reports) {
    if (!r.end || r.steep) continue;
    (*r.end == CurveEnd::Lower ? curve.lower_flag : curve.upper_flag) = DomainFlag::NonSteepBoundary;
  }
}

}  // namespace ldgas
