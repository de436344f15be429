#include "commands.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "ldgas/duality.hpp"
#include "ldgas/equilibrium.hpp"
#include "ldgas/error.hpp"
#include "ldgas/montecarlo.hpp"
#include "ldgas/transitions.hpp"

namespace ldgas::cli {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kDensityRows = 513;

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class Csv {
 public:
  Csv(const std::filesystem::path& path, std::initializer_list<const char*> header) : out_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    bool first = true;
    for (const char* h : header) {
      out_ << (first ? "" : ",") << h;
      first = false;
    }
    out_ << '\n';
  }
  template <class... T>
  void row(const T&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << '\n';
  }

 private:
  static std::string cell(double x) { return num(x); }
  static std::string cell(int x) { return std::to_string(x); }
  static std::string cell(long long x) { return std::to_string(x); }
  static std::string cell(const std::string& x) { return x; }
  std::ofstream out_;
};

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

const char* edge_name(EdgeType e) { return e == EdgeType::Hard ? "hard" : "soft"; }

const char* flag_name(DomainFlag f) {
  switch (f) {
    case DomainFlag::Interior: return "interior";
    case DomainFlag::DomainBoundary: return "domain_boundary";
    case DomainFlag::NonSteepBoundary: return "non_steep_boundary";
  }
  return "?";
}

ConfinementPotential tilted_potential(const RunConfig& c) {
  if (c.statistics.empty()) {
    if (c.s != 0.0) throw ConfigError("a nonzero 's' needs a 'statistic'");
    return c.confinement();
  }
  return tilt(c.confinement(), c.statistic(), c.s);
}

DualityCurve make_curve(const RunConfig& c, const Context& ctx) {
  CurveOptions opt;
  opt.continue_past_confinement = c.grid.continue_past_confinement;
  opt.threads = ctx.threads;
  return build_curve(c.confinement(), c.statistic(), c.grid.s_min, c.grid.s_max, c.grid.points, opt);
}

}  // namespace

int cmd_equilibrium(const RunConfig& c, const Context& ctx) {
  const auto rho = solve_one_cut(tilted_potential(c));
  const auto& sup = rho.support();
  {
    Csv csv(ctx.out / "density.csv", {"lambda", "rho"});
    for (int k = 0; k < kDensityRows; ++k) {
      const double x = sup.centre() - sup.half_width() * std::cos(kPi * (k + 0.5) / kDensityRows);
      csv.row(x, density(rho, x));
    }
  }
  nlohmann::ordered_json j;
  j["s"] = c.s;
  j["a"] = sup.a;
  j["b"] = sup.b;
  j["edge_a"] = edge_name(sup.edge_a);
  j["edge_b"] = edge_name(sup.edge_b);
  j["euler_lagrange_residual"] = euler_lagrange_residual(rho);
  j["min_density"] = min_density(rho);
  j["energy"] = mean_field_energy(rho);
  if (!c.statistics.empty()) j["statistic_value"] = statistic_value(rho, c.statistic());
  write_text(ctx.out / "support.json", j.dump(2) + "\n");
  ctx.log << "support [" << num(sup.a) << ", " << num(sup.b) << "] (" << edge_name(sup.edge_a) << "/"
          << edge_name(sup.edge_b) << ")\n";
  return kSuccess;
}

int cmd_ldf(const RunConfig& c, const Context& ctx) {
  auto curve = integrate_J(make_curve(c, ctx));
  const auto steep = check_steepness(curve);
  apply_steepness(curve, steep);
  auto table = integrate_Psi(invert_curve(curve), curve.x_values[curve.zero_index]);
  const double residual = legendre_check(curve, table);

  {
    Csv csv(ctx.out / "duality.csv", {"s", "x_star", "J"});
    for (std::size_t i = 0; i < curve.size(); ++i) csv.row(curve.s_grid[i], curve.x_values[i], curve.j_values[i]);
  }
  {
    Csv csv(ctx.out / "rate.csv", {"x", "s_star", "Psi"});
    for (std::size_t i = 0; i < table.x_grid.size(); ++i)
      csv.row(table.x_grid[i], table.s_star_values[i], table.psi_values[i]);
  }
  const bool ok = residual <= c.ldf.legendre_tolerance;
  std::ostringstream r;
  r << "points " << curve.size() << "\n";
  r << "s_range " << num(curve.s_grid.front()) << " " << num(curve.s_grid.back()) << "\n";
  r << "kinks";
  for (auto k : curve.kinks) r << " " << num(curve.s_grid[k]);
  r << "\n";
  r << "lower_flag " << flag_name(curve.lower_flag) << "\n";
  r << "upper_flag " << flag_name(curve.upper_flag) << "\n";
  for (const auto& s : steep) r << "steepness: " << s.note << "\n";
  r << "legendre_residual " << num(residual) << "\n";
  r << "legendre_tolerance " << num(c.ldf.legendre_tolerance) << "\n";
  r << "status " << (ok ? "PASS" : "FAIL") << "\n";
  write_text(ctx.out / "report.txt", r.str());
  ctx.log << "Legendre residual " << num(residual) << "\n";
  if (!ok) {
    ctx.log << "Legendre residual exceeds tolerance " << num(c.ldf.legendre_tolerance) << "\n";
    return kConsistency;
  }
  return kSuccess;
}

int cmd_cumulants(const RunConfig& c, const Context& ctx) {
  CumulantOptions opt;
  opt.initial_step = c.cumulants.initial_step;
  opt.continue_past_confinement = c.grid.continue_past_confinement;
  const auto rep = cumulants(c.confinement(), c.statistic(), c.cumulants.m_max, opt);
  const auto scaled = rep.finite_n(c.gas());
  // N^{2(m-1)} kappa_m: the N-independent leading coefficient.
  const auto rescaled = rep.scaled(c.beta);
  Csv csv(ctx.out / "cumulants.csv", {"order", "derivative", "scaled", "rescaled", "error_estimate"});
  for (std::size_t i = 0; i < rep.orders.size(); ++i) {
    csv.row(rep.orders[i], rep.derivatives[i], scaled[i], rescaled[i], rep.error_estimates[i]);
    ctx.log << "m=" << rep.orders[i] << " d^mJ(0)=" << num(rep.derivatives[i]) << "\n";
  }
  return kSuccess;
}

int cmd_transitions(const RunConfig& c, const Context& ctx) {
  const auto curve = make_curve(c, ctx);
  TransitionOptions opt;
  opt.window = c.transitions.window;
  opt.max_order = c.transitions.max_order;
  const auto cps = detect_transitions(curve, opt);
  {
    Csv csv(ctx.out / "transitions.csv", {"s_lo", "s_hi", "s_cr", "order", "jump"});
    for (const auto& cp : cps) csv.row(cp.s_lo, cp.s_hi, cp.s_cr, cp.order, cp.jump);
  }
  std::ostringstream r;
  for (const auto& s : check_steepness(curve, c.transitions.divergence_threshold)) {
    r << "end " << (s.end ? (*s.end == CurveEnd::Lower ? "lower" : "upper") : "none") << "\n";
    if (s.boundary_s) r << "boundary_s " << num(*s.boundary_s) << "\n";
    r << "boundary_slope " << num(s.boundary_slope) << "\n";
    r << "steep " << (s.steep ? "yes" : "no") << "\n";
    r << "note " << s.note << "\n\n";
  }
  write_text(ctx.out / "steepness.txt", r.str());
  ctx.log << cps.size() << " critical point(s)\n";
  return kSuccess;
}

namespace {

struct TiltResult {
  double s;
  TiltedMeanCheck check;
  std::optional<double> predicted_scaled_var;
  std::string var_note;
};

TiltResult run_tilt(const RunConfig& c, double s, std::uint64_t seed, int threads) {
  ChainConfig cc;
  cc.gas = c.gas();
  cc.potential = c.confinement();
  cc.statistic = c.statistic();
  cc.tilt_s = s;
  cc.step_scale = c.mc.step_scale;
  cc.seed = seed;
  cc.n_sweeps = c.mc.n_sweeps;
  cc.burn_in = c.mc.burn_in;
  cc.thinning = c.mc.thinning;
  cc.histogram_bins = c.mc.histogram_bins;
  TiltResult r{s, tilted_mean_check(cc, c.mc.chains, threads), std::nullopt, {}};
  try {
    // var_F * speed -> -J''(s), the second derivative of the tilted gas's J at 0.
    const auto k = cumulants(tilt(c.confinement(), c.statistic(), s), c.statistic(), 2);
    r.predicted_scaled_var = -k.derivatives[1];
  } catch (const Error& e) {
    r.var_note = std::string(to_string(e.code())) + ": " + e.what();
  }
  return r;
}

std::string tag(const std::string& q, double s) { return q + "[s=" + num(s) + "]"; }

}  // namespace

int cmd_verify_mc(const RunConfig& c, const Context& ctx) {
  if (c.mc.tilts.empty()) throw ConfigError("mc.tilts must not be empty");
  std::uint64_t seed = c.mc.seed;
  if (const char* env = std::getenv("LDGAS_SEED")) {
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (errno != 0 || end == env || *end != '\0' || env[0] == '-')
      throw ConfigError(std::string("LDGAS_SEED is not a non-negative integer: ") + env);
    seed = v;
  }

  // Tilts run concurrently with one worker each when threads allow; the
  // seed of tilt k is fixed by k alone.
  const std::size_t nt = c.mc.tilts.size();
  std::vector<std::optional<TiltResult>> results(nt);
  const std::size_t batch = std::max<std::size_t>(1, static_cast<std::size_t>(ctx.threads));
  const int inner = std::max(1, ctx.threads / static_cast<int>(std::min(nt, batch)));
  for (std::size_t start = 0; start < nt; start += batch) {
    std::vector<std::future<TiltResult>> jobs;
    for (std::size_t k = start; k < std::min(nt, start + batch); ++k)
      jobs.push_back(std::async(std::launch::async, run_tilt, std::cref(c), c.mc.tilts[k],
                                seed + 0x2545F4914F6CDD1DULL * k, inner));
    for (std::size_t k = start; k < std::min(nt, start + batch); ++k) results[k] = jobs[k - start].get();
  }

  bool pass = true;
  std::ostringstream verdict;
  const double speed = c.gas().speed();
  {
    Csv csv(ctx.out / "mc_summary.csv", {"quantity", "estimate", "stderr"});
    for (const auto& r : results) {
      const auto& sm = r->check.summary;
      const double scaled = sm.var_F * speed;
      csv.row(tag("mean_F", r->s), sm.mean_F, sm.stderr_mean);
      csv.row(tag("predicted_x_star", r->s), r->check.predicted, 0.0);
      csv.row(tag("z_score", r->s), r->check.z_score, 1.0);
      csv.row(tag("var_F_scaled", r->s), scaled, scaled * std::sqrt(2.0 / sm.n_effective));
      if (r->predicted_scaled_var) csv.row(tag("predicted_var_F_scaled", r->s), *r->predicted_scaled_var, 0.0);
      csv.row(tag("autocorrelation_time", r->s), sm.autocorrelation_time, 0.0);
      csv.row(tag("n_effective", r->s), sm.n_effective, 0.0);
      csv.row(tag("acceptance_rate", r->s), sm.acceptance_rate, 0.0);

      const bool z_ok = std::abs(r->check.z_score) < c.mc.z_threshold;
      pass = pass && z_ok;
      verdict << (z_ok ? "PASS" : "FAIL") << " s=" << num(r->s) << " mean_F=" << num(sm.mean_F)
              << " predicted=" << num(r->check.predicted) << " z=" << num(r->check.z_score)
              << " threshold=" << num(c.mc.z_threshold) << "\n";
      if (r->predicted_scaled_var) {
        const double rel = std::abs(scaled / *r->predicted_scaled_var - 1.0);
        const bool v_ok = rel <= c.mc.variance_tolerance;
        pass = pass && v_ok;
        verdict << (v_ok ? "PASS" : "FAIL") << " s=" << num(r->s) << " var_F*beta*N^2=" << num(scaled)
                << " predicted=" << num(*r->predicted_scaled_var) << " relative_error=" << num(rel)
                << " tolerance=" << num(c.mc.variance_tolerance) << "\n";
      } else {
        verdict << "SKIP s=" << num(r->s) << " variance: no prediction (" << r->var_note << ")\n";
      }
      for (const auto& w : sm.warnings) verdict << "WARN s=" << num(r->s) << " " << w << "\n";
    }
  }
  for (std::size_t k = 0; k < nt; ++k) {
    const auto& h = results[k]->check.summary.histogram;
    const std::string name = k == 0 ? "mc_hist.csv" : "mc_hist_" + std::to_string(k) + ".csv";
    Csv csv(ctx.out / name, {"bin_lo", "bin_hi", "count"});
    for (std::size_t b = 0; b < h.counts.size(); ++b) csv.row(h.edges[b], h.edges[b + 1], h.counts[b]);
  }
  verdict << "VERDICT " << (pass ? "PASS" : "FAIL") << "\n";
  write_text(ctx.out / "verdict.txt", verdict.str());
  ctx.log << verdict.str();
  return pass ? kSuccess : kMonteCarlo;
}

int cmd_joint(const RunConfig& c, const Context& ctx) {
  if (c.statistics.size() != 2) throw ConfigError("joint needs exactly two 'statistics'");
  if (!c.joint) throw ConfigError("joint needs a 'joint' section");
  const auto& js = *c.joint;
  const auto surface = joint_build_surface(c.confinement(), LinearStatistic(c.statistics[0]),
                                           LinearStatistic(c.statistics[1]), js.s1, js.s2, ctx.threads);
  const auto tables = joint_integrate(surface, js.mismatch_tolerance, 1e-13, ctx.threads);
  const double asym = mixed_partial_asymmetry(surface);
  {
    Csv csv(ctx.out / "joint.csv", {"s1", "s2", "x1_star", "x2_star", "J_s1_first", "J_s2_first", "Psi"});
    for (std::size_t i = 0; i < surface.s1_grid.size(); ++i)
      for (std::size_t k = 0; k < surface.s2_grid.size(); ++k) {
        const auto n = surface.index(i, k);
        csv.row(surface.s1_grid[i], surface.s2_grid[k], surface.x1[n], surface.x2[n], tables.j_s1_first[n],
                tables.j_s2_first[n], tables.psi[n]);
      }
  }
  const bool ok = asym <= js.asymmetry_tolerance;
  std::ostringstream r;
  r << "max_path_discrepancy " << num(tables.max_path_discrepancy) << "\n";
  r << "mismatch_tolerance " << num(js.mismatch_tolerance) << "\n";
  r << "mixed_partial_asymmetry " << num(asym) << "\n";
  r << "asymmetry_tolerance " << num(js.asymmetry_tolerance) << "\n";
  r << "status " << (ok ? "PASS" : "FAIL") << "\n";
  write_text(ctx.out / "report.txt", r.str());
  ctx.log << r.str();
  return ok ? kSuccess : kConsistency;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Large-deviation functions of linear statistics of log-gases", "ldgas"};
  std::string command;
  std::string config_path;
  std::string out_dir;
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  app.add_option("command", command, "equilibrium | ldf | cumulants | transitions | verify-mc | joint")
      ->required()
      ->check(CLI::IsMember({"equilibrium", "ldf", "cumulants", "transitions", "verify-mc", "joint"}));
  app.add_option("config", config_path, "JSON run configuration")->required();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsage;
  }

  RunConfig config;
  try {
    config = load_config(config_path);
  } catch (const ConfigError& e) {
    err << "ldgas: config error: " << e.what() << "\n";
    return kUsage;
  }
  std::filesystem::path dir = !out_dir.empty() ? std::filesystem::path(out_dir)
                              : config.output ? *config.output
                                              : std::filesystem::path("ldgas-out");
  try {
    std::filesystem::create_directories(dir);
    const Context ctx{dir, threads, out};
    if (command == "equilibrium") return cmd_equilibrium(config, ctx);
    if (command == "ldf") return cmd_ldf(config, ctx);
    if (command == "cumulants") return cmd_cumulants(config, ctx);
    if (command == "transitions") return cmd_transitions(config, ctx);
    if (command == "verify-mc") return cmd_verify_mc(config, ctx);
    return cmd_joint(config, ctx);
  } catch (const ConfigError& e) {
    err << "ldgas: config error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "ldgas: " << to_string(e.code()) << ": " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::NotAnalytic:
      case ErrorCode::PathMismatch: return kConsistency;
      default: return kSolver;
    }
  } catch (const std::filesystem::filesystem_error& e) {
    err << "ldgas: " << e.what() << "\n";
    return kUsage;
  } catch (const std::runtime_error& e) {
    err << "ldgas: " << e.what() << "\n";
    return kUsage;
  }
}

}  // namespace ldgas::cli
