#include "ldgas/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "ldgas/equilibrium.hpp"
#include "ldgas/error.hpp"
#include "parallel.hpp"

namespace ldgas {

namespace {

constexpr double kCoincident = 1e-14;
constexpr double kTargetAcceptance = 0.4;
constexpr long long kTuneWindow = 100;

// Total external field N (V + s f) as one polynomial.
Polynomial external_field(const ChainConfig& c) {
  const double n = c.gas.n_particles;
  return n * (c.potential.v() + c.tilt_s * c.statistic.f());
}

// sum_{j != i} log|y - lambda_j| - log|lambda_i - lambda_j|, or nullopt when
// y coincides with another eigenvalue. Ratios are multiplied in blocks to
// save logarithms.
std::optional<double> log_ratio(const std::vector<double>& lam, std::size_t i, double y) {
  const double xi = lam[i];
  double acc = 0.0, prod = 1.0;
  int pending = 0;
  for (std::size_t j = 0; j < lam.size(); ++j) {
    if (j == i) continue;
    const double num = std::abs(y - lam[j]);
    if (num < kCoincident) return std::nullopt;
    prod *= num / std::abs(xi - lam[j]);
    if (++pending == 16) {
      acc += std::log(prod);
      prod = 1.0;
      pending = 0;
    }
  }
  return acc + std::log(prod);
}

struct Proposal {
  bool valid;
  bool coincident;
  double delta_e;
};

Proposal evaluate(const std::vector<double>& lam, std::size_t i, double y, const Polynomial& field,
                  const Walls& walls) {
  if (!walls.contains(y)) return {false, false, 0.0};
  const auto lr = log_ratio(lam, i, y);
  if (!lr) return {false, true, 0.0};
  return {true, false, -*lr + field(y) - field(lam[i])};
}

struct RawChain {
  std::vector<double> samples;
  long long proposals = 0;
  long long accepted = 0;
  long long coincident = 0;
  double final_step = 0.0;
  double max_energy_drift = 0.0;
};

RawChain sample(const ChainConfig& config) {
  config.validate();
  ChainState st = initial_state(config);
  RawChain out;
  out.samples.reserve(static_cast<std::size_t>((config.n_sweeps - config.burn_in) / config.thinning));
  long long window_prop = 0, window_acc = 0;
  long long burn_prop = 0, burn_acc = 0;
  const double inv_n = 1.0 / config.gas.n_particles;
  for (long long sweep = 1; sweep <= config.n_sweeps; ++sweep) {
    const long long p0 = st.proposals, a0 = st.accepted;
    metropolis_step(st, config);
    if (sweep <= config.burn_in) {
      window_prop += st.proposals - p0;
      window_acc += st.accepted - a0;
      if (config.auto_tune && sweep % kTuneWindow == 0 && window_prop > 0) {
        const double rate = static_cast<double>(window_acc) / static_cast<double>(window_prop);
        st.step *= std::exp(rate - kTargetAcceptance);
        window_prop = window_acc = 0;
      }
      if (sweep == config.burn_in) {
        burn_prop = st.proposals;
        burn_acc = st.accepted;
      }
    } else if ((sweep - config.burn_in) % config.thinning == 0) {
      double f = 0.0;
      for (double x : st.eigenvalues) f += config.statistic(x);
      out.samples.push_back(f * inv_n);
    }
    if (sweep % config.resync_interval == 0) {
      const double full = chain_energy(st.eigenvalues, config);
      st.max_energy_drift =
          std::max(st.max_energy_drift, std::abs(full - st.energy) / std::max(1.0, std::abs(full)));
      st.energy = full;
    }
  }
  out.proposals = st.proposals - burn_prop;
  out.accepted = st.accepted - burn_acc;
  out.coincident = st.coincident;
  out.final_step = st.step;
  out.max_energy_drift = st.max_energy_drift;
  return out;
}

EmpiricalSummary summarise(const std::vector<RawChain>& chains, const ChainConfig& config) {
  EmpiricalSummary s;
  std::vector<double> all;
  double n_eff = 0.0;
  long long prop = 0, acc = 0, coinc = 0, total_prop = 0;
  for (const auto& c : chains) {
    all.insert(all.end(), c.samples.begin(), c.samples.end());
    n_eff += static_cast<double>(c.samples.size()) / autocorrelation_time(c.samples);
    prop += c.proposals;
    acc += c.accepted;
    coinc += c.coincident;
    total_prop += static_cast<long long>(config.n_sweeps) * config.gas.n_particles;
    s.max_energy_drift = std::max(s.max_energy_drift, c.max_energy_drift);
    s.final_step = c.final_step;
  }
  const auto n = static_cast<double>(all.size());
  s.n_samples = static_cast<long long>(all.size());
  s.mean_F = std::accumulate(all.begin(), all.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : all) ss += (v - s.mean_F) * (v - s.mean_F);
  s.var_F = all.size() > 1 ? ss / (n - 1.0) : 0.0;
  s.n_effective = std::min(n_eff, n);
  s.autocorrelation_time = n / s.n_effective;
  s.stderr_mean = std::sqrt(s.var_F / s.n_effective);
  s.acceptance_rate = prop > 0 ? static_cast<double>(acc) / static_cast<double>(prop) : 0.0;
  s.coincident_rate = total_prop > 0 ? static_cast<double>(coinc) / static_cast<double>(total_prop) : 0.0;
  if (s.coincident_rate > 0.01) {
    std::ostringstream os;
    os << "COINCIDENT_POINTS: " << s.coincident_rate * 100 << "% of proposals rejected as coincident";
    s.warnings.push_back(os.str());
  }

  const auto [lo_it, hi_it] = std::minmax_element(all.begin(), all.end());
  double lo = *lo_it, hi = *hi_it;
  if (hi <= lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  const int bins = config.histogram_bins;
  s.histogram.edges.resize(static_cast<std::size_t>(bins) + 1);
  s.histogram.counts.assign(static_cast<std::size_t>(bins), 0);
  for (int k = 0; k <= bins; ++k) s.histogram.edges[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / bins;
  for (double v : all) {
    auto k = static_cast<long long>((v - lo) / (hi - lo) * bins);
    k = std::clamp<long long>(k, 0, bins - 1);
    ++s.histogram.counts[static_cast<std::size_t>(k)];
  }
  return s;
}

}  // namespace

void ChainConfig::validate() const {
  if (burn_in <= 0 || burn_in >= n_sweeps)
    throw Error(ErrorCode::InvalidArgument, "burn_in must satisfy 0 < burn_in < n_sweeps");
  if (thinning < 1) throw Error(ErrorCode::InvalidArgument, "thinning must be >= 1");
  if (!(step_scale > 0.0) || !std::isfinite(step_scale))
    throw Error(ErrorCode::InvalidArgument, "step_scale must be positive");
  if (histogram_bins < 1) throw Error(ErrorCode::InvalidArgument, "histogram_bins must be >= 1");
  if (resync_interval < 1) throw Error(ErrorCode::InvalidArgument, "resync_interval must be >= 1");
  if (n_sweeps - burn_in < thinning)
    throw Error(ErrorCode::InvalidArgument, "no samples: n_sweeps - burn_in < thinning");
}

double chain_energy(const std::vector<double>& lam, const ChainConfig& config) {
  const Polynomial field = external_field(config);
  double e = 0.0;
  for (std::size_t i = 0; i < lam.size(); ++i) {
    e += field(lam[i]);
    for (std::size_t j = i + 1; j < lam.size(); ++j) e -= std::log(std::abs(lam[i] - lam[j]));
  }
  return e;
}

double acceptance_probability(const std::vector<double>& lam, std::size_t i, double y,
                              const ChainConfig& config) {
  if (i >= lam.size()) throw Error(ErrorCode::InvalidArgument, "eigenvalue index out of range");
  const auto p = evaluate(lam, i, y, external_field(config), config.potential.walls());
  if (!p.valid) return 0.0;
  return p.delta_e <= 0.0 ? 1.0 : std::exp(-config.gas.beta * p.delta_e);
}

ChainState initial_state(const ChainConfig& config) {
  const auto rho = solve_one_cut(tilt(config.potential, config.statistic, config.tilt_s));
  ChainState st;
  st.eigenvalues = rho.quantiles(config.gas.n_particles);
  std::sort(st.eigenvalues.begin(), st.eigenvalues.end());
  st.energy = chain_energy(st.eigenvalues, config);
  st.rng.seed(config.seed);
  st.step = config.step_scale;
  return st;
}

void metropolis_step(ChainState& st, const ChainConfig& config) {
  const Polynomial field = external_field(config);
  const Walls& walls = config.potential.walls();
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double beta = config.gas.beta;
  for (std::size_t i = 0; i < st.eigenvalues.size(); ++i) {
    const double y = st.eigenvalues[i] + st.step * unit(st.rng);
    // One acceptance variate per proposal, valid or not.
    const double u = std::generate_canonical<double, 53>(st.rng);
    ++st.proposals;
    const auto p = evaluate(st.eigenvalues, i, y, field, walls);
    if (p.coincident) ++st.coincident;
    if (!p.valid) continue;
    if (p.delta_e <= 0.0 || u < std::exp(-beta * p.delta_e)) {
      st.eigenvalues[i] = y;
      st.energy += p.delta_e;
      ++st.accepted;
    }
  }
}

double autocorrelation_time(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 4) return 1.0;
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  auto gamma = [&](std::size_t lag) {
    double acc = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) acc += (x[t] - mean) * (x[t + lag] - mean);
    return acc / static_cast<double>(n);
  };
  const double g0 = gamma(0);
  if (!(g0 > 0.0)) return 1.0;
  double sum = -g0;
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    const double pair = gamma(2 * k) + gamma(2 * k + 1);
    if (pair <= 0.0) break;
    sum += 2.0 * pair;
  }
  return std::max(1.0, sum / g0);
}

EmpiricalSummary run_chain(const ChainConfig& config) { return summarise({sample(config)}, config); }

EmpiricalSummary run_chains(const ChainConfig& config, int chains, int threads) {
  if (chains < 1) throw Error(ErrorCode::InvalidArgument, "chains must be >= 1");
  config.validate();
  std::vector<RawChain> raw(static_cast<std::size_t>(chains));
  detail::parallel_for(raw.size(), threads, [&](std::size_t k) {
    ChainConfig c = config;
    c.seed = config.seed + k * 0x9E3779B97F4A7C15ULL;
    raw[k] = sample(c);
  });
  return summarise(raw, config);
}

TiltedMeanCheck tilted_mean_check(const ChainConfig& config, int chains, int threads) {
  const auto rho = solve_one_cut(tilt(config.potential, config.statistic, config.tilt_s));
  const double predicted = statistic_value(rho, config.statistic);
  auto summary = run_chains(config, chains, threads);
  const double z = summary.stderr_mean > 0.0 ? (summary.mean_F - predicted) / summary.stderr_mean
                                             : std::numeric_limits<double>::infinity();
  return {summary.mean_F, predicted, z, std::move(summary)};
}

}  // namespace ldgas
