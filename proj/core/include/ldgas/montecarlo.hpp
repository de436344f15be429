#pragma once

// Metropolis sampling of the finite-N eigenvalue law
//
//     P(lambda) ~ exp(-beta E),
//     E = -sum_{i<j} log|lambda_i - lambda_j| + N sum_i V(lambda_i) + s N sum_i f(lambda_i),
//
// and summaries of F = N^-1 sum_i f(lambda_i).

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ldgas/model.hpp"

namespace ldgas {

struct ChainConfig {
  GasParameters gas{32, 2.0};
  ConfinementPotential potential = ConfinementPotential::make(Polynomial{0, 0, 0.25});
  /// Recorded observable f, also the direction of the tilt.
  LinearStatistic statistic{Polynomial{0, 1}};
  double tilt_s = 0.0;
  /// Initial proposal half-width; tuned towards 40% acceptance during burn-in.
  double step_scale = 0.1;
  bool auto_tune = true;
  std::uint64_t seed = 1;
  /// Total sweeps including burn-in.
  long long n_sweeps = 100000;
  long long burn_in = 10000;
  long long thinning = 1;
  int histogram_bins = 50;
  /// Sweeps between full recomputations of the cached energy.
  long long resync_interval = 10000;

  /// Throws Error(InvalidArgument) unless 0 < burn_in < n_sweeps,
  /// thinning >= 1, step_scale > 0 and histogram_bins >= 1.
  void validate() const;
};

struct ChainState {
  std::vector<double> eigenvalues;
  /// Cached E(lambda; s).
  double energy = 0.0;
  std::mt19937_64 rng;
  double step = 0.1;
  long long proposals = 0;
  long long accepted = 0;
  long long coincident = 0;
  /// Largest relative difference between cached and recomputed energy.
  double max_energy_drift = 0.0;
};

struct Histogram {
  std::vector<double> edges;
  std::vector<long long> counts;
};

struct EmpiricalSummary {
  double mean_F = 0.0;
  double var_F = 0.0;
  double stderr_mean = 0.0;
  Histogram histogram;
  /// Integrated autocorrelation time in recorded samples (>= 1).
  double autocorrelation_time = 1.0;
  double n_effective = 0.0;
  long long n_samples = 0;
  double acceptance_rate = 0.0;
  double coincident_rate = 0.0;
  double final_step = 0.0;
  double max_energy_drift = 0.0;
  std::vector<std::string> warnings;
};

/// E(lambda; s) recomputed from scratch.
double chain_energy(const std::vector<double>& eigenvalues, const ChainConfig& config);

/// Metropolis acceptance probability for moving eigenvalue i to y; zero
/// outside the walls or on a coincident point.
double acceptance_probability(const std::vector<double>& eigenvalues, std::size_t i, double y,
                              const ChainConfig& config);

/// Eigenvalues at the quantiles of the continuum density of the tilted gas.
ChainState initial_state(const ChainConfig& config);

/// One sweep: N single-particle proposals lambda_i + step * U(-1, 1).
void metropolis_step(ChainState& state, const ChainConfig& config);

/// Burn-in (with step tuning), then records F every `thinning` sweeps.
EmpiricalSummary run_chain(const ChainConfig& config);

/// Independent chains with seeds derived from config.seed, run on up to
/// `threads` workers and merged in a fixed order.
EmpiricalSummary run_chains(const ChainConfig& config, int chains, int threads = 1);

struct TiltedMeanCheck {
  double empirical_mean;
  double predicted;
  double z_score;
  EmpiricalSummary summary;
};

/// Compares the sampled mean of F under the tilt with x*(tilt_s).
TiltedMeanCheck tilted_mean_check(const ChainConfig& config, int chains = 1, int threads = 1);

/// Initial-positive-sequence estimate of the integrated autocorrelation
/// time, clamped below at 1.
double autocorrelation_time(const std::vector<double>& samples);

}  // namespace ldgas
