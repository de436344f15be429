#pragma once

// Run configuration: a JSON tree. Unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ldgas/model.hpp"

namespace ldgas::cli {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GridSection {
  double s_min = -1.0;
  double s_max = 1.0;
  int points = 201;
  bool continue_past_confinement = true;
};

struct LdfSection {
  double legendre_tolerance = 1e-5;
};

struct CumulantSection {
  int m_max = 4;
  double initial_step = 1e-2;
};

struct TransitionSection {
  int window = 8;
  int max_order = 4;
  double divergence_threshold = 1e6;
};

struct McSection {
  std::vector<double> tilts{0.0};
  long long n_sweeps = 100000;
  long long burn_in = 10000;
  long long thinning = 1;
  double step_scale = 0.1;
  std::uint64_t seed = 1;
  int chains = 1;
  int histogram_bins = 50;
  double z_threshold = 3.0;
  /// Relative tolerance on var_F * beta N^2 against its prediction.
  double variance_tolerance = 0.25;
};

struct JointSection {
  std::vector<double> s1;
  std::vector<double> s2;
  double mismatch_tolerance = 1e-5;
  double asymmetry_tolerance = 1e-5;
};

struct RunConfig {
  Polynomial potential;
  Walls walls;
  double beta = 2.0;
  int n = 32;
  std::vector<Polynomial> statistics;
  double s = 0.0;
  GridSection grid;
  LdfSection ldf;
  CumulantSection cumulants;
  TransitionSection transitions;
  McSection mc;
  std::optional<JointSection> joint;
  std::optional<std::filesystem::path> output;

  ConfinementPotential confinement() const;
  /// The single statistic; throws ConfigError when absent.
  LinearStatistic statistic() const;
  GasParameters gas() const { return GasParameters(n, beta); }
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace ldgas::cli
