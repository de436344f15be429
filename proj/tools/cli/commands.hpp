#pragma once

#include <filesystem>
#include <ostream>

#include "config.hpp"

namespace ldgas::cli {

enum ExitCode : int { kSuccess = 0, kUsage = 1, kSolver = 2, kConsistency = 3, kMonteCarlo = 4 };

struct Context {
  std::filesystem::path out;
  int threads = 1;
  std::ostream& log;
};

int cmd_equilibrium(const RunConfig& config, const Context& ctx);
int cmd_ldf(const RunConfig& config, const Context& ctx);
int cmd_cumulants(const RunConfig& config, const Context& ctx);
int cmd_transitions(const RunConfig& config, const Context& ctx);
int cmd_verify_mc(const RunConfig& config, const Context& ctx);
int cmd_joint(const RunConfig& config, const Context& ctx);

/// Full front end: `ldgas <command> <config> [--out DIR] [--threads K]`.
/// Library errors are reported on `err` as one line and mapped to exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ldgas::cli
