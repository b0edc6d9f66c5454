#pragma once

#include "config.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace hyperlr::runner {

/// Exit statuses of the runner.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitInconclusive = 2;

const std::vector<std::string>& command_names();

/// Runs one subcommand, writing `<name>.json` and CSV curves into out_dir.
/// Returns kExitOk or kExitInconclusive; errors propagate as exceptions.
int run_command(const std::string& name, const ExperimentConfig& config, const std::string& out_dir,
                std::ostream& log);

}  // namespace hyperlr::runner
