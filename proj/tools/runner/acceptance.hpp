#pragma once

// The acceptance suite shared by `hyperlr verify` and the test binary.

#include "config.hpp"

#include <functional>
#include <string>
#include <vector>

namespace hyperlr::runner {

struct CriterionOutcome {
  int id = 0;
  std::string title;
  bool passed = false;
  /// One-line result summary.
  std::string summary;
  Json details;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  std::uint64_t seed_offset = 0;
  /// Criteria to run (empty = all).
  std::vector<int> only;
};

/// Runs the criteria in order; `progress` is called after each one.
std::vector<CriterionOutcome> run_acceptance(const AcceptanceOptions& options,
                                             const std::function<void(const CriterionOutcome&)>& progress = {});

/// "[PASS] 4 CLV correctness: ..." style line.
std::string format_line(const CriterionOutcome& c);

Json acceptance_manifest(const std::vector<CriterionOutcome>& outcomes);

}  // namespace hyperlr::runner
