#include "acceptance.hpp"

#include <cstdlib>
#include <iostream>
#include <string>

// Prints one line per criterion; exit status is nonzero if any fails.
int main(int argc, char** argv) {
  hyperlr::runner::AcceptanceOptions options;
  for (int i = 1; i < argc; ++i) options.only.push_back(std::atoi(argv[i]));
  bool ok = true;
  hyperlr::runner::run_acceptance(options, [&](const hyperlr::runner::CriterionOutcome& c) {
    std::cout << hyperlr::runner::format_line(c) << " [" << c.seconds << " s]" << std::endl;
    if (std::getenv("HYPERLR_ACCEPTANCE_DETAILS")) std::cout << c.details.dump(2) << std::endl;
    ok = ok && c.passed;
  });
  return ok ? 0 : 1;
}
