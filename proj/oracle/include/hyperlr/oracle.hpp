#pragma once

// Brute-force reference values. Only the standard library is used here, so
// agreement with the main modules is an independent check.

#include <optional>
#include <string>
#include <vector>

namespace hyperlr::oracle {

enum class Exactness { Exact, MonteCarlo };

struct OracleResult {
  std::string name;
  std::vector<double> values;
  /// Present exactly when exactness is MonteCarlo.
  std::optional<double> sigma;
  std::string method;
  Exactness exactness = Exactness::Exact;
  bool inconclusive = false;
};

std::string to_string(Exactness e);

using Table = std::vector<double>;
using Transitions = std::vector<std::vector<int>>;

/// Perron root of the n x n matrix with entries tau_ij * exp(weight_i), by power iteration.
double perron_root(const Transitions& tau, const Table& weight);

struct GibbsChain {
  /// Root of c -> P(phi - c psi), found by bisection.
  double c = 0.0;
  /// P(phi) at c = 0.
  double pressure = 0.0;
  /// Stationary distribution of the normalized chain.
  Table distribution;
  /// Transition probabilities of the normalized chain.
  std::vector<Table> kernel;
};

/// Memory-1 equilibrium state of phi - c psi with c the Bowen root.
GibbsChain markov_gibbs(const Transitions& tau, const Table& phi, const Table& psi);

/// sum_i p_i psi_i A_i / sum_i p_i psi_i for a suspension observable depending on the first symbol only.
double symbol_suspension_average(const Table& distribution, const Table& psi, const Table& A);

/// All tau-admissible cycles of period <= max_period up to rotation (primitive, in
/// lexicographically least rotation), ordered by period then lexicographically.
std::vector<std::vector<int>> periodic_orbits(const Transitions& tau, int max_period);

/// Central-difference slope from matched per-batch averages at +a and -a.
OracleResult fd_slope(const Table& plus_batches, const Table& minus_batches, double a);

/// 2 pi k inside {|Re| <= re_max, im_min <= Im <= im_max}; every such root is real.
Table constant_roof_resonances(double re_max, double im_min, double im_max);

}  // namespace hyperlr::oracle
