#pragma once

// Thermodynamic formalism for suspension flows over subshifts of finite type
// with finitely many symbols of memory: pressure, Bowen root, Gibbs states,
// suspension averages and correlations, and the leading eigenvalue branch of
// the twisted transfer matrix.

#include "hyperlr/common.hpp"

#include <complex>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hyperlr {

using RealMatrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using Word = std::vector<int>;

/// Smallest k <= n^2 with all entries of tau^k positive; empty when there is none.
std::optional<int> check_mixing(const std::vector<std::vector<int>>& tau);

class SftSystem {
 public:
  /// Enumerates the tau-admissible words of length `memory` in lexicographic order.
  SftSystem(std::vector<std::vector<int>> tau, int memory);

  int alphabet_size() const { return static_cast<int>(tau_.size()); }
  int memory() const { return memory_; }
  const std::vector<std::vector<int>>& transitions() const { return tau_; }
  const std::vector<Word>& words() const { return words_; }
  std::size_t word_count() const { return words_.size(); }
  /// -1 when the word is not an admissible m-word.
  int word_index(const Word& w) const;
  /// Successor words w' of w (w' drops the first symbol of w and appends an admissible one).
  const std::vector<int>& successors(int w) const { return succ_[static_cast<std::size_t>(w)]; }
  /// 0/1 matrix on words matching the successor relation.
  RealMatrix adjacency() const;

  /// Per-word tables (one value per admissible m-word, in word order).
  void set_roof(std::vector<double> roof);
  void set_potential(std::vector<double> potential);
  const std::vector<double>& roof() const { return roof_; }
  const std::vector<double>& potential() const { return potential_; }
  double roof_min() const;

  /// Table from a function of the word.
  std::vector<double> tabulate(const std::function<double(const Word&)>& f) const;

  /// Minimum admissible roof.
  double psi_min = 0.05;

  void validate() const;

 private:
  std::vector<std::vector<int>> tau_;
  int memory_ = 1;
  std::vector<Word> words_;
  std::vector<std::vector<int>> succ_;
  std::vector<double> roof_;
  std::vector<double> potential_;
};

/// Edge shift of the graph with adjacency (2,1;1,1): a symbolic model of the
/// cat map with topological entropy log((3+sqrt 5)/2).
SftSystem cat_map_sft();

/// Transfer matrix L_{w w'} = e^{weight(w)} for admissible w -> w'.
RealMatrix transfer_matrix(const SftSystem& sft, const std::vector<double>& weight);

struct PerronData {
  double eigenvalue = 0.0;
  Eigen::VectorXd right;
  Eigen::VectorXd left;
  /// Largest modulus among the other eigenvalues.
  double second_modulus = 0.0;
};

PerronData perron(const RealMatrix& L);

/// log of the Perron eigenvalue of transfer_matrix(sft, weight).
double pressure(const SftSystem& sft, const std::vector<double>& weight);

/// c with P(phi - c psi) = 0, by bisection and secant refinement to |P| < 1e-12.
double bowen_root(const SftSystem& sft, const std::vector<double>& phi, const std::vector<double>& psi);

struct EquilibriumState {
  /// Gibbs weights on m-words.
  std::vector<double> weights;
  /// Shift kernel on words.
  RealMatrix kernel;
  double c = 0.0;
  double pressure = 0.0;
  double mean_roof = 0.0;
  /// Normalizing eigenfunction (right Perron vector, positive).
  Eigen::VectorXd eigenfunction;
  /// max |mu P - mu|.
  double invariance_residual = 0.0;
};

EquilibriumState equilibrium_state(const SftSystem& sft, const std::vector<double>& phi,
                                   const std::vector<double>& psi, double c);

/// A function on the suspension: (word index, height in [0, psi(word))) -> value.
using SuspensionFunction = std::function<double(int, double)>;

/// Heights quadrature: composite 5-point Gauss-Legendre on an even number of panels.
struct QuadratureOptions {
  /// Panel width; defaults to psi_min/10 and may not exceed it.
  double step = 0.0;
};

/// Integral of A over [0, psi(w)) for each word.
std::vector<double> roof_integrals(const SftSystem& sft, const SuspensionFunction& A, const QuadratureOptions& q = {});

/// nu(A~) / nu(psi) with both integrals computed by the same quadrature.
double suspension_average(const SftSystem& sft, const EquilibriumState& state, const SuspensionFunction& A,
                          const QuadratureOptions& q = {});

struct CorrelationOptions {
  int n_samples = 200000;
  /// Symbols of forward extension; needs n_ext * psi_min >= max t.
  int n_ext = 0;
  std::uint64_t seed = 1;
};

struct FlowCorrelation {
  std::vector<double> t;
  std::vector<double> values;
  std::vector<double> std_errors;
};

/// rho_{BB'}(t) = <(B o f^t) B'> - <B o f^t><B'> by sampling the suspension measure.
FlowCorrelation flow_correlation(const SftSystem& sft, const EquilibriumState& state, const SuspensionFunction& B,
                                 const SuspensionFunction& Bp, const std::vector<double>& t_grid,
                                 const CorrelationOptions& options);

/// Twisted transfer matrix with weights e^{phi - c psi - i omega psi}.
ComplexMatrix twisted_matrix(const SftSystem& sft, const std::vector<double>& phi, const std::vector<double>& psi,
                             double c, std::complex<double> omega);

struct EigenBranch {
  std::complex<double> lambda;
  ComplexVector right;
};

/// Leading eigenvalue at omega continued from the Perron branch at 0 along a straight homotopy.
EigenBranch leading_eigenvalue(const SftSystem& sft, const std::vector<double>& phi, const std::vector<double>& psi,
                               double c, std::complex<double> omega, double max_step = 0.05);

/// d lambda / d omega on the branch through `branch` at omega.
std::complex<double> eigenvalue_derivative(const SftSystem& sft, const std::vector<double>& phi,
                                           const std::vector<double>& psi, double c, std::complex<double> omega,
                                           const EigenBranch& branch);

struct ScanStrip {
  double re_max = 7.0;
  double im_min = -0.5;
  double im_max = 0.1;
  double re_step = 1e-2;
  double im_step = 0.05;
  double newton_tol = 1e-10;
};

struct Resonance {
  std::complex<double> omega;
  std::complex<double> lambda;
  std::complex<double> derivative;
  bool refined = false;
  int iterations = 0;
};

struct SpectralScan {
  std::vector<double> re_grid;
  std::vector<double> im_grid;
  /// lambda on the grid, [im index][re index].
  std::vector<std::vector<std::complex<double>>> lambda;
  std::vector<Resonance> roots;
  /// Smallest neighbor eigenvector overlap met while stitching.
  double min_overlap = 1.0;
};

/// Thrown when neighboring eigenvectors overlap less than 0.9.
class BranchError : public NumericalError {
 public:
  BranchError(std::complex<double> omega, double overlap);
  std::complex<double> omega() const noexcept { return omega_; }

 private:
  std::complex<double> omega_;
};

SpectralScan resonance_scan(const SftSystem& sft, const std::vector<double>& phi, const std::vector<double>& psi,
                            double c, const ScanStrip& strip);

/// Newton on 1 - lambda(omega) from `start`, tracking the branch through `branch`.
Resonance refine_root(const SftSystem& sft, const std::vector<double>& phi, const std::vector<double>& psi, double c,
                      std::complex<double> start, EigenBranch branch, double tol = 1e-10);

/// Average of `table` around a cyclic symbol sequence (admissibility required).
double cycle_average(const SftSystem& sft, const std::vector<double>& table, const Word& cycle);

void write_scan_csv(std::ostream& os, const SpectralScan& scan);

}  // namespace hyperlr
