#pragma once

// SRB averages and derivatives of SRB averages with respect to the
// perturbation parameter: finite differences, the damped response integral,
// the susceptibility curve, the stable/unstable split, and the response to a
// time-dependent perturbation.

#include "hyperlr/fields.hpp"
#include "hyperlr/flow_core.hpp"
#include "hyperlr/hyperbolic_split.hpp"
#include "hyperlr/statistics.hpp"

#include <complex>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace hyperlr {

/// Deterministic per-index stream seed.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index);

/// Uniform chart draw for stream `index`, evolved through `warmup`.
Vec srb_sample(const FlowSystem& system, std::uint64_t seed, std::uint64_t index, double warmup, double dt);

struct BirkhoffEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  double T = 0.0;
  int n_orbits = 0;
  int n_excluded = 0;
  double warmup = 0.0;
  /// Batch means (orbit-major sample order) behind std_error.
  std::vector<double> batch_values;
  std::vector<std::string> excluded;
};

/// Time averages over n_orbits orbits of length T after warmup, sampled every dt.
BirkhoffEstimate birkhoff_average(const FlowSystem& system, const Observable& A, double T, int n_orbits,
                                  double warmup, double dt, std::uint64_t seed);

enum class ResponseMethod { FiniteDifference, DirectDamped, Susceptibility, StableUnstableSplit, Nonautonomous };

std::string to_string(ResponseMethod method);

struct ResponseReport {
  ResponseMethod method = ResponseMethod::FiniteDifference;
  double value = 0.0;
  double std_error = 0.0;
  /// Named controls and intermediate results, in insertion order.
  std::vector<std::pair<std::string, double>> diagnostics;
  std::vector<std::string> warnings;
  /// Statistical error exceeds |value|.
  bool inconclusive = false;

  void set(const std::string& key, double v);
  double get(const std::string& key) const;
  bool has(const std::string& key) const;
};

struct FiniteDifferenceOptions {
  double a_step = 0.02;
  double T = 2e4;
  int n_orbits = 4;
  double warmup = 50.0;
  double dt = 0.02;
  std::uint64_t seed = 1;
};

/// (rho_{+a}(A) - rho_{-a}(A)) / 2a with matched initial points.
ResponseReport finite_difference_response(const FlowSystem& system, const Observable& A,
                                          const FiniteDifferenceOptions& options);

// ---------------------------------------------------------------------------
// Response kernel K(t) = < X . grad(A o f^t) >, shared by the damped,
// susceptibility and nonautonomous estimators.

struct KernelOptions {
  /// Lag horizon and spacing.
  double T = 6.0;
  double dt = 0.05;
  int n_samples = 20000;
  double warmup = 20.0;
  std::uint64_t seed = 1;
  int batches = kBatches;
  /// Tangent norm beyond which a sample's remaining lags are dropped.
  double clip = 1e12;
};

struct KernelCurve {
  std::vector<double> lags;
  /// Trapezoid weights on `lags`.
  std::vector<double> weights;
  /// Per-batch mean kernel, [batch][lag].
  std::vector<std::vector<double>> batch_kernel;
  int n_samples = 0;
  int clipped = 0;
  int excluded = 0;

  std::vector<double> mean() const;
  /// Per-batch values of sum_k weights_k * factor_k * K_k.
  std::vector<double> batch_integrals(const std::vector<double>& factor) const;
  std::vector<std::complex<double>> batch_integrals(const std::vector<std::complex<double>>& factor) const;
};

/// Kernel for the fixed field X.
KernelCurve response_kernel(const FlowSystem& system, const Observable& A, const VectorField& X,
                            const KernelOptions& options);

/// Kernel whose lag-k term uses fields[field_index[k]] at the sample point.
KernelCurve response_kernel_lagged(const FlowSystem& system, const Observable& A,
                                   const std::vector<VectorField>& fields, const std::vector<int>& field_index,
                                   const KernelOptions& options);

/// Per-batch weights for extrapolating values at xs to x = 0: least-squares
/// polynomial of the given degree (degree = xs.size()-1 interpolates).
std::vector<double> intercept_weights(const std::vector<double>& xs, int degree);

struct DirectOptions {
  KernelOptions kernel;
  /// Damping values; with more than one, the value is extrapolated to 0.
  std::vector<double> epsilons{0.2, 0.1};
  /// Degree of the extrapolating polynomial (-1: interpolate all).
  int degree = -1;
};

/// Monte Carlo of int_0^T e^{-eps t} (D A)(T f^t) X dt, extrapolated in eps when several are given.
ResponseReport direct_damped_response(const FlowSystem& system, const Observable& A, const VectorField& X,
                                      const DirectOptions& options);
/// Same from an already computed kernel.
ResponseReport direct_damped_from_kernel(const KernelCurve& kernel, const DirectOptions& options);

struct SusceptibilityCurve {
  std::vector<std::complex<double>> omegas;
  std::vector<std::complex<double>> values;
  std::vector<double> std_errors;
  double epsilon = 0.0;
  double T = 0.0;
  /// Per-batch values, [batch][omega].
  std::vector<std::vector<std::complex<double>>> batch_values;
};

/// Grid Re omega in `re_omegas` at Im omega = eps.
SusceptibilityCurve susceptibility_curve(const KernelCurve& kernel, const std::vector<double>& re_omegas,
                                         double epsilon);
SusceptibilityCurve susceptibility_curve(const FlowSystem& system, const Observable& A, const VectorField& X,
                                         const std::vector<double>& re_omegas, double epsilon,
                                         const KernelOptions& options);

/// chi(i eps) for each eps, extrapolated to eps = 0 with a least-squares line.
ResponseReport susceptibility_response(const KernelCurve& kernel, const std::vector<double>& epsilons,
                                       int degree = 1);

void write_susceptibility_csv(std::ostream& os, const SusceptibilityCurve& curve);
void write_kernel_csv(std::ostream& os, const KernelCurve& kernel);

// ---------------------------------------------------------------------------
// Stable/unstable split.

struct StableShadowResult {
  double value = 0.0;
  /// |estimate(T_back) - estimate(2 T_back)| on the same samples.
  double tail = 0.0;
  /// Largest relative leakage out of E^s before reprojection.
  double max_leak = 0.0;
  std::size_t samples = 0;
};

/// Time average over the frame of (D_x A) V^s(x), V^s(x) = int_0^inf T f^t X^s(f^{-t} x) dt
/// accumulated along the orbit. Averaging starts 2*T_back after the frame start.
StableShadowResult stable_shadow_term(const FlowSystem& system, const Observable& A, const VectorField& X,
                                      const SplitFrame& frame, double T_back);

/// Raw cross-correlation sums of one orbit.
struct CorrelationPiece {
  std::vector<double> lags;
  /// mean_j A(t_j + lag) C(t_j).
  std::vector<double> raw;
  double mean_A = 0.0;
  double mean_C = 0.0;
  std::size_t count_A = 0;
  std::size_t count_C = 0;
};

/// Cross-correlation of A along the frame with C at its sample times, lags up to T.
CorrelationPiece correlate_with_C(const Observable& A, const SplitFrame& frame, const DivergenceSamples& C, double T);

struct UnstableCenterResult {
  double value = 0.0;
  double std_error = 0.0;
  /// Averaged covariance curve.
  std::vector<double> lags;
  std::vector<double> covariance;
  /// Mean |covariance| over the last tenth of the lag window, times the damping there.
  double tail = 0.0;
  double mean_C = 0.0;
  double mean_C_error = 0.0;
};

/// -int_0^T e^{-eps t} [<(A o f^t) C> - <A><C>] dt from per-orbit pieces (one batch per piece).
UnstableCenterResult unstable_center_term(const Observable& A, const std::vector<CorrelationPiece>& pieces,
                                          double epsilon);

struct SplitOptions {
  int n_orbits = 20;
  /// Length of each orbit's usable window (beyond both warmups).
  double T = 400.0;
  double dt = 0.02;
  double clv_warmup = 30.0;
  double T_back = 20.0;
  /// Correlation horizon and damping for the unstable-center term.
  double T_corr = 20.0;
  double epsilon = 0.0;
  DivergenceOptions divergence{};
  double sample_warmup = 10.0;
  std::uint64_t seed = 1;
  /// Warn when the correlation tail exceeds this.
  double tail_tolerance = 5e-3;
};

ResponseReport split_response(const FlowSystem& system, const Observable& A, const VectorField& X,
                                 const SplitOptions& options);

struct MeanCResult {
  MeanError estimate;
  double T = 0.0;
  int n_orbits = 0;
};

/// Birkhoff mean of C over n_orbits orbits with total length T.
MeanCResult divergence_mean(const FlowSystem& system, const VectorField& X, double T, int n_orbits,
                            const SplitOptions& options);

// ---------------------------------------------------------------------------
// Time-dependent perturbations.

struct FieldSchedule {
  /// The field is X_tau = field(tau); constant for tau <= t0.
  double t0 = 0.0;
  std::function<VectorField(double)> field;
};

struct NonautonomousOptions {
  KernelOptions kernel;
  double epsilon = 0.0;
  /// Probe count for the constancy check before t0.
  int probes = 8;
};

/// int_{-inf}^{t_eval} < X_tau . grad(A o f^{t_eval - tau}) > d tau, truncated at lag kernel.T
/// with damping e^{-eps lag}.
ResponseReport nonautonomous_response(const FlowSystem& system, const Observable& A, const FieldSchedule& schedule,
                                      double t_eval, const NonautonomousOptions& options);

}  // namespace hyperlr
