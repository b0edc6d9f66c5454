#pragma once

// Covariant splitting E^c + E^s + E^u along orbits, decomposition of a
// perturbation field, and the center-unstable divergence C.

#include "hyperlr/fields.hpp"
#include "hyperlr/flow_core.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace hyperlr {

struct ClvOptions {
  /// Transient discarded at both ends of the trajectory (time units).
  double warmup = 200.0;
  /// Smallest tolerated angle between distinct covariant lines.
  double min_angle = 1e-6;
};

/// Dual projectors at one sample; P_c + P_s + P_u = I.
struct Projectors {
  Mat center;
  Mat stable;
  Mat unstable;
};

struct SplitFrame {
  std::uint64_t system_id = 0;
  int dim = 0;
  int n_unstable = 0;
  int n_stable = 0;
  double dt = 0.0;
  double warmup = 0.0;
  std::vector<double> times;
  std::vector<Vec> points;
  /// Unit covariant vectors as columns, ordered unstable, center, stable.
  std::vector<Mat> basis;
  /// Lyapunov exponents in decreasing order (the center one is not forced to 0).
  std::vector<double> exponents;
  /// Smallest angle between distinct covariant lines over the window.
  double min_angle = 0.0;

  std::size_t size() const { return points.size(); }
  int center_index() const { return n_unstable; }
  Vec center(std::size_t i) const { return basis[i].col(n_unstable); }
  /// First unstable / last stable vector.
  Vec unstable(std::size_t i) const { return basis[i].col(0); }
  Vec stable(std::size_t i) const { return basis[i].col(dim - 1); }
  Projectors projectors(std::size_t i) const;
};

/// Ginelli-style forward QR sweep and backward upper-triangular sweep over the
/// trajectory; the returned frame covers the samples at least `warmup` away from both ends.
SplitFrame compute_clv(const FlowSystem& system, const Trajectory& traj, const ClvOptions& options = {});

/// Frame at an arbitrary point of the cat suspension (one stable, one unstable
/// direction), by pushing tangents along the orbit through p for `horizon`
/// time units. Chart points slightly outside 0 <= s < psi are accepted and
/// answered in the same (extended) chart.
struct PointFrame {
  Vec point;
  Vec center;
  Vec unstable;
  Vec stable;
};

struct PointFrameOptions {
  double horizon = 30.0;
  /// Step for non-exact flows; exact flows advance in unit chunks.
  double dt = 0.01;
};

PointFrame frame_at(const FlowSystem& system, const Vec& p, const PointFrameOptions& options = {});

struct FieldSplit {
  Vec center;
  Vec stable;
  Vec unstable;
  /// X^c = eta * base field.
  double eta = 0.0;
};

/// Oblique projection of a vector v at p onto a basis ordered (unstable.., center, stable..).
FieldSplit split_vector(const FlowSystem& system, const Vec& p, const Mat& basis, int n_unstable, const Vec& v);

std::vector<FieldSplit> split_field(const FlowSystem& system, const VectorField& X, const SplitFrame& frame);

/// Scaled unstable vector whose horizontal part has unit length and points along
/// the cat-map unstable eigenvector; likewise for the stable one.
Vec section_unstable(const Vec& unstable);
Vec section_stable(const Vec& stable);

struct DivergenceOptions {
  double h = 1e-4;
  /// Evaluate C every `stride` samples.
  int stride = 1;
  /// Run the h/2 Richardson comparison every `richardson_every` evaluated samples (0 disables).
  int richardson_every = 10;
  PointFrameOptions frame;
};

struct DivergenceSamples {
  std::vector<double> times;
  std::vector<Vec> points;
  std::vector<double> values;
  /// Time derivative of eta (the part carried by X^c).
  std::vector<double> from_center;
  /// Derivative of the unstable coefficient along the unstable direction.
  std::vector<double> from_unstable;
  double h = 0.0;
  /// Largest |C_h - C_{h/2}| over the checked samples.
  double richardson_gap = 0.0;
  /// Estimated frame noise divided by h.
  double noise_floor = 0.0;
  std::vector<std::string> warnings;
};

/// C = div^cu (X^c + X^u) along the frame's samples. Only the cat suspension
/// (one unstable direction, horizontal-arclength volume on unstable fibers) is supported.
DivergenceSamples estimate_divergence_C(const FlowSystem& system, const VectorField& X, const SplitFrame& frame,
                                        const DivergenceOptions& options = {});

/// t, exponents, angles between the covariant lines.
void write_frame_csv(std::ostream& os, const SplitFrame& frame);
/// t, C, from_center, from_unstable.
void write_divergence_csv(std::ostream& os, const DivergenceSamples& samples);

}  // namespace hyperlr
