#pragma once

// Phase spaces, parametrized flows, trajectories and tangent maps for the
// concrete testbeds: the cat-map suspension (a mapping torus of the toral
// automorphism (2,1;1,1) under a positive roof), Lorenz-63, and user ODEs.

#include "hyperlr/common.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace hyperlr {

/// Vector field in chart coordinates with an optional analytic Jacobian.
struct VectorField {
  std::string name;
  std::function<Vec(const Vec&)> eval;
  /// Empty means "use central differences".
  std::function<Mat(const Vec&)> jacobian;
  /// Known to vanish identically; lets integrators skip work.
  bool is_zero = false;

  Vec operator()(const Vec& p) const { return eval(p); }
  Mat jacobian_at(const Vec& p, double h = 1e-6) const;
};

VectorField zero_field(int dim);

enum class SystemKind { CatSuspension, Lorenz63, CustomOde };

std::string to_string(SystemKind kind);

/// Roof over the torus: psi(x) = mean + amp_x1 cos(2 pi x1) + amp_x2 sin(2 pi x2).
struct CatRoof {
  double mean = 1.0;
  double amp_x1 = 0.05;
  double amp_x2 = 0.0;

  double value(double x1, double x2) const;
  std::array<double, 2> gradient(double x1, double x2) const;
  double min_value() const;
  double max_value() const;
  bool constant() const { return amp_x1 == 0.0 && amp_x2 == 0.0; }
};

/// Lowest admissible roof value.
inline constexpr double kRoofFloor = 0.5;

/// Fixed linear algebra of the cat map M = (2,1;1,1).
struct CatMap {
  /// Expanding eigenvalue (3+sqrt 5)/2.
  static double expansion();
  /// Unit eigenvectors of M in the horizontal plane.
  static std::array<double, 2> unstable_direction();
  static std::array<double, 2> stable_direction();
  /// x -> M x mod 1 (componentwise wrap into [0,1)).
  static std::array<double, 2> forward(double x1, double x2);
  static std::array<double, 2> backward(double x1, double x2);
};

/// Wraps into [0,1).
double wrap_unit(double v);

/// Recorded passage through the roof: `before` sits on the roof, `after` on the base.
struct CrossingEvent {
  double time = 0.0;
  Vec before;
  Vec after;
};

class FlowSystem;

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> points;
  std::vector<CrossingEvent> crossings;
  double dt = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t system_id = 0;

  std::size_t size() const { return points.size(); }
};

/// A parametrized vector field base + a * perturbation on a concrete chart.
/// Instances are immutable; copies share an identity used to match trajectories.
class FlowSystem {
 public:
  static FlowSystem cat_suspension(const CatRoof& roof, VectorField perturbation = {}, double a = 0.0);
  static FlowSystem lorenz63(double sigma = 10.0, double rho = 28.0, double beta = 8.0 / 3.0,
                             VectorField perturbation = {}, double a = 0.0);
  static FlowSystem custom(int dim, VectorField base, VectorField perturbation = {}, double a = 0.0);

  FlowSystem with_parameter(double a) const;
  FlowSystem with_perturbation(VectorField perturbation) const;

  SystemKind kind() const { return kind_; }
  int dim() const { return dim_; }
  double parameter() const { return a_; }
  std::uint64_t id() const { return id_; }
  const CatRoof& roof() const;
  std::vector<std::string> coordinate_names() const;

  Vec base_field(const Vec& p) const;
  Vec perturbation(const Vec& p) const { return perturbation_.eval(p); }
  const VectorField& perturbation_field() const { return perturbation_; }
  const VectorField& base_vector_field() const { return base_; }
  Vec field(const Vec& p) const;
  Mat field_jacobian(const Vec& p) const;

  /// Time-t maps are available in closed form (unperturbed suspension).
  bool exact() const;
  bool is_valid(const Vec& p) const;
  /// Canonical chart representative (torus coordinates wrapped, height in [0, psi)).
  Vec canonical(const Vec& p) const;

  /// Advances p by dt (which may be negative). When `tangent` is given it is
  /// multiplied on the left by the derivative of the step. Roof crossings are
  /// appended to `events` with absolute times offset by `t0`.
  void advance(Vec& p, double dt, Mat* tangent = nullptr, std::vector<CrossingEvent>* events = nullptr,
               double t0 = 0.0) const;

  /// Derivative relating two chart representations of the same point: identity
  /// when they coincide, the gluing derivative when `to` is the image of `from`
  /// under the roof identification (or its inverse). Throws if neither holds.
  Mat chart_transition(const Vec& from, const Vec& to, double tol = 1e-8) const;

  /// Uniform draw in the chart region (Lebesgue on the suspension, a box for ODEs).
  template <class Rng>
  Vec draw_initial(Rng& rng) const;

  /// Box used by draw_initial for ODE kinds.
  void set_sampling_box(const Vec& lo, const Vec& hi);

 private:
  FlowSystem() = default;
  void advance_exact(Vec& p, double dt, Mat* tangent, std::vector<CrossingEvent>* events, double t0) const;
  void advance_rk4(Vec& p, double dt, Mat* tangent, std::vector<CrossingEvent>* events, double t0) const;
  void rk4_step(Vec& p, double h, Mat* tangent) const;
  double uniform_sample(double u, double lo, double hi) const { return lo + (hi - lo) * u; }

  SystemKind kind_ = SystemKind::CustomOde;
  int dim_ = 0;
  double a_ = 0.0;
  std::uint64_t id_ = 0;
  CatRoof roof_;
  VectorField base_;
  VectorField perturbation_;
  Vec box_lo_;
  Vec box_hi_;
};

/// Samples of f^t p0 on [0, T] at spacing dt (a shorter final step if T is not a multiple).
Trajectory integrate_orbit(const FlowSystem& system, const Vec& p0, double T, double dt, std::uint64_t seed = 0);

/// (T_{p0} f^t) v0 at every sample of `traj`.
std::vector<Vec> tangent_propagate(const FlowSystem& system, const Trajectory& traj, const Vec& v0);

/// Trapezoid quadrature of int_0^T (T_{f^{-s}p} f^s) Y(f^{-s}p) ds along the backward orbit of p.
Vec pullback_accumulate(const FlowSystem& system, const Vec& p, const std::function<Vec(const Vec&)>& Y,
                        double T, double dt);

/// CSV with header "t,<coordinate names>".
void write_trajectory_csv(std::ostream& os, const FlowSystem& system, const Trajectory& traj);

// ---------------------------------------------------------------------------

template <class Rng>
Vec FlowSystem::draw_initial(Rng& rng) const {
  auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  Vec p(dim_);
  if (kind_ == SystemKind::CatSuspension) {
    // Rejection sampling gives the normalized volume under the roof.
    const double top = roof_.max_value();
    for (;;) {
      p[0] = unit();
      p[1] = unit();
      p[2] = unit() * top;
      if (p[2] < roof_.value(p[0], p[1])) return p;
    }
  }
  for (int i = 0; i < dim_; ++i) p[i] = uniform_sample(unit(), box_lo_[i], box_hi_[i]);
  return p;
}

}  // namespace hyperlr
