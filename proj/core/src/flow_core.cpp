#include "hyperlr/flow_core.hpp"

#include <atomic>
#include <cmath>
#include <ostream>

namespace hyperlr {

namespace {

std::atomic<std::uint64_t> g_next_system_id{1};

std::uint64_t next_id() { return g_next_system_id.fetch_add(1, std::memory_order_relaxed); }

const double kSqrt5 = std::sqrt(5.0);

}  // namespace

Mat VectorField::jacobian_at(const Vec& p, double h) const {
  if (jacobian) return jacobian(p);
  const int n = static_cast<int>(p.size());
  Mat J(n, n);
  if (is_zero) {
    J.setZero();
    return J;
  }
  for (int j = 0; j < n; ++j) {
    Vec plus = p;
    Vec minus = p;
    plus[j] += h;
    minus[j] -= h;
    J.col(j) = (eval(plus) - eval(minus)) / (2.0 * h);
  }
  return J;
}

VectorField zero_field(int dim) {
  VectorField f;
  f.name = "zero";
  f.eval = [dim](const Vec&) { return Vec(Vec::Zero(dim)); };
  f.jacobian = [dim](const Vec&) { return Mat(Mat::Zero(dim, dim)); };
  f.is_zero = true;
  return f;
}

std::string to_string(SystemKind kind) {
  switch (kind) {
    case SystemKind::CatSuspension:
      return "cat_suspension";
    case SystemKind::Lorenz63:
      return "lorenz63";
    case SystemKind::CustomOde:
      return "custom_ode";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Roof and cat map

double CatRoof::value(double x1, double x2) const {
  return mean + amp_x1 * std::cos(kTwoPi * x1) + amp_x2 * std::sin(kTwoPi * x2);
}

std::array<double, 2> CatRoof::gradient(double x1, double x2) const {
  return {-kTwoPi * amp_x1 * std::sin(kTwoPi * x1), kTwoPi * amp_x2 * std::cos(kTwoPi * x2)};
}

double CatRoof::min_value() const { return mean - std::abs(amp_x1) - std::abs(amp_x2); }
double CatRoof::max_value() const { return mean + std::abs(amp_x1) + std::abs(amp_x2); }

double wrap_unit(double v) {
  double w = v - std::floor(v);
  if (w >= 1.0) w = 0.0;
  return w;
}

double CatMap::expansion() { return 0.5 * (3.0 + kSqrt5); }

std::array<double, 2> CatMap::unstable_direction() {
  const double b = 0.5 * (kSqrt5 - 1.0);
  const double n = std::sqrt(1.0 + b * b);
  return {1.0 / n, b / n};
}

std::array<double, 2> CatMap::stable_direction() {
  const auto u = unstable_direction();
  return {-u[1], u[0]};
}

std::array<double, 2> CatMap::forward(double x1, double x2) {
  return {wrap_unit(2.0 * x1 + x2), wrap_unit(x1 + x2)};
}

std::array<double, 2> CatMap::backward(double x1, double x2) {
  return {wrap_unit(x1 - x2), wrap_unit(-x1 + 2.0 * x2)};
}

// ---------------------------------------------------------------------------
// Construction

FlowSystem FlowSystem::cat_suspension(const CatRoof& roof, VectorField perturbation, double a) {
  if (!(roof.min_value() >= kRoofFloor))
    throw ValidationError("roof minimum " + std::to_string(roof.min_value()) + " below floor " +
                          std::to_string(kRoofFloor));
  FlowSystem s;
  s.kind_ = SystemKind::CatSuspension;
  s.dim_ = 3;
  s.a_ = a;
  s.id_ = next_id();
  s.roof_ = roof;
  s.base_.name = "vertical";
  s.base_.eval = [](const Vec&) {
    Vec v(3);
    v << 0.0, 0.0, 1.0;
    return v;
  };
  s.base_.jacobian = [](const Vec&) { return Mat(Mat::Zero(3, 3)); };
  s.perturbation_ = perturbation.eval ? std::move(perturbation) : zero_field(3);
  return s;
}

FlowSystem FlowSystem::lorenz63(double sigma, double rho, double beta, VectorField perturbation, double a) {
  FlowSystem s;
  s.kind_ = SystemKind::Lorenz63;
  s.dim_ = 3;
  s.a_ = a;
  s.id_ = next_id();
  s.base_.name = "lorenz63";
  s.base_.eval = [sigma, rho, beta](const Vec& p) {
    Vec v(3);
    v << sigma * (p[1] - p[0]), p[0] * (rho - p[2]) - p[1], p[0] * p[1] - beta * p[2];
    return v;
  };
  s.base_.jacobian = [sigma, rho, beta](const Vec& p) {
    Mat J(3, 3);
    J << -sigma, sigma, 0.0, rho - p[2], -1.0, -p[0], p[1], p[0], -beta;
    return J;
  };
  s.perturbation_ = perturbation.eval ? std::move(perturbation) : zero_field(3);
  s.box_lo_ = Vec(3);
  s.box_hi_ = Vec(3);
  s.box_lo_ << -15.0, -20.0, 5.0;
  s.box_hi_ << 15.0, 20.0, 45.0;
  return s;
}

FlowSystem FlowSystem::custom(int dim, VectorField base, VectorField perturbation, double a) {
  if (dim < 2 || dim > kMaxDim) throw ValidationError("custom ODE dimension must be in [2, 6]");
  if (!base.eval) throw ValidationError("custom ODE needs a base field");
  FlowSystem s;
  s.kind_ = SystemKind::CustomOde;
  s.dim_ = dim;
  s.a_ = a;
  s.id_ = next_id();
  s.base_ = std::move(base);
  s.perturbation_ = perturbation.eval ? std::move(perturbation) : zero_field(dim);
  s.box_lo_ = Vec::Constant(dim, -1.0);
  s.box_hi_ = Vec::Constant(dim, 1.0);
  return s;
}

FlowSystem FlowSystem::with_parameter(double a) const {
  FlowSystem s = *this;
  s.a_ = a;
  s.id_ = next_id();
  return s;
}

FlowSystem FlowSystem::with_perturbation(VectorField perturbation) const {
  FlowSystem s = *this;
  s.perturbation_ = perturbation.eval ? std::move(perturbation) : zero_field(dim_);
  s.id_ = next_id();
  return s;
}

void FlowSystem::set_sampling_box(const Vec& lo, const Vec& hi) {
  require(lo.size() == dim_ && hi.size() == dim_, "sampling box dimension mismatch");
  box_lo_ = lo;
  box_hi_ = hi;
}

const CatRoof& FlowSystem::roof() const {
  if (kind_ != SystemKind::CatSuspension) throw UnsupportedError("roof() requires the cat suspension");
  return roof_;
}

std::vector<std::string> FlowSystem::coordinate_names() const {
  switch (kind_) {
    case SystemKind::CatSuspension:
      return {"x1", "x2", "s"};
    case SystemKind::Lorenz63:
      return {"x", "y", "z"};
    case SystemKind::CustomOde:
      break;
  }
  std::vector<std::string> names;
  for (int i = 0; i < dim_; ++i) names.push_back("q" + std::to_string(i));
  return names;
}

// ---------------------------------------------------------------------------
// Fields

Vec FlowSystem::base_field(const Vec& p) const { return base_.eval(p); }

Vec FlowSystem::field(const Vec& p) const {
  Vec v = base_.eval(p);
  if (a_ != 0.0 && !perturbation_.is_zero) v += a_ * perturbation_.eval(p);
  return v;
}

Mat FlowSystem::field_jacobian(const Vec& p) const {
  Mat J = base_.jacobian_at(p);
  if (a_ != 0.0 && !perturbation_.is_zero) J += a_ * perturbation_.jacobian_at(p);
  return J;
}

bool FlowSystem::exact() const {
  return kind_ == SystemKind::CatSuspension && (a_ == 0.0 || perturbation_.is_zero);
}

bool FlowSystem::is_valid(const Vec& p) const {
  if (p.size() != dim_ || !p.allFinite()) return false;
  if (kind_ == SystemKind::CatSuspension) {
    const double top = roof_.value(p[0], p[1]);
    return p[2] >= -1e-9 && p[2] <= top + 1e-9;
  }
  return true;
}

Vec FlowSystem::canonical(const Vec& p) const {
  if (kind_ != SystemKind::CatSuspension) return p;
  Vec q = p;
  q[0] = wrap_unit(q[0]);
  q[1] = wrap_unit(q[1]);
  // Heights outside [0, psi) are resolved by flowing zero time through the identification.
  if (q[2] < 0.0 || q[2] >= roof_.value(q[0], q[1])) {
    const double s = q[2];
    q[2] = 0.0;
    advance_exact(q, s, nullptr, nullptr, 0.0);
  }
  return q;
}

// ---------------------------------------------------------------------------
// Integration

namespace {

// Derivative of the gluing map (x, s) -> (M x, s - psi(x)).
Mat glue_derivative(const CatRoof& roof, double x1, double x2) {
  const auto g = roof.gradient(x1, x2);
  Mat D(3, 3);
  D << 2.0, 1.0, 0.0, 1.0, 1.0, 0.0, -g[0], -g[1], 1.0;
  return D;
}

// Derivative of the inverse gluing map (x, s) -> (M^{-1} x, s + psi(M^{-1} x)),
// with the gradient of psi taken at the preimage.
Mat unglue_derivative(const CatRoof& roof, double pre1, double pre2) {
  const auto g = roof.gradient(pre1, pre2);
  // grad(psi)^T M^{-1}, with M^{-1} = (1,-1;-1,2).
  const double r1 = g[0] - g[1];
  const double r2 = -g[0] + 2.0 * g[1];
  Mat D(3, 3);
  D << 1.0, -1.0, 0.0, -1.0, 2.0, 0.0, r1, r2, 1.0;
  return D;
}

}  // namespace

namespace {

double torus_gap(double a, double b) {
  const double d = std::abs(a - b);
  const double w = d - std::floor(d);
  return std::min(w, 1.0 - w);
}

bool same_chart_point(const Vec& a, const Vec& b, double tol) {
  return torus_gap(a[0], b[0]) <= tol && torus_gap(a[1], b[1]) <= tol && std::abs(a[2] - b[2]) <= tol;
}

}  // namespace

Mat FlowSystem::chart_transition(const Vec& from, const Vec& to, double tol) const {
  const int n = dim_;
  if (kind_ != SystemKind::CatSuspension) return Mat::Identity(n, n);
  if (same_chart_point(from, to, tol)) return Mat::Identity(n, n);
  // to = G(from) with G(x, s) = (M x, s - psi(x)).
  const auto fx = CatMap::forward(from[0], from[1]);
  Vec glued(3);
  glued << fx[0], fx[1], from[2] - roof_.value(from[0], from[1]);
  if (same_chart_point(glued, to, tol)) return glue_derivative(roof_, from[0], from[1]);
  const auto bx = CatMap::backward(from[0], from[1]);
  Vec unglued(3);
  unglued << bx[0], bx[1], from[2] + roof_.value(bx[0], bx[1]);
  if (same_chart_point(unglued, to, tol)) return unglue_derivative(roof_, bx[0], bx[1]);
  throw ContractViolation("chart_transition: points are not chart representations of one point");
}

void FlowSystem::advance(Vec& p, double dt, Mat* tangent, std::vector<CrossingEvent>* events, double t0) const {
  if (dt == 0.0) return;
  if (exact()) {
    advance_exact(p, dt, tangent, events, t0);
  } else {
    advance_rk4(p, dt, tangent, events, t0);
  }
  if (!p.allFinite()) throw IntegrationDiverged(t0 + dt, "non-finite state");
  if (tangent && !tangent->allFinite()) throw IntegrationDiverged(t0 + dt, "non-finite tangent");
}

void FlowSystem::advance_exact(Vec& p, double dt, Mat* tangent, std::vector<CrossingEvent>* events,
                               double t0) const {
  double elapsed = 0.0;
  if (dt > 0.0) {
    double remaining = dt;
    for (;;) {
      const double top = roof_.value(p[0], p[1]);
      const double to_top = top - p[2];
      if (remaining < to_top) {
        p[2] += remaining;
        return;
      }
      remaining -= to_top;
      elapsed += to_top;
      Vec before = p;
      before[2] = top;
      if (tangent) *tangent = glue_derivative(roof_, p[0], p[1]) * (*tangent);
      const auto x = CatMap::forward(p[0], p[1]);
      p[0] = x[0];
      p[1] = x[1];
      p[2] = 0.0;
      if (events) events->push_back({t0 + elapsed, before, p});
    }
  }
  double remaining = -dt;
  for (;;) {
    if (remaining <= p[2]) {
      p[2] -= remaining;
      return;
    }
    remaining -= p[2];
    elapsed -= p[2];
    Vec after = p;
    after[2] = 0.0;
    const auto x = CatMap::backward(p[0], p[1]);
    if (tangent) *tangent = unglue_derivative(roof_, x[0], x[1]) * (*tangent);
    p[0] = x[0];
    p[1] = x[1];
    p[2] = roof_.value(x[0], x[1]);
    if (events) events->push_back({t0 + elapsed, p, after});
  }
}

void FlowSystem::rk4_step(Vec& p, double h, Mat* tangent) const {
  const Vec k1 = field(p);
  const Vec p2 = p + 0.5 * h * k1;
  const Vec k2 = field(p2);
  const Vec p3 = p + 0.5 * h * k2;
  const Vec k3 = field(p3);
  const Vec p4 = p + h * k3;
  const Vec k4 = field(p4);
  if (tangent) {
    const Mat& J = *tangent;
    const Mat L1 = field_jacobian(p) * J;
    const Mat L2 = field_jacobian(p2) * (J + 0.5 * h * L1);
    const Mat L3 = field_jacobian(p3) * (J + 0.5 * h * L2);
    const Mat L4 = field_jacobian(p4) * (J + h * L3);
    *tangent = J + (h / 6.0) * (L1 + 2.0 * L2 + 2.0 * L3 + L4);
  }
  p += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

void FlowSystem::advance_rk4(Vec& p, double dt, Mat* tangent, std::vector<CrossingEvent>* events,
                             double t0) const {
  if (kind_ != SystemKind::CatSuspension) {
    rk4_step(p, dt, tangent);
    return;
  }
  // Suspension with a non-vertical field: RK4 in the chart, with the roof
  // (forward) or the base (backward) located by Newton on the step fraction.
  const bool forward = dt > 0.0;
  auto event_value = [&](const Vec& q) { return forward ? q[2] - roof_.value(q[0], q[1]) : q[2]; };
  auto event_normal = [&](const Vec& q) {
    Vec n(3);
    if (forward) {
      const auto g = roof_.gradient(q[0], q[1]);
      n << -g[0], -g[1], 1.0;
    } else {
      n << 0.0, 0.0, 1.0;
    }
    return n;
  };

  Vec trial = p;
  Mat trial_tangent;
  if (tangent) trial_tangent = *tangent;
  rk4_step(trial, dt, tangent ? &trial_tangent : nullptr);
  const double h_end = event_value(trial);
  const bool crossed = forward ? h_end >= 0.0 : h_end < 0.0;
  if (!crossed) {
    p = trial;
    if (tangent) *tangent = trial_tangent;
    p[0] = wrap_unit(p[0]);
    p[1] = wrap_unit(p[1]);
    return;
  }

  // Newton on theta in (0, 1]: event_value(RK4(p, theta dt)) = 0.
  const double h0 = event_value(p);
  double theta = std::clamp(h0 / (h0 - h_end), 0.0, 1.0);
  Vec q = p;
  for (int it = 0; it < 50; ++it) {
    q = p;
    rk4_step(q, theta * dt, nullptr);
    const double hv = event_value(q);
    const double slope = dt * event_normal(q).dot(field(q));
    if (slope == 0.0) break;
    const double step = hv / slope;
    theta = std::clamp(theta - step, 0.0, 1.0);
    if (std::abs(step) < 1e-15) break;
  }
  Vec pc = p;
  if (tangent) {
    rk4_step(pc, theta * dt, tangent);
  } else {
    rk4_step(pc, theta * dt, nullptr);
  }
  // Snap exactly onto the event surface.
  if (forward) {
    pc[2] = roof_.value(pc[0], pc[1]);
  } else {
    pc[2] = 0.0;
  }
  const Vec before = pc;
  const Vec f_minus = field(pc);
  const Vec normal = event_normal(pc);
  Vec after(3);
  Mat D(3, 3);
  if (forward) {
    D = glue_derivative(roof_, pc[0], pc[1]);
    const auto x = CatMap::forward(pc[0], pc[1]);
    after << x[0], x[1], 0.0;
  } else {
    const auto x = CatMap::backward(pc[0], pc[1]);
    D = unglue_derivative(roof_, x[0], x[1]);
    after << x[0], x[1], roof_.value(x[0], x[1]);
  }
  if (tangent) {
    // Saltation: v+ = D v - (D F- - F+) (n . v) / (n . F-).
    const Vec f_plus = field(after);
    const Mat S = D - (D * f_minus - f_plus) * normal.transpose() / normal.dot(f_minus);
    *tangent = S * (*tangent);
  }
  const double t_event = t0 + theta * dt;
  if (events) {
    if (forward) {
      events->push_back({t_event, before, after});
    } else {
      events->push_back({t_event, after, before});
    }
  }
  p = after;
  const double rest = (1.0 - theta) * dt;
  if (std::abs(rest) > 0.0) advance_rk4(p, rest, tangent, events, t_event);
}

// ---------------------------------------------------------------------------
// Orbit-level operations

Trajectory integrate_orbit(const FlowSystem& system, const Vec& p0, double T, double dt, std::uint64_t seed) {
  require(dt > 0.0, "integrate_orbit: dt must be positive");
  require(T >= 0.0, "integrate_orbit: T must be non-negative");
  require(system.is_valid(p0), "integrate_orbit: initial point outside the chart");
  Trajectory traj;
  traj.dt = dt;
  traj.seed = seed;
  traj.system_id = system.id();
  const auto n = static_cast<std::size_t>(std::floor(T / dt + 1e-9));
  traj.times.reserve(n + 2);
  traj.points.reserve(n + 2);
  Vec p = system.canonical(p0);
  traj.times.push_back(0.0);
  traj.points.push_back(p);
  for (std::size_t k = 1; k <= n; ++k) {
    const double t_prev = static_cast<double>(k - 1) * dt;
    system.advance(p, dt, nullptr, &traj.crossings, t_prev);
    traj.times.push_back(static_cast<double>(k) * dt);
    traj.points.push_back(p);
  }
  const double rest = T - static_cast<double>(n) * dt;
  if (rest > 1e-12 * dt) {
    system.advance(p, rest, nullptr, &traj.crossings, static_cast<double>(n) * dt);
    traj.times.push_back(T);
    traj.points.push_back(p);
  }
  return traj;
}

std::vector<Vec> tangent_propagate(const FlowSystem& system, const Trajectory& traj, const Vec& v0) {
  require(traj.system_id == system.id(), "tangent_propagate: trajectory was produced by a different system");
  require(v0.size() == system.dim(), "tangent_propagate: tangent vector dimension mismatch");
  std::vector<Vec> out;
  out.reserve(traj.size());
  if (traj.points.empty()) return out;
  Vec v = v0;
  out.push_back(v);
  const int n = system.dim();
  for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
    Vec p = traj.points[i];
    Mat J = Mat::Identity(n, n);
    system.advance(p, traj.times[i + 1] - traj.times[i], &J, nullptr, traj.times[i]);
    v = J * v;
    out.push_back(v);
  }
  return out;
}

Vec pullback_accumulate(const FlowSystem& system, const Vec& p, const std::function<Vec(const Vec&)>& Y,
                        double T, double dt) {
  require(T > 0.0, "pullback_accumulate: horizon must be positive");
  require(dt > 0.0, "pullback_accumulate: dt must be positive");
  const int n = system.dim();
  const auto steps = static_cast<std::size_t>(std::ceil(T / dt - 1e-9));
  Mat J = Mat::Identity(n, n);
  Vec y = p;
  Vec prev_term = Y(y);
  Vec acc = Vec::Zero(n);
  double covered = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double h = std::min(dt, T - covered);
    Vec y_next = y;
    system.advance(y_next, -h, nullptr, nullptr, -covered);
    if (!system.is_valid(y_next)) throw IntegrationDiverged(-covered - h, "backward orbit left the chart");
    // Step derivative from y_next forward to y.
    Vec probe = y_next;
    Mat D = Mat::Identity(n, n);
    system.advance(probe, h, &D, nullptr, -covered - h);
    J = J * system.chart_transition(probe, y) * D;
    const Vec term = J * Y(y_next);
    acc += 0.5 * h * (prev_term + term);
    prev_term = term;
    y = y_next;
    covered += h;
  }
  return acc;
}

void write_trajectory_csv(std::ostream& os, const FlowSystem& system, const Trajectory& traj) {
  os << "t";
  for (const auto& name : system.coordinate_names()) os << ',' << name;
  os << '\n';
  os.precision(17);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    os << traj.times[i];
    for (int j = 0; j < traj.points[i].size(); ++j) os << ',' << traj.points[i][j];
    os << '\n';
  }
}

}  // namespace hyperlr
