#include "hyperlr/hyperbolic_split.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <ostream>

namespace hyperlr {

namespace {

// QR with a positive diagonal in R.
void positive_qr(const Mat& A, Mat& Q, Mat& R) {
  const int n = static_cast<int>(A.rows());
  Eigen::HouseholderQR<Mat> qr(A);
  Q = qr.householderQ() * Mat::Identity(n, n);
  R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int k = 0; k < n; ++k) {
    if (R(k, k) < 0.0) {
      R.row(k) *= -1.0;
      Q.col(k) *= -1.0;
    }
  }
}

// Deterministic orientation: largest-magnitude component positive.
void orient(Vec& v) {
  Eigen::Index k = 0;
  v.cwiseAbs().maxCoeff(&k);
  if (v[k] < 0.0) v = -v;
}

double basis_min_angle(const Mat& V) {
  double m = std::numbers::pi;
  for (int i = 0; i < V.cols(); ++i)
    for (int j = i + 1; j < V.cols(); ++j) m = std::min(m, line_angle(V.col(i), V.col(j)));
  return m;
}

}  // namespace

Projectors SplitFrame::projectors(std::size_t i) const {
  const Mat& V = basis[i];
  const Mat W = V.inverse();
  Projectors P;
  P.center = V.col(n_unstable) * W.row(n_unstable);
  P.unstable = Mat::Zero(dim, dim);
  P.stable = Mat::Zero(dim, dim);
  for (int k = 0; k < n_unstable; ++k) P.unstable += V.col(k) * W.row(k);
  for (int k = n_unstable + 1; k < dim; ++k) P.stable += V.col(k) * W.row(k);
  return P;
}

SplitFrame compute_clv(const FlowSystem& system, const Trajectory& traj, const ClvOptions& options) {
  require(traj.system_id == system.id(), "compute_clv: trajectory was produced by a different system");
  require(options.warmup >= 0.0, "compute_clv: warmup must be non-negative");
  const std::size_t N = traj.size();
  require(N >= 3, "compute_clv: trajectory too short");
  const double t0 = traj.times.front();
  const double t1 = traj.times.back();
  require(t1 - t0 > 2.0 * options.warmup, "compute_clv: trajectory shorter than twice the warmup");
  const int n = system.dim();

  // Forward sweep: D_i Q_i = Q_{i+1} R_{i+1}.
  std::vector<Mat> Q(N);
  std::vector<Mat> R(N);
  {
    // A generic start: coordinate frames can be exactly invariant (constant roofs).
    std::mt19937_64 rng(0x5eedULL);
    std::normal_distribution<double> g;
    Mat G(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) G(r, c) = g(rng);
    Mat unused;
    positive_qr(G, Q[0], unused);
  }
  std::vector<double> log_sum(n, 0.0);
  double measured = 0.0;
  for (std::size_t i = 0; i + 1 < N; ++i) {
    Vec p = traj.points[i];
    Mat D = Mat::Identity(n, n);
    const double h = traj.times[i + 1] - traj.times[i];
    system.advance(p, h, &D, nullptr, traj.times[i]);
    D = system.chart_transition(p, traj.points[i + 1]) * D;
    positive_qr(D * Q[i], Q[i + 1], R[i + 1]);
    if (traj.times[i] >= t0 + options.warmup) {
      for (int k = 0; k < n; ++k) log_sum[k] += std::log(R[i + 1](k, k));
      measured += h;
    }
  }

  SplitFrame frame;
  frame.system_id = system.id();
  frame.dim = n;
  frame.dt = traj.dt;
  frame.warmup = options.warmup;
  frame.exponents.resize(n);
  for (int k = 0; k < n; ++k) frame.exponents[k] = measured > 0.0 ? log_sum[k] / measured : 0.0;

  int center = 0;
  for (int k = 1; k < n; ++k)
    if (std::abs(frame.exponents[k]) < std::abs(frame.exponents[center])) center = k;
  frame.n_unstable = center;
  frame.n_stable = n - 1 - center;

  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < N; ++i) {
    const double t = traj.times[i];
    if (t >= t0 + options.warmup && t <= t1 - options.warmup) keep.push_back(i);
  }
  require(!keep.empty(), "compute_clv: no samples left after warmup");

  // Backward sweep on upper-triangular coefficients: C_i = R_{i+1}^{-1} C_{i+1}.
  frame.times.reserve(keep.size());
  frame.points.reserve(keep.size());
  frame.basis.reserve(keep.size());
  Mat C = Mat::Identity(n, n);
  std::vector<Mat> coeff(keep.size());
  std::size_t slot = keep.size();
  for (std::size_t i = N - 1; slot > 0; --i) {
    if (i + 1 < N) {
      C = R[i + 1].triangularView<Eigen::Upper>().solve(C);
      for (int k = 0; k < n; ++k) C.col(k) /= C.col(k).norm();
    }
    if (keep[slot - 1] == i) coeff[--slot] = C;
  }

  double min_angle = std::numbers::pi;
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const std::size_t i = keep[k];
    const Vec& p = traj.points[i];
    Mat V = Q[i] * coeff[k];
    for (int c = 0; c < n; ++c) {
      Vec col = V.col(c);
      col /= col.norm();
      orient(col);
      V.col(c) = col;
    }
    const Vec f = system.field(p);
    const double fn = f.norm();
    if (fn == 0.0) throw ConditioningError(0.0, "compute_clv: flow vanishes on the orbit");
    V.col(center) = f / fn;
    min_angle = std::min(min_angle, basis_min_angle(V));
    frame.times.push_back(traj.times[i]);
    frame.points.push_back(p);
    frame.basis.push_back(V);
  }
  frame.min_angle = min_angle;
  if (min_angle < options.min_angle)
    throw ConditioningError(min_angle, "compute_clv: covariant directions nearly tangent");
  return frame;
}

// ---------------------------------------------------------------------------

namespace {

// Direction at p of tangents carried to p from f^T p (T of either sign). The
// orbit is traversed once, from p, and the stored step derivatives are inverted
// on the way back, so the result is attached to p itself in p's chart.
Vec carried_direction(const FlowSystem& system, const Vec& p, double T, const PointFrameOptions& options) {
  const int n = system.dim();
  const double step = system.exact() ? 1.0 : options.dt;
  const double dir = T < 0.0 ? -1.0 : 1.0;
  std::vector<Mat> steps;
  Vec q = p;
  double left = std::abs(T);
  while (left > 0.0) {
    const double h = std::min(step, left);
    Mat D = Mat::Identity(n, n);
    system.advance(q, dir * h, &D);
    steps.push_back(D);
    left -= h;
  }
  Mat M = Mat::Identity(n, n);
  for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
    M = it->partialPivLu().solve(M);
    M /= M.cwiseAbs().maxCoeff();
  }
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < M.cols(); ++c)
    if (M.col(c).norm() > M.col(best).norm()) best = c;
  Vec v = M.col(best);
  return v / v.norm();
}

}  // namespace

PointFrame frame_at(const FlowSystem& system, const Vec& p, const PointFrameOptions& options) {
  if (system.kind() != SystemKind::CatSuspension)
    throw UnsupportedError("frame_at: pointwise frames are implemented for the cat suspension only");
  require(options.horizon > 0.0, "frame_at: horizon must be positive");
  PointFrame out;
  out.point = p;
  const Vec f = system.field(p);
  out.center = f / f.norm();
  // Unstable: carried forward from the past; stable: carried back from the future.
  out.unstable = carried_direction(system, p, -options.horizon, options);
  out.stable = carried_direction(system, p, options.horizon, options);
  out.unstable = section_unstable(out.unstable);
  out.stable = section_stable(out.stable);
  out.unstable /= out.unstable.norm();
  out.stable /= out.stable.norm();
  return out;
}

Vec section_unstable(const Vec& unstable) {
  const auto e = CatMap::unstable_direction();
  const double c = unstable[0] * e[0] + unstable[1] * e[1];
  const double horiz = std::hypot(unstable[0], unstable[1]);
  if (horiz == 0.0) throw ConditioningError(0.0, "unstable vector has no horizontal part");
  return unstable / (c < 0.0 ? -horiz : horiz);
}

Vec section_stable(const Vec& stable) {
  const auto e = CatMap::stable_direction();
  const double c = stable[0] * e[0] + stable[1] * e[1];
  const double horiz = std::hypot(stable[0], stable[1]);
  if (horiz == 0.0) throw ConditioningError(0.0, "stable vector has no horizontal part");
  return stable / (c < 0.0 ? -horiz : horiz);
}

FieldSplit split_vector(const FlowSystem& system, const Vec& p, const Mat& basis, int n_unstable, const Vec& v) {
  const int n = static_cast<int>(basis.cols());
  Eigen::PartialPivLU<Mat> lu(basis);
  const Vec a = lu.solve(v);
  FieldSplit s;
  s.unstable = Vec::Zero(n);
  s.stable = Vec::Zero(n);
  for (int k = 0; k < n_unstable; ++k) s.unstable += a[k] * basis.col(k);
  for (int k = n_unstable + 1; k < n; ++k) s.stable += a[k] * basis.col(k);
  s.center = a[n_unstable] * basis.col(n_unstable);
  const Vec f = system.field(p);
  const double fn = f.norm();
  // Center column is f/|f| up to sign.
  const double sign = basis.col(n_unstable).dot(f) < 0.0 ? -1.0 : 1.0;
  s.eta = sign * a[n_unstable] / fn;
  return s;
}

std::vector<FieldSplit> split_field(const FlowSystem& system, const VectorField& X, const SplitFrame& frame) {
  require(frame.system_id == system.id(), "split_field: frame belongs to a different system");
  std::vector<FieldSplit> out;
  out.reserve(frame.size());
  if (frame.size() > 0 && frame.min_angle < 1e-12)
    throw ConditioningError(frame.min_angle, "split_field: singular frame");
  for (std::size_t i = 0; i < frame.size(); ++i) {
    out.push_back(split_vector(system, frame.points[i], frame.basis[i], frame.n_unstable, X.eval(frame.points[i])));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// Unstable coefficient in the section gauge at a (possibly extended) chart point.
double unstable_coefficient(const FlowSystem& system, const VectorField& X, const Vec& q,
                            const PointFrameOptions& options) {
  const PointFrame f = frame_at(system, q, options);
  Mat V(3, 3);
  V.col(0) = section_unstable(f.unstable);
  V.col(1) = f.center;
  V.col(2) = section_stable(f.stable);
  return Eigen::PartialPivLU<Mat>(V).solve(X.eval(q))[0];
}

}  // namespace

DivergenceSamples estimate_divergence_C(const FlowSystem& system, const VectorField& X, const SplitFrame& frame,
                                        const DivergenceOptions& options) {
  require(frame.system_id == system.id(), "estimate_divergence_C: frame belongs to a different system");
  if (system.kind() != SystemKind::CatSuspension)
    throw UnsupportedError("estimate_divergence_C: requires the cat suspension chart");
  if (frame.n_unstable != 1 || frame.n_stable != 1)
    throw UnsupportedError("estimate_divergence_C: exactly one unstable direction is supported");
  require(options.h > 0.0, "estimate_divergence_C: h must be positive");
  require(options.stride >= 1, "estimate_divergence_C: stride must be >= 1");
  require(frame.size() >= 3, "estimate_divergence_C: frame too short");

  DivergenceSamples out;
  out.h = options.h;
  const auto parts = split_field(system, X, frame);
  const bool x_zero = X.is_zero;

  double frame_noise = 0.0;
  int evaluated = 0;
  for (std::size_t i = 1; i + 1 < frame.size(); i += static_cast<std::size_t>(options.stride)) {
    const Vec& p = frame.points[i];
    const double dt_span = frame.times[i + 1] - frame.times[i - 1];
    const double dc = (parts[i + 1].eta - parts[i - 1].eta) / dt_span;
    double du = 0.0;
    if (!x_zero) {
      const Vec e = section_unstable(frame.unstable(i));
      auto derivative = [&](double h) {
        const double plus = unstable_coefficient(system, X, p + h * e, options.frame);
        const double minus = unstable_coefficient(system, X, p - h * e, options.frame);
        return (plus - minus) / (2.0 * h);
      };
      du = derivative(options.h);
      if (options.richardson_every > 0 && evaluated % options.richardson_every == 0) {
        const double half = derivative(0.5 * options.h);
        out.richardson_gap = std::max(out.richardson_gap, std::abs(du - half));
        const PointFrame here = frame_at(system, p, options.frame);
        frame_noise = std::max(frame_noise, line_angle(here.unstable, frame.unstable(i)) +
                                                line_angle(here.stable, frame.stable(i)));
      }
    }
    out.times.push_back(frame.times[i]);
    out.points.push_back(p);
    out.from_center.push_back(dc);
    out.from_unstable.push_back(du);
    out.values.push_back(dc + du);
    ++evaluated;
  }

  double xmax = 0.0;
  for (const auto& p : out.points) xmax = std::max(xmax, X.eval(p).norm());
  out.noise_floor = (frame_noise + std::numeric_limits<double>::epsilon()) * xmax / options.h;
  if (!x_zero && out.noise_floor > 1e-6 && out.noise_floor > out.richardson_gap)
    out.warnings.push_back("h=" + std::to_string(options.h) + " is below the frame noise floor (noise estimate " +
                           std::to_string(out.noise_floor) + ")");
  return out;
}

void write_frame_csv(std::ostream& os, const SplitFrame& frame) {
  os << "t";
  for (int k = 0; k < frame.dim; ++k) os << ",exponent" << k;
  os << ",angle_us,angle_uc,angle_sc\n";
  os.precision(17);
  for (std::size_t i = 0; i < frame.size(); ++i) {
    os << frame.times[i];
    for (double e : frame.exponents) os << ',' << e;
    const Vec u = frame.unstable(i);
    const Vec s = frame.stable(i);
    const Vec c = frame.center(i);
    os << ',' << line_angle(u, s) << ',' << line_angle(u, c) << ',' << line_angle(s, c) << '\n';
  }
}

void write_divergence_csv(std::ostream& os, const DivergenceSamples& samples) {
  os << "t,C,from_center,from_unstable\n";
  os.precision(17);
  for (std::size_t i = 0; i < samples.values.size(); ++i)
    os << samples.times[i] << ',' << samples.values[i] << ',' << samples.from_center[i] << ','
       << samples.from_unstable[i] << '\n';
}

}  // namespace hyperlr
