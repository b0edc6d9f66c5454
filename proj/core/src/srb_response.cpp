#include "hyperlr/srb_response.hpp"

#include "hyperlr/parallel.hpp"

#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

namespace hyperlr {

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 over a combined key
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + index + 0x632BE59BD9B4E019ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

// Advances p by T in steps of at most dt (one call for exact flows).
void evolve(const FlowSystem& system, Vec& p, double T, double dt) {
  if (T <= 0.0) return;
  if (system.exact()) {
    system.advance(p, T);
    return;
  }
  double left = T;
  while (left > 0.0) {
    const double h = std::min(dt, left);
    system.advance(p, h);
    left -= h;
  }
}

std::size_t step_count(double T, double dt) { return static_cast<std::size_t>(std::floor(T / dt + 1e-9)); }

std::vector<double> trapezoid_weights(std::size_t n_lags, double dt) {
  std::vector<double> w(n_lags, dt);
  if (n_lags == 1) {
    w[0] = 0.0;
    return w;
  }
  w.front() = 0.5 * dt;
  w.back() = 0.5 * dt;
  return w;
}

void check_perturbed_speed(const FlowSystem& system) {
  if (system.kind() != SystemKind::CatSuspension || system.parameter() == 0.0) return;
  if (system.perturbation_field().is_zero) return;
  // Vertical speed must stay positive for the suspension to remain a flow over the base.
  std::mt19937_64 rng(7);
  for (int i = 0; i < 256; ++i) {
    const Vec p = system.draw_initial(rng);
    if (system.field(p)[2] <= 0.0)
      throw ValidationError("perturbation step too large: vertical speed reaches zero");
  }
}

}  // namespace

Vec srb_sample(const FlowSystem& system, std::uint64_t seed, std::uint64_t index, double warmup, double dt) {
  std::mt19937_64 rng(stream_seed(seed, index));
  Vec p = system.draw_initial(rng);
  evolve(system, p, warmup, dt);
  return system.canonical(p);
}

// ---------------------------------------------------------------------------

BirkhoffEstimate birkhoff_average(const FlowSystem& system, const Observable& A, double T, int n_orbits,
                                  double warmup, double dt, std::uint64_t seed) {
  require(T > warmup && warmup > 0.0, "birkhoff_average: requires T > warmup > 0");
  require(n_orbits >= 1, "birkhoff_average: need at least one orbit");
  require(dt > 0.0, "birkhoff_average: dt must be positive");
  BirkhoffEstimate est;
  est.T = T;
  est.n_orbits = n_orbits;
  est.warmup = warmup;
  if (A.is_constant) {
    Vec p(system.dim());
    p.setZero();
    est.mean = A.value(p);
    est.batch_values.assign(kBatches, est.mean);
    return est;
  }
  const std::size_t n = step_count(T, dt);
  std::vector<std::vector<double>> series(static_cast<std::size_t>(n_orbits));
  std::vector<std::string> failure(static_cast<std::size_t>(n_orbits));
  parallel_for(static_cast<std::size_t>(n_orbits), [&](std::size_t o) {
    try {
      Vec p = srb_sample(system, seed, o, warmup, dt);
      auto& s = series[o];
      s.reserve(n);
      for (std::size_t k = 0; k < n; ++k) {
        s.push_back(A.value(p));
        system.advance(p, dt);
      }
    } catch (const IntegrationDiverged& e) {
      series[o].clear();
      failure[o] = "orbit " + std::to_string(o) + ": " + e.what();
    }
  });
  std::vector<double> all;
  all.reserve(n * static_cast<std::size_t>(n_orbits));
  for (std::size_t o = 0; o < series.size(); ++o) {
    if (!failure[o].empty()) {
      ++est.n_excluded;
      est.excluded.push_back(failure[o]);
      continue;
    }
    all.insert(all.end(), series[o].begin(), series[o].end());
  }
  if (all.empty()) throw IntegrationDiverged(T, "all orbits diverged");
  const MeanError me = batch_means(all);
  est.mean = me.mean;
  est.std_error = me.std_error;
  const std::size_t b = std::min<std::size_t>(kBatches, all.size());
  for (std::size_t k = 0; k < b; ++k) {
    const std::size_t lo = k * all.size() / b;
    const std::size_t hi = (k + 1) * all.size() / b;
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += all[i];
    est.batch_values.push_back(s / static_cast<double>(hi - lo));
  }
  return est;
}

std::string to_string(ResponseMethod method) {
  switch (method) {
    case ResponseMethod::FiniteDifference:
      return "finite_difference";
    case ResponseMethod::DirectDamped:
      return "direct_damped";
    case ResponseMethod::Susceptibility:
      return "susceptibility";
    case ResponseMethod::StableUnstableSplit:
      return "split";
    case ResponseMethod::Nonautonomous:
      return "nonautonomous";
  }
  return "unknown";
}

void ResponseReport::set(const std::string& key, double v) {
  for (auto& kv : diagnostics)
    if (kv.first == key) {
      kv.second = v;
      return;
    }
  diagnostics.emplace_back(key, v);
}

double ResponseReport::get(const std::string& key) const {
  for (const auto& kv : diagnostics)
    if (kv.first == key) return kv.second;
  throw ContractViolation("report has no diagnostic '" + key + "'");
}

bool ResponseReport::has(const std::string& key) const {
  for (const auto& kv : diagnostics)
    if (kv.first == key) return true;
  return false;
}

namespace {

void finish(ResponseReport& r) { r.inconclusive = r.std_error > std::abs(r.value); }

}  // namespace

ResponseReport finite_difference_response(const FlowSystem& system, const Observable& A,
                                          const FiniteDifferenceOptions& options) {
  require(options.a_step > 0.0, "finite_difference_response: a_step must be positive");
  ResponseReport r;
  r.method = ResponseMethod::FiniteDifference;
  r.set("a_step", options.a_step);
  r.set("T", options.T);
  r.set("n_orbits", options.n_orbits);
  r.set("warmup", options.warmup);
  r.set("dt", options.dt);
  if (A.is_constant || system.perturbation_field().is_zero) {
    r.set("rho_plus", 0.0);
    r.set("rho_minus", 0.0);
    return r;
  }
  const FlowSystem plus = system.with_parameter(options.a_step);
  const FlowSystem minus = system.with_parameter(-options.a_step);
  check_perturbed_speed(plus);
  check_perturbed_speed(minus);
  const auto ep = birkhoff_average(plus, A, options.T, options.n_orbits, options.warmup, options.dt, options.seed);
  const auto em = birkhoff_average(minus, A, options.T, options.n_orbits, options.warmup, options.dt, options.seed);
  if (ep.n_excluded + em.n_excluded > 0)
    r.warnings.push_back(std::to_string(ep.n_excluded + em.n_excluded) + " orbits diverged and were excluded");
  if (ep.batch_values.size() == em.batch_values.size() && ep.n_excluded == 0 && em.n_excluded == 0) {
    std::vector<double> slopes(ep.batch_values.size());
    for (std::size_t b = 0; b < slopes.size(); ++b)
      slopes[b] = (ep.batch_values[b] - em.batch_values[b]) / (2.0 * options.a_step);
    const MeanError me = mean_of_batches(slopes);
    r.value = me.mean;
    r.std_error = me.std_error;
  } else {
    r.value = (ep.mean - em.mean) / (2.0 * options.a_step);
    r.std_error = combined_sigma(ep.std_error, em.std_error) / (2.0 * options.a_step);
  }
  r.set("rho_plus", ep.mean);
  r.set("rho_plus_sigma", ep.std_error);
  r.set("rho_minus", em.mean);
  r.set("rho_minus_sigma", em.std_error);
  finish(r);
  return r;
}

// ---------------------------------------------------------------------------

std::vector<double> KernelCurve::mean() const {
  std::vector<double> m(lags.size(), 0.0);
  if (batch_kernel.empty()) return m;
  for (const auto& row : batch_kernel)
    for (std::size_t k = 0; k < m.size(); ++k) m[k] += row[k];
  for (double& v : m) v /= static_cast<double>(batch_kernel.size());
  return m;
}

std::vector<double> KernelCurve::batch_integrals(const std::vector<double>& factor) const {
  std::vector<double> out;
  out.reserve(batch_kernel.size());
  for (const auto& row : batch_kernel) {
    double s = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) s += weights[k] * factor[k] * row[k];
    out.push_back(s);
  }
  return out;
}

std::vector<std::complex<double>> KernelCurve::batch_integrals(const std::vector<std::complex<double>>& factor) const {
  std::vector<std::complex<double>> out;
  out.reserve(batch_kernel.size());
  for (const auto& row : batch_kernel) {
    std::complex<double> s = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) s += weights[k] * factor[k] * row[k];
    out.push_back(s);
  }
  return out;
}

KernelCurve response_kernel(const FlowSystem& system, const Observable& A, const VectorField& X,
                            const KernelOptions& options) {
  const std::size_t n_lags = step_count(options.T, options.dt) + 1;
  return response_kernel_lagged(system, A, {X}, std::vector<int>(n_lags, 0), options);
}

KernelCurve response_kernel_lagged(const FlowSystem& system, const Observable& A,
                                   const std::vector<VectorField>& fields, const std::vector<int>& field_index,
                                   const KernelOptions& options) {
  require(options.dt > 0.0 && options.T >= 0.0, "response kernel: need dt > 0 and T >= 0");
  require(options.n_samples >= 1 && options.batches >= 1, "response kernel: need samples and batches");
  const std::size_t n_lags = step_count(options.T, options.dt) + 1;
  require(field_index.size() == n_lags, "response kernel: one field index per lag required");
  for (int idx : field_index)
    require(idx >= 0 && static_cast<std::size_t>(idx) < fields.size(), "response kernel: field index out of range");

  KernelCurve curve;
  curve.lags.resize(n_lags);
  for (std::size_t k = 0; k < n_lags; ++k) curve.lags[k] = static_cast<double>(k) * options.dt;
  curve.weights = trapezoid_weights(n_lags, options.dt);
  curve.n_samples = options.n_samples;
  const auto B = static_cast<std::size_t>(std::min(options.batches, options.n_samples));
  curve.batch_kernel.assign(B, std::vector<double>(n_lags, 0.0));

  bool all_zero = A.is_constant;
  if (!all_zero) {
    all_zero = true;
    for (int idx : field_index) all_zero = all_zero && fields[static_cast<std::size_t>(idx)].is_zero;
  }
  if (all_zero) return curve;

  std::vector<int> clipped(B, 0);
  std::vector<int> excluded(B, 0);
  const int n = system.dim();
  const auto N = static_cast<std::size_t>(options.n_samples);
  parallel_for(B, [&](std::size_t b) {
    auto& acc = curve.batch_kernel[b];
    const std::size_t lo = b * N / B;
    const std::size_t hi = (b + 1) * N / B;
    std::vector<Vec> xs(fields.size());
    for (std::size_t j = lo; j < hi; ++j) {
      try {
        Vec p = srb_sample(system, options.seed, j, options.warmup, options.dt);
        for (std::size_t f = 0; f < fields.size(); ++f)
          xs[f] = fields[f].is_zero ? Vec(Vec::Zero(n)) : fields[f].eval(p);
        Mat J = Mat::Identity(n, n);
        for (std::size_t k = 0; k < n_lags; ++k) {
          if (k > 0) system.advance(p, options.dt, &J);
          if (J.cwiseAbs().maxCoeff() > options.clip) {
            ++clipped[b];
            break;
          }
          const Covec g = J.transpose() * A.gradient(p);
          acc[k] += g.dot(xs[static_cast<std::size_t>(field_index[k])]);
        }
      } catch (const IntegrationDiverged&) {
        ++excluded[b];
      }
    }
    const double count = static_cast<double>(hi - lo);
    for (double& v : acc) v /= count;
  });
  curve.clipped = std::accumulate(clipped.begin(), clipped.end(), 0);
  curve.excluded = std::accumulate(excluded.begin(), excluded.end(), 0);
  return curve;
}

std::vector<double> intercept_weights(const std::vector<double>& xs, int degree) {
  const std::size_t m = xs.size();
  require(m >= 1, "intercept_weights: need at least one abscissa");
  if (degree < 0 || static_cast<std::size_t>(degree) + 1 >= m) {
    // Interpolating polynomial through all points, evaluated at 0.
    std::vector<double> w(m, 1.0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        if (i != j) w[i] *= xs[j] / (xs[j] - xs[i]);
    return w;
  }
  if (degree == 0) return std::vector<double>(m, 1.0 / static_cast<double>(m));
  require(degree == 1, "intercept_weights: least-squares degree must be 0 or 1");
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(m);
  double sxx = 0.0;
  for (double x : xs) sxx += (x - mean) * (x - mean);
  std::vector<double> w(m);
  for (std::size_t i = 0; i < m; ++i) w[i] = 1.0 / static_cast<double>(m) - mean * (xs[i] - mean) / sxx;
  return w;
}

namespace {

std::vector<double> damping_factor(const KernelCurve& kernel, double eps) {
  std::vector<double> f(kernel.lags.size());
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = std::exp(-eps * kernel.lags[k]);
  return f;
}

// Per-batch values at several controls combined into an extrapolated estimate.
MeanError extrapolate(const std::vector<std::vector<double>>& per_control, const std::vector<double>& weights) {
  const std::size_t B = per_control.front().size();
  std::vector<double> combined(B, 0.0);
  for (std::size_t c = 0; c < per_control.size(); ++c)
    for (std::size_t b = 0; b < B; ++b) combined[b] += weights[c] * per_control[c][b];
  return mean_of_batches(combined);
}

void kernel_diagnostics(ResponseReport& r, const KernelCurve& kernel) {
  r.set("horizon", kernel.lags.empty() ? 0.0 : kernel.lags.back());
  r.set("dt", kernel.lags.size() > 1 ? kernel.lags[1] - kernel.lags[0] : 0.0);
  r.set("n_samples", kernel.n_samples);
  r.set("clipped", kernel.clipped);
  r.set("excluded", kernel.excluded);
  if (kernel.clipped > 0)
    r.warnings.push_back(std::to_string(kernel.clipped) + " samples clipped on tangent overflow");
  if (kernel.excluded > 0)
    r.warnings.push_back(std::to_string(kernel.excluded) + " samples excluded after divergence");
  const auto m = kernel.mean();
  if (!m.empty()) r.set("kernel_at_horizon", m.back());
}

}  // namespace

ResponseReport direct_damped_from_kernel(const KernelCurve& kernel, const DirectOptions& options) {
  require(!options.epsilons.empty(), "direct_damped_response: need at least one damping value");
  for (double e : options.epsilons) require(e >= 0.0, "direct_damped_response: damping must be >= 0");
  ResponseReport r;
  r.method = ResponseMethod::DirectDamped;
  std::vector<std::vector<double>> per_eps;
  for (std::size_t i = 0; i < options.epsilons.size(); ++i) {
    per_eps.push_back(kernel.batch_integrals(damping_factor(kernel, options.epsilons[i])));
    const MeanError me = mean_of_batches(per_eps.back());
    r.set("epsilon_" + std::to_string(i), options.epsilons[i]);
    r.set("value_" + std::to_string(i), me.mean);
    r.set("sigma_" + std::to_string(i), me.std_error);
  }
  const auto w = options.epsilons.size() == 1 ? std::vector<double>{1.0}
                                              : intercept_weights(options.epsilons, options.degree);
  const MeanError me = extrapolate(per_eps, w);
  r.value = me.mean;
  r.std_error = me.std_error;
  r.set("extrapolated", options.epsilons.size() > 1 ? 1.0 : 0.0);
  kernel_diagnostics(r, kernel);
  finish(r);
  return r;
}

ResponseReport direct_damped_response(const FlowSystem& system, const Observable& A, const VectorField& X,
                                      const DirectOptions& options) {
  return direct_damped_from_kernel(response_kernel(system, A, X, options.kernel), options);
}

SusceptibilityCurve susceptibility_curve(const KernelCurve& kernel, const std::vector<double>& re_omegas,
                                         double epsilon) {
  require(epsilon > 0.0, "susceptibility_curve: Im omega must be positive");
  SusceptibilityCurve c;
  c.epsilon = epsilon;
  c.T = kernel.lags.empty() ? 0.0 : kernel.lags.back();
  c.batch_values.assign(kernel.batch_kernel.size(), {});
  const std::complex<double> I(0.0, 1.0);
  for (double re : re_omegas) {
    const std::complex<double> omega(re, epsilon);
    std::vector<std::complex<double>> f(kernel.lags.size());
    for (std::size_t k = 0; k < f.size(); ++k) f[k] = std::exp(I * omega * kernel.lags[k]);
    const auto vals = kernel.batch_integrals(f);
    std::vector<double> re_part(vals.size());
    std::vector<double> im_part(vals.size());
    for (std::size_t b = 0; b < vals.size(); ++b) {
      re_part[b] = vals[b].real();
      im_part[b] = vals[b].imag();
      c.batch_values[b].push_back(vals[b]);
    }
    const MeanError mr = mean_of_batches(re_part);
    const MeanError mi = mean_of_batches(im_part);
    c.omegas.push_back(omega);
    c.values.emplace_back(mr.mean, mi.mean);
    c.std_errors.push_back(combined_sigma(mr.std_error, mi.std_error));
  }
  return c;
}

SusceptibilityCurve susceptibility_curve(const FlowSystem& system, const Observable& A, const VectorField& X,
                                         const std::vector<double>& re_omegas, double epsilon,
                                         const KernelOptions& options) {
  return susceptibility_curve(response_kernel(system, A, X, options), re_omegas, epsilon);
}

ResponseReport susceptibility_response(const KernelCurve& kernel, const std::vector<double>& epsilons, int degree) {
  require(!epsilons.empty(), "susceptibility_response: need at least one damping value");
  ResponseReport r;
  r.method = ResponseMethod::Susceptibility;
  std::vector<std::vector<double>> per_eps;
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    const auto curve = susceptibility_curve(kernel, {0.0}, epsilons[i]);
    std::vector<double> re(curve.batch_values.size());
    for (std::size_t b = 0; b < re.size(); ++b) re[b] = curve.batch_values[b][0].real();
    per_eps.push_back(re);
    r.set("epsilon_" + std::to_string(i), epsilons[i]);
    r.set("re_chi_" + std::to_string(i), curve.values[0].real());
    r.set("im_chi_" + std::to_string(i), curve.values[0].imag());
    r.set("sigma_" + std::to_string(i), curve.std_errors[0]);
  }
  const auto w = epsilons.size() == 1 ? std::vector<double>{1.0} : intercept_weights(epsilons, degree);
  const MeanError me = extrapolate(per_eps, w);
  r.value = me.mean;
  r.std_error = me.std_error;
  kernel_diagnostics(r, kernel);
  finish(r);
  return r;
}

void write_susceptibility_csv(std::ostream& os, const SusceptibilityCurve& curve) {
  os << "re_omega,im_omega,re_chi,im_chi,sigma\n";
  os.precision(17);
  for (std::size_t i = 0; i < curve.values.size(); ++i)
    os << curve.omegas[i].real() << ',' << curve.omegas[i].imag() << ',' << curve.values[i].real() << ','
       << curve.values[i].imag() << ',' << curve.std_errors[i] << '\n';
}

void write_kernel_csv(std::ostream& os, const KernelCurve& kernel) {
  os << "t,kernel\n";
  os.precision(17);
  const auto m = kernel.mean();
  for (std::size_t k = 0; k < m.size(); ++k) os << kernel.lags[k] << ',' << m[k] << '\n';
}

// ---------------------------------------------------------------------------

StableShadowResult stable_shadow_term(const FlowSystem& system, const Observable& A, const VectorField& X,
                                      const SplitFrame& frame, double T_back) {
  require(frame.system_id == system.id(), "stable_shadow_term: frame belongs to a different system");
  require(T_back > 0.0, "stable_shadow_term: T_back must be positive");
  const std::size_t N = frame.size();
  require(N >= 2 && frame.times.back() - frame.times.front() > 2.0 * T_back,
          "stable_shadow_term: frame shorter than 2*T_back");
  StableShadowResult out;
  if (X.is_zero || A.is_constant) return out;
  const int n = system.dim();
  const double t_start = frame.times.front();

  Mat Ps = frame.projectors(0).stable;
  Vec Y = Ps * X.eval(frame.points[0]);
  Vec V1 = Vec::Zero(n);
  Vec V2 = Vec::Zero(n);
  bool second_started = false;
  double sum1 = 0.0;
  double sum2 = 0.0;
  for (std::size_t i = 0; i + 1 < N; ++i) {
    Vec p = frame.points[i];
    Mat D = Mat::Identity(n, n);
    const double h = frame.times[i + 1] - frame.times[i];
    system.advance(p, h, &D);
    D = system.chart_transition(p, frame.points[i + 1]) * D;
    const Mat Ps_next = frame.projectors(i + 1).stable;
    const Vec Y_next = Ps_next * X.eval(frame.points[i + 1]);
    const Vec source = 0.5 * h * (D * Y + Y_next);
    auto step = [&](Vec& V) {
      Vec W = D * V + source;
      const Vec projected = Ps_next * W;
      const double norm = W.norm();
      if (norm > 1e-300) out.max_leak = std::max(out.max_leak, (W - projected).norm() / norm);
      V = projected;
    };
    step(V1);
    if (second_started) step(V2);
    if (!second_started && frame.times[i + 1] - t_start >= T_back) {
      second_started = true;
      V2.setZero();
    }
    if (frame.times[i + 1] - t_start >= 2.0 * T_back) {
      const Covec g = A.gradient(frame.points[i + 1]);
      sum1 += g.dot(V1);
      sum2 += g.dot(V2);
      ++out.samples;
    }
    Y = Y_next;
  }
  if (out.max_leak > 1e-6)
    throw ConditioningError(0.0, "stable_shadow_term: accumulation is not contracting (leak " +
                                     std::to_string(out.max_leak) + ")");
  if (out.samples > 0) {
    out.value = sum1 / static_cast<double>(out.samples);
    out.tail = std::abs(sum1 - sum2) / static_cast<double>(out.samples);
  }
  return out;
}

CorrelationPiece correlate_with_C(const Observable& A, const SplitFrame& frame, const DivergenceSamples& C, double T) {
  require(frame.size() >= 2, "correlate_with_C: frame too short");
  const double dt = frame.times[1] - frame.times[0];
  const auto L = step_count(T, dt);
  CorrelationPiece piece;
  piece.lags.resize(L + 1);
  for (std::size_t k = 0; k <= L; ++k) piece.lags[k] = static_cast<double>(k) * dt;
  piece.raw.assign(L + 1, 0.0);
  std::vector<double> a(frame.size());
  double sa = 0.0;
  for (std::size_t i = 0; i < frame.size(); ++i) {
    a[i] = A.value(frame.points[i]);
    sa += a[i];
  }
  piece.mean_A = sa / static_cast<double>(frame.size());
  piece.count_A = frame.size();
  double sc = 0.0;
  for (std::size_t j = 0; j < C.values.size(); ++j) {
    const auto idx = static_cast<std::size_t>(std::llround((C.times[j] - frame.times[0]) / dt));
    require(idx < frame.size() && std::abs(frame.times[idx] - C.times[j]) < 1e-9 * (1.0 + std::abs(C.times[j])),
            "correlate_with_C: C samples do not sit on the frame grid");
    if (idx + L >= frame.size()) continue;
    const double c = C.values[j];
    for (std::size_t k = 0; k <= L; ++k) piece.raw[k] += a[idx + k] * c;
    sc += c;
    ++piece.count_C;
  }
  require(piece.count_C > 0, "correlate_with_C: no C samples leave room for the lag window");
  for (double& v : piece.raw) v /= static_cast<double>(piece.count_C);
  piece.mean_C = sc / static_cast<double>(piece.count_C);
  return piece;
}

UnstableCenterResult unstable_center_term(const Observable& A, const std::vector<CorrelationPiece>& pieces,
                                          double epsilon) {
  require(!pieces.empty(), "unstable_center_term: no correlation pieces");
  require(epsilon >= 0.0, "unstable_center_term: damping must be >= 0");
  UnstableCenterResult out;
  const auto& lags = pieces.front().lags;
  out.lags = lags;
  out.covariance.assign(lags.size(), 0.0);
  std::vector<double> means_C;
  for (const auto& p : pieces) means_C.push_back(p.mean_C);
  const MeanError mc = mean_of_batches(means_C);
  out.mean_C = mc.mean;
  out.mean_C_error = mc.std_error;
  if (A.is_constant) return out;

  double sa = 0.0;
  double na = 0.0;
  double sc = 0.0;
  double nc = 0.0;
  for (const auto& p : pieces) {
    require(p.lags.size() == lags.size(), "unstable_center_term: pieces use different lag grids");
    sa += p.mean_A * static_cast<double>(p.count_A);
    na += static_cast<double>(p.count_A);
    sc += p.mean_C * static_cast<double>(p.count_C);
    nc += static_cast<double>(p.count_C);
  }
  const double mean_A = sa / na;
  const double mean_C = sc / nc;
  const double dt = lags.size() > 1 ? lags[1] - lags[0] : 0.0;
  const auto w = trapezoid_weights(lags.size(), dt);
  std::vector<double> values;
  for (const auto& p : pieces) {
    double s = 0.0;
    for (std::size_t k = 0; k < lags.size(); ++k) {
      const double cov = p.raw[k] - mean_A * mean_C;
      out.covariance[k] += cov / static_cast<double>(pieces.size());
      s += w[k] * std::exp(-epsilon * lags[k]) * cov;
    }
    values.push_back(-s);
  }
  const MeanError me = mean_of_batches(values);
  out.value = me.mean;
  out.std_error = me.std_error;
  const std::size_t tail_from = lags.size() - std::max<std::size_t>(1, lags.size() / 10);
  double tail = 0.0;
  for (std::size_t k = tail_from; k < lags.size(); ++k) tail += std::abs(out.covariance[k]);
  out.tail = tail / static_cast<double>(lags.size() - tail_from) * std::exp(-epsilon * lags.back());
  return out;
}

namespace {

struct OrbitSplit {
  StableShadowResult stable;
  CorrelationPiece piece;
  double richardson_gap = 0.0;
  double noise_floor = 0.0;
  std::vector<std::string> warnings;
};

SplitFrame orbit_frame(const FlowSystem& system, std::size_t o, double usable, const SplitOptions& options) {
  const Vec p0 = srb_sample(system, options.seed, o, options.sample_warmup, options.dt);
  const Trajectory traj = integrate_orbit(system, p0, usable + 2.0 * options.clv_warmup, options.dt, o);
  ClvOptions clv;
  clv.warmup = options.clv_warmup;
  return compute_clv(system, traj, clv);
}

}  // namespace

ResponseReport split_response(const FlowSystem& system, const Observable& A, const VectorField& X,
                                 const SplitOptions& options) {
  require(options.n_orbits >= 2, "split_response: need at least two orbits");
  ResponseReport r;
  r.method = ResponseMethod::StableUnstableSplit;
  r.set("n_orbits", options.n_orbits);
  r.set("T", options.T);
  r.set("dt", options.dt);
  r.set("T_back", options.T_back);
  r.set("T_corr", options.T_corr);
  r.set("epsilon", options.epsilon);
  r.set("h", options.divergence.h);
  if (X.is_zero || A.is_constant) {
    r.set("stable", 0.0);
    r.set("unstable_center", 0.0);
    return r;
  }
  const double usable = options.T + 2.0 * options.T_back + options.T_corr;
  const auto n_orbits = static_cast<std::size_t>(options.n_orbits);
  std::vector<OrbitSplit> parts(n_orbits);
  parallel_for(n_orbits, [&](std::size_t o) {
    const SplitFrame frame = orbit_frame(system, o, usable, options);
    auto& part = parts[o];
    part.stable = stable_shadow_term(system, A, X, frame, options.T_back);
    const DivergenceSamples C = estimate_divergence_C(system, X, frame, options.divergence);
    part.piece = correlate_with_C(A, frame, C, options.T_corr);
    part.richardson_gap = C.richardson_gap;
    part.noise_floor = C.noise_floor;
    part.warnings = C.warnings;
  });

  std::vector<CorrelationPiece> pieces;
  std::vector<double> stable_values;
  double tail = 0.0;
  double gap = 0.0;
  double noise = 0.0;
  double leak = 0.0;
  for (const auto& p : parts) {
    pieces.push_back(p.piece);
    stable_values.push_back(p.stable.value);
    tail = std::max(tail, p.stable.tail);
    gap = std::max(gap, p.richardson_gap);
    noise = std::max(noise, p.noise_floor);
    leak = std::max(leak, p.stable.max_leak);
    for (const auto& w : p.warnings)
      if (std::find(r.warnings.begin(), r.warnings.end(), w) == r.warnings.end()) r.warnings.push_back(w);
  }
  const UnstableCenterResult uc = unstable_center_term(A, pieces, options.epsilon);
  const MeanError st = mean_of_batches(stable_values);

  // Per-orbit totals carry the covariance between the two parts.
  std::vector<double> totals;
  {
    double sa = 0.0, na = 0.0, sc = 0.0, nc = 0.0;
    for (const auto& p : pieces) {
      sa += p.mean_A * static_cast<double>(p.count_A);
      na += static_cast<double>(p.count_A);
      sc += p.mean_C * static_cast<double>(p.count_C);
      nc += static_cast<double>(p.count_C);
    }
    const double mean_AC = (sa / na) * (sc / nc);
    const auto& lags = pieces.front().lags;
    const double dt = lags.size() > 1 ? lags[1] - lags[0] : 0.0;
    const auto w = trapezoid_weights(lags.size(), dt);
    for (std::size_t o = 0; o < parts.size(); ++o) {
      double s = 0.0;
      for (std::size_t k = 0; k < lags.size(); ++k)
        s += w[k] * std::exp(-options.epsilon * lags[k]) * (pieces[o].raw[k] - mean_AC);
      totals.push_back(stable_values[o] - s);
    }
  }
  const MeanError tot = mean_of_batches(totals);
  r.value = tot.mean;
  r.std_error = tot.std_error;
  r.set("stable", st.mean);
  r.set("stable_sigma", st.std_error);
  r.set("unstable_center", uc.value);
  r.set("unstable_center_sigma", uc.std_error);
  r.set("mean_C", uc.mean_C);
  r.set("mean_C_sigma", uc.mean_C_error);
  r.set("stable_tail", tail);
  r.set("stable_leak", leak);
  r.set("correlation_tail", uc.tail);
  r.set("richardson_gap", gap);
  r.set("noise_floor", noise);
  if (std::abs(uc.mean_C) > 3.0 * uc.mean_C_error + 1e-12)
    r.warnings.push_back("mean of C is not within 3 sigma of 0; correlation term untrusted");
  if (tail > 1e-8) r.warnings.push_back("stable shadow tail " + std::to_string(tail) + " above 1e-8");
  if (uc.tail > options.tail_tolerance)
    r.warnings.push_back("correlation tail " + std::to_string(uc.tail) + " above tolerance at T_corr");
  finish(r);
  return r;
}

MeanCResult divergence_mean(const FlowSystem& system, const VectorField& X, double T, int n_orbits,
                            const SplitOptions& options) {
  require(n_orbits >= 2 && T > 0.0, "divergence_mean: need T > 0 and at least two orbits");
  MeanCResult out;
  out.T = T;
  out.n_orbits = n_orbits;
  const double per_orbit = T / n_orbits;
  std::vector<double> means(static_cast<std::size_t>(n_orbits), 0.0);
  parallel_for(means.size(), [&](std::size_t o) {
    const SplitFrame frame = orbit_frame(system, o, per_orbit, options);
    const DivergenceSamples C = estimate_divergence_C(system, X, frame, options.divergence);
    double s = 0.0;
    for (double v : C.values) s += v;
    means[o] = C.values.empty() ? 0.0 : s / static_cast<double>(C.values.size());
  });
  out.estimate = mean_of_batches(means);
  return out;
}

// ---------------------------------------------------------------------------

ResponseReport nonautonomous_response(const FlowSystem& system, const Observable& A, const FieldSchedule& schedule,
                                      double t_eval, const NonautonomousOptions& options) {
  require(static_cast<bool>(schedule.field), "nonautonomous_response: schedule has no field");
  require(t_eval >= schedule.t0, "nonautonomous_response: t_eval must not precede t0");
  require(options.epsilon >= 0.0, "nonautonomous_response: damping must be >= 0");

  const VectorField before = schedule.field(schedule.t0);
  {
    std::mt19937_64 rng(stream_seed(options.kernel.seed, 0xC0FFEE));
    const double offsets[] = {0.5, 1.0, 10.0, 100.0, 1000.0};
    for (double off : offsets) {
      const VectorField earlier = schedule.field(schedule.t0 - off);
      for (int i = 0; i < options.probes; ++i) {
        const Vec p = system.draw_initial(rng);
        const Vec a = earlier.eval(p);
        const Vec b = before.eval(p);
        if ((a - b).norm() > 1e-12 * (1.0 + b.norm()))
          throw ContractViolation("nonautonomous_response: schedule is not constant before t0");
      }
    }
  }

  const std::size_t n_lags = step_count(options.kernel.T, options.kernel.dt) + 1;
  std::vector<VectorField> fields{before};
  std::vector<int> index(n_lags, 0);
  for (std::size_t k = 0; k < n_lags; ++k) {
    const double tau = t_eval - static_cast<double>(k) * options.kernel.dt;
    if (tau <= schedule.t0) continue;
    fields.push_back(schedule.field(tau));
    index[k] = static_cast<int>(fields.size() - 1);
  }
  const KernelCurve kernel = response_kernel_lagged(system, A, fields, index, options.kernel);

  ResponseReport r;
  r.method = ResponseMethod::Nonautonomous;
  const auto vals = kernel.batch_integrals(damping_factor(kernel, options.epsilon));
  const MeanError me = mean_of_batches(vals);
  r.value = me.mean;
  r.std_error = me.std_error;
  r.set("t0", schedule.t0);
  r.set("t_eval", t_eval);
  r.set("epsilon", options.epsilon);
  r.set("distinct_fields", static_cast<double>(fields.size()));
  kernel_diagnostics(r, kernel);
  finish(r);
  return r;
}

}  // namespace hyperlr
