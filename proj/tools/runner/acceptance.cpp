#include "acceptance.hpp"

#include "report.hpp"

#include "hyperlr/hyperbolic_split.hpp"
#include "hyperlr/oracle.hpp"
#include "hyperlr/srb_response.hpp"
#include "hyperlr/symbolic_td.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace hyperlr::runner {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kFloor = 1e-10;

bool consistent_with_zero(double v, double s) { return std::abs(v) <= 3.0 * s + kFloor; }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

std::string pm(double v, double s) { return fmt(v) + "±" + fmt(s); }

const CatRoof kBenchRoof{1.0, 0.3, 0.0};

VectorField bench_field() {
  return trig_window_field(kBenchRoof, {{1, 1.0, 0, 1, -kTwoPi / 4.0}, {2, 0.5, 1, 0, 0.0}}, HeightWindow{4});
}

Observable bench_observable() { return trig_window_observable(kBenchRoof, 1.0, 0, 1, 0.0, HeightWindow{4}); }

Json report_brief(const ResponseReport& r) { return Json{{"value", r.value}, {"std_error", r.std_error}}; }

// ---------------------------------------------------------------------------

CriterionOutcome null_response(std::uint64_t seed) {
  CriterionOutcome c;
  const auto start = Clock::now();
  const FlowSystem base = FlowSystem::cat_suspension(kBenchRoof);
  const VectorField X = scaled_base_field(base, 1.0);
  const FlowSystem sys = base.with_perturbation(X);
  const Observable A = bench_observable();

  FiniteDifferenceOptions fo;
  fo.T = 2e4;
  fo.n_orbits = 4;
  fo.seed = seed;
  const auto fd = finite_difference_response(sys, A, fo);

  KernelOptions ko;
  ko.T = 4.0;
  ko.n_samples = 100000;
  ko.seed = seed;
  const KernelCurve kernel = response_kernel(sys, A, X, ko);
  DirectOptions dopt;
  dopt.kernel = ko;
  dopt.epsilons = {0.2, 0.1};
  const auto direct = direct_damped_from_kernel(kernel, dopt);
  const auto sus = susceptibility_response(kernel, {0.4, 0.2, 0.1}, 1);

  SplitOptions bo;
  bo.n_orbits = 4;
  bo.T = 100.0;
  bo.seed = seed;
  const auto split = split_response(sys, A, X, bo);

  c.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  const bool ok_fd = consistent_with_zero(fd.value, fd.std_error);
  const bool ok_direct = consistent_with_zero(direct.value, direct.std_error);
  const bool ok_sus = consistent_with_zero(sus.value, sus.std_error);
  const bool ok_split = consistent_with_zero(split.value, split.std_error);
  const bool ok_time = c.seconds < 300.0;
  c.passed = ok_fd && ok_direct && ok_sus && ok_split && ok_time;
  c.summary = "fd " + pm(fd.value, fd.std_error) + ", direct " + pm(direct.value, direct.std_error) +
              ", susceptibility " + pm(sus.value, sus.std_error) + ", split " + pm(split.value, split.std_error) +
              ", " + fmt(c.seconds) + " s";
  c.details = {{"finite_difference", report_brief(fd)}, {"direct_damped", report_brief(direct)},
               {"susceptibility", report_brief(sus)},   {"split", report_brief(split)},
               {"tolerance", "3 sigma + 1e-10"},        {"runtime_limit_s", 300}};
  return c;
}

CriterionOutcome split_vs_fd(std::uint64_t seed) {
  CriterionOutcome c;
  const auto start = Clock::now();
  const VectorField X = bench_field();
  const FlowSystem sys = FlowSystem::cat_suspension(kBenchRoof).with_perturbation(X);
  const Observable A = bench_observable();

  FiniteDifferenceOptions fo;
  fo.a_step = 0.02;
  fo.T = 2e4;
  fo.n_orbits = 32;
  fo.seed = seed;
  // Oracle: paired batch averages at +a and -a.
  const auto plus = birkhoff_average(sys.with_parameter(fo.a_step), A, fo.T, fo.n_orbits, fo.warmup, fo.dt, fo.seed);
  const auto minus = birkhoff_average(sys.with_parameter(-fo.a_step), A, fo.T, fo.n_orbits, fo.warmup, fo.dt, fo.seed);
  const auto truth = oracle::fd_slope(plus.batch_values, minus.batch_values, fo.a_step);
  const double t_val = truth.values.front();
  const double t_sig = *truth.sigma;
  const auto fd = finite_difference_response(sys, A, fo);

  SplitOptions bo;
  bo.seed = seed;
  const auto split = split_response(sys, A, X, bo);

  KernelOptions ko;
  ko.T = 4.0;
  ko.n_samples = 400000;
  ko.seed = seed;
  const KernelCurve kernel = response_kernel(sys, A, X, ko);
  DirectOptions dopt;
  dopt.kernel = ko;
  dopt.epsilons = {0.2, 0.1};
  const auto direct = direct_damped_from_kernel(kernel, dopt);
  const auto sus = susceptibility_response(kernel, {0.4, 0.2, 0.1}, 1);

  c.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  const bool fd_matches_oracle = std::abs(fd.value - t_val) <= 1e-12 * (1.0 + std::abs(t_val));
  const bool split_vs_fd = agrees(split.value, split.std_error, t_val, t_sig);
  const bool split_vs_direct = agrees(split.value, split.std_error, direct.value, direct.std_error);
  const bool sus_vs_fd = agrees(sus.value, sus.std_error, t_val, t_sig);
  const bool ok_time = c.seconds < 1800.0;
  c.passed = fd_matches_oracle && split_vs_fd && split_vs_direct && sus_vs_fd && ok_time;
  c.summary = "oracle fd " + pm(t_val, t_sig) + ", split " + pm(split.value, split.std_error) + ", direct " +
              pm(direct.value, direct.std_error) + ", susceptibility " + pm(sus.value, sus.std_error) + ", " +
              fmt(c.seconds) + " s";
  c.details = {{"oracle_fd", to_json(truth)},
               {"finite_difference", report_brief(fd)},
               {"split", to_json(split)},
               {"direct_damped", to_json(direct)},
               {"susceptibility", to_json(sus)},
               {"checks",
                {{"fd_estimator_matches_oracle", fd_matches_oracle},
                 {"split_vs_fd", split_vs_fd},
                 {"split_vs_direct", split_vs_direct},
                 {"susceptibility_vs_fd", sus_vs_fd}}},
               {"runtime_limit_s", 1800}};
  return c;
}

CriterionOutcome mean_c(std::uint64_t seed) {
  CriterionOutcome c;
  const auto start = Clock::now();
  const VectorField X = bench_field();
  const FlowSystem sys = FlowSystem::cat_suspension(kBenchRoof).with_perturbation(X);
  SplitOptions o;
  o.seed = seed;
  o.divergence.stride = 5;
  o.divergence.richardson_every = 0;
  const auto short_run = divergence_mean(sys, X, 5e3, 20, o);
  const auto long_run = divergence_mean(sys, X, 2e4, 20, o);
  c.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  const auto& a = short_run.estimate;
  const auto& b = long_run.estimate;
  const double ratio = a.std_error / b.std_error;
  // sigma ~ T^{-1/2}: quadrupling T halves sigma.
  const bool ok_ratio = ratio >= 1.33 && ratio <= 3.0;
  const bool ok_zero = consistent_with_zero(a.mean, a.std_error) && consistent_with_zero(b.mean, b.std_error);
  c.passed = ok_ratio && ok_zero;
  c.summary = "T=5e3: " + pm(a.mean, a.std_error) + ", T=2e4: " + pm(b.mean, b.std_error) + ", sigma ratio " +
              fmt(ratio) + " (expected 2)";
  c.details = {{"T5000", {{"mean", a.mean}, {"std_error", a.std_error}}},
               {"T20000", {{"mean", b.mean}, {"std_error", b.std_error}}},
               {"sigma_ratio", ratio},
               {"ratio_window", {1.33, 3.0}}};
  return c;
}

CriterionOutcome clv(std::uint64_t) {
  CriterionOutcome c;
  const auto start = Clock::now();
  const double log_lambda = std::log(CatMap::expansion());
  const auto eu = CatMap::unstable_direction();
  const auto es = CatMap::stable_direction();
  Vec u(3), s(3);
  u << eu[0], eu[1], 0.0;
  s << es[0], es[1], 0.0;
  Vec p0(3);
  p0 << 0.123, 0.456, 0.3;
  ClvOptions opt;
  opt.warmup = 30.0;

  const FlowSystem flat = FlowSystem::cat_suspension(CatRoof{1.0, 0.0, 0.0});
  const SplitFrame f1 = compute_clv(flat, integrate_orbit(flat, p0, 200.0, 0.02), opt);
  double au = 0.0, as = 0.0;
  for (std::size_t i = 0; i < f1.size(); ++i) {
    au = std::max(au, line_angle(f1.unstable(i), u));
    as = std::max(as, line_angle(f1.stable(i), s));
  }
  const double e_err = std::max({std::abs(f1.exponents[0] - log_lambda), std::abs(f1.exponents[1]),
                                 std::abs(f1.exponents[2] + log_lambda)});

  const FlowSystem bumpy = FlowSystem::cat_suspension(kBenchRoof);
  const SplitFrame f2 = compute_clv(bumpy, integrate_orbit(bumpy, p0, 200.0, 0.02), opt);
  double hu = 0.0, hs = 0.0;
  for (std::size_t i = 0; i < f2.size(); ++i) {
    Vec a = f2.unstable(i), b = f2.stable(i);
    a[2] = 0.0;
    b[2] = 0.0;
    hu = std::max(hu, line_angle(a, u));
    hs = std::max(hs, line_angle(b, s));
  }
  c.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  c.passed = au < 1e-6 && as < 1e-6 && e_err < 1e-3 && hu < 1e-6 && hs < 1e-6;
  c.summary = "unit roof: angles u " + fmt(au) + ", s " + fmt(as) + ", exponent error " + fmt(e_err) +
              "; roof 1+0.3cos: horizontal angles u " + fmt(hu) + ", s " + fmt(hs);
  c.details = {{"unit_roof",
                {{"max_angle_unstable", au}, {"max_angle_stable", as}, {"exponents", f1.exponents},
                 {"max_exponent_error", e_err}}},
               {"variable_roof", {{"max_horizontal_angle_unstable", hu}, {"max_horizontal_angle_stable", hs}}}};
  return c;
}

struct MarkovCase {
  std::string name;
  std::vector<std::vector<int>> tau;
  std::vector<double> phi;
  std::vector<double> psi;
};

std::vector<MarkovCase> markov_cases() {
  std::vector<MarkovCase> cases;
  cases.push_back({"full 2-shift, phi in {0, log 2}", {{1, 1}, {1, 1}}, {0.0, std::log(2.0)}, {1.0, 1.0}});
  cases.push_back({"golden mean, variable roof", {{1, 1}, {1, 0}}, {0.3, -0.2}, {1.0, 1.5}});
  cases.push_back({"3 symbols", {{1, 1, 0}, {1, 0, 1}, {1, 1, 1}}, {0.1, -0.4, 0.25}, {0.8, 1.3, 1.1}});
  {
    const SftSystem cat = cat_map_sft();
    cases.push_back({"cat-map edge shift, SRB potential", cat.transitions(),
                     std::vector<double>(5, -std::log(CatMap::expansion())), std::vector<double>(5, 1.0)});
    cases.push_back({"cat-map edge shift, variable roof", cat.transitions(), {0.1, -0.2, 0.05, 0.3, -0.1},
                     {0.9, 1.2, 1.0, 0.7, 1.4}});
  }
  return cases;
}

CriterionOutcome pressure_bowen(std::uint64_t) {
  CriterionOutcome c;
  const auto start = Clock::now();
  const SftSystem full({{1, 1}, {1, 1}}, 1);
  const double c1 = bowen_root(full, {0.0, 0.0}, {1.0, 1.0});
  const double p0 = pressure(full, {0.0, 0.0});
  const double err1 = std::max(std::abs(c1 - std::log(2.0)), std::abs(p0 - std::log(2.0)));
  const double c2 = bowen_root(full, {0.0, 0.0}, {1.0, 2.0});
  const double err2 = std::abs(c2 - std::log(std::numbers::phi));

  double gibbs_err = 0.0;
  Json cases = Json::array();
  for (const auto& mc : markov_cases()) {
    SftSystem sft(mc.tau, 1);
    const double cc = bowen_root(sft, mc.phi, mc.psi);
    const EquilibriumState st = equilibrium_state(sft, mc.phi, mc.psi, cc);
    const oracle::GibbsChain ref = oracle::markov_gibbs(mc.tau, mc.phi, mc.psi);
    double e = std::abs(cc - ref.c);
    for (std::size_t i = 0; i < ref.distribution.size(); ++i) {
      e = std::max(e, std::abs(st.weights[i] - ref.distribution[i]));
      for (std::size_t j = 0; j < ref.distribution.size(); ++j)
        e = std::max(e, std::abs(st.kernel(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) -
                                 ref.kernel[i][j]));
    }
    gibbs_err = std::max(gibbs_err, e);
    cases.push_back({{"case", mc.name}, {"c", cc}, {"oracle_c", ref.c}, {"max_error", e},
                     {"invariance_residual", st.invariance_residual}});
  }
  c.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  c.passed = err1 < 1e-12 && err2 < 1e-10 && gibbs_err < 1e-10;
  c.summary = "c=log 2 error " + fmt(err1) + ", two-valued roof error " + fmt(err2) + ", Gibbs vs Markov oracle " +
              fmt(gibbs_err);
  c.details = {{"full_shift_error", err1}, {"two_valued_roof_error", err2}, {"gibbs_cases", cases}};
  return c;
}

CriterionOutcome resonances(std::uint64_t) {
  CriterionOutcome c;
  const auto start = Clock::now();
  // Constant roof: roots at 2 pi k.
  const SftSystem full({{1, 1}, {1, 1}}, 1);
  const std::vector<double> zero{0.0, 0.0};
  const std::vector<double> one{1.0, 1.0};
  const double c_full = bowen_root(full, zero, one);
  ScanStrip strip;
  const SpectralScan scan = resonance_scan(full, zero, one, c_full, strip);
  const auto expected = oracle::constant_roof_resonances(strip.re_max, strip.im_min, strip.im_max);
  double lattice_err = scan.roots.size() == expected.size() ? 0.0 : 1.0;
  for (double w : expected) {
    double best = 1e300;
    for (const auto& r : scan.roots) best = std::min(best, std::abs(r.omega - std::complex<double>(w, 0.0)));
    lattice_err = std::max(lattice_err, best);
  }

  // lambda(0) = 1 and lambda'(0) = -i nu0(psi) on several Bowen-normalized systems.
  double l0_err = 0.0, d_err = 0.0;
  Json normalization = Json::array();
  for (const auto& mc : markov_cases()) {
    SftSystem sft(mc.tau, 1);
    const double cc = bowen_root(sft, mc.phi, mc.psi);
    const EquilibriumState st = equilibrium_state(sft, mc.phi, mc.psi, cc);
    const EigenBranch b0 = leading_eigenvalue(sft, mc.phi, mc.psi, cc, 0.0);
    const double delta = 1e-5;
    const auto lp = leading_eigenvalue(sft, mc.phi, mc.psi, cc, delta).lambda;
    const auto lm = leading_eigenvalue(sft, mc.phi, mc.psi, cc, -delta).lambda;
    const std::complex<double> central = (lp - lm) / (2.0 * delta);
    const std::complex<double> analytic = eigenvalue_derivative(sft, mc.phi, mc.psi, cc, 0.0, b0);
    const std::complex<double> target(0.0, -st.mean_roof);
    const double e0 = std::abs(b0.lambda - 1.0);
    const double ed = std::max(std::abs(central - target), std::abs(analytic - target));
    l0_err = std::max(l0_err, e0);
    d_err = std::max(d_err, ed);
    normalization.push_back({{"case", mc.name}, {"lambda0_error", e0}, {"derivative_error", ed},
                             {"mean_roof", st.mean_roof}});
  }

  // Non-lattice roof {1, golden ratio}: no real root in (0, 2 pi].
  const std::vector<double> golden{1.0, std::numbers::phi};
  const double c_gold = bowen_root(full, zero, golden);
  ScanStrip line;
  line.re_max = kTwoPi + 0.01;
  line.im_min = 0.0;
  line.im_max = 0.0;
  line.re_step = 1e-3;
  const SpectralScan gscan = resonance_scan(full, zero, golden, c_gold, line);
  int real_roots = 0;
  bool zero_found = false;
  for (const auto& r : gscan.roots) {
    if (std::abs(r.omega.imag()) < 1e-6 && r.omega.real() > 1e-6 && r.omega.real() <= kTwoPi) ++real_roots;
    if (std::abs(r.omega) < 1e-8) zero_found = true;
  }
  c.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  c.passed = lattice_err < 1e-8 && l0_err < 1e-10 && d_err < 1e-6 && real_roots == 0 && zero_found;
  c.summary = "lattice roots error " + fmt(lattice_err) + " (" + std::to_string(scan.roots.size()) +
              " roots), |lambda(0)-1| " + fmt(l0_err) + ", |lambda'(0)+i nu(psi)| " + fmt(d_err) +
              ", non-lattice real roots in (0,2pi]: " + std::to_string(real_roots);
  Json roots = Json::array();
  for (const auto& r : scan.roots) roots.push_back({r.omega.real(), r.omega.imag()});
  c.details = {{"constant_roof_roots", roots},   {"oracle_roots", expected},
               {"lattice_error", lattice_err},   {"normalization", normalization},
               {"non_lattice_real_roots", real_roots}, {"non_lattice_min_overlap", gscan.min_overlap}};
  return c;
}

CriterionOutcome suspension_machinery(std::uint64_t) {
  CriterionOutcome c;
  const auto start = Clock::now();
  bool unit_exact = true;
  bool half_exact = true;
  double closed_err = 0.0;
  for (const auto& mc : markov_cases()) {
    SftSystem sft(mc.tau, 1);
    sft.set_roof(mc.psi);
    sft.set_potential(mc.phi);
    const double cc = bowen_root(sft, mc.phi, mc.psi);
    const EquilibriumState st = equilibrium_state(sft, mc.phi, mc.psi, cc);
    unit_exact = unit_exact && suspension_average(sft, st, [](int, double) { return 1.0; }) == 1.0;
    const auto& roof = sft.roof();
    const double half =
        suspension_average(sft, st, [&](int w, double t) { return t < 0.5 * roof[static_cast<std::size_t>(w)] ? 1.0 : 0.0; });
    half_exact = half_exact && half == 0.5;

    // A(w, t) = a_w + b_w t + q_w t^2 has A~ = a psi + b psi^2/2 + q psi^3/3.
    const std::size_t n = sft.word_count();
    std::vector<double> a(n), b(n), q(n), closed(n);
    for (std::size_t w = 0; w < n; ++w) {
      a[w] = 0.3 + 0.1 * static_cast<double>(w);
      b[w] = -0.7 + 0.05 * static_cast<double>(w * w);
      q[w] = 0.2 * std::cos(static_cast<double>(w));
      const double p = roof[w];
      closed[w] = a[w] * p + b[w] * p * p / 2.0 + q[w] * p * p * p / 3.0;
    }
    const SuspensionFunction A = [&](int w, double t) {
      const auto k = static_cast<std::size_t>(w);
      return a[k] + b[k] * t + q[k] * t * t;
    };
    const auto quad = roof_integrals(sft, A);
    for (std::size_t w = 0; w < n; ++w) closed_err = std::max(closed_err, std::abs(quad[w] - closed[w]));
    // Ratio of roof integrals against the oracle chain.
    const auto ref = oracle::markov_gibbs(mc.tau, mc.phi, mc.psi);
    std::vector<double> per_unit(n);
    for (std::size_t w = 0; w < n; ++w) per_unit[w] = closed[w] / roof[w];
    const double expect = oracle::symbol_suspension_average(ref.distribution, roof, per_unit);
    closed_err = std::max(closed_err, std::abs(suspension_average(sft, st, A) - expect));
  }
  c.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  c.passed = unit_exact && half_exact && closed_err < 1e-10;
  c.summary = std::string("average of 1 ") + (unit_exact ? "exactly 1" : "NOT exactly 1") + ", half-height indicator " +
              (half_exact ? "exactly 1/2" : "NOT exactly 1/2") + ", closed-form error " + fmt(closed_err);
  c.details = {{"unit_exact", unit_exact}, {"half_exact", half_exact}, {"closed_form_error", closed_err}};
  return c;
}

CriterionOutcome nonautonomous(std::uint64_t seed) {
  CriterionOutcome c;
  const auto start = Clock::now();
  const VectorField X = bench_field();
  const FlowSystem sys = FlowSystem::cat_suspension(kBenchRoof).with_perturbation(X);
  const Observable A = bench_observable();
  KernelOptions ko;
  ko.T = 5.0;
  ko.n_samples = 20000;
  ko.seed = seed;
  const KernelCurve kernel = response_kernel(sys, A, X, ko);
  FieldSchedule sched;
  sched.t0 = 0.0;
  sched.field = [X](double) { return X; };
  double worst = 0.0;
  Json rows = Json::array();
  for (double eps : {0.0, 0.1}) {
    DirectOptions d;
    d.kernel = ko;
    d.epsilons = {eps};
    const auto direct = direct_damped_from_kernel(kernel, d);
    NonautonomousOptions no;
    no.kernel = ko;
    no.epsilon = eps;
    const auto na = nonautonomous_response(sys, A, sched, 3.0, no);
    const double gap = std::abs(na.value - direct.value);
    worst = std::max(worst, gap);
    rows.push_back({{"epsilon", eps}, {"nonautonomous", na.value}, {"direct", direct.value}, {"gap", gap}});
  }
  c.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  c.passed = worst <= 1e-12;
  c.summary = "constant schedule vs damped integral, largest gap " + fmt(worst);
  c.details = {{"cases", rows}, {"horizon", ko.T}};
  return c;
}

// Largest gap between the chart points, wrapping torus coordinates.
Vec chart_delta(const FlowSystem& sys, const Vec& a, const Vec& b) {
  Vec d = a - b;
  if (sys.kind() == SystemKind::CatSuspension)
    for (int i = 0; i < 2; ++i) d[i] -= std::round(d[i]);
  return d;
}

CriterionOutcome hygiene(std::uint64_t seed) {
  CriterionOutcome c;
  const auto start = Clock::now();
  std::mt19937_64 rng(seed + 99);
  std::uniform_real_distribution<double> U(-1.0, 1.0);

  struct Case {
    std::string name;
    FlowSystem sys;
    double T;
    double dt;
  };
  const FlowSystem cat = FlowSystem::cat_suspension(kBenchRoof);
  std::vector<Case> cases{{"cat suspension (exact flow)", cat, 2.5, 0.02},
                          {"perturbed cat suspension (RK4)", cat.with_perturbation(bench_field()).with_parameter(0.3), 2.5, 0.02},
                          {"Lorenz-63 (RK4)", FlowSystem::lorenz63(), 1.0, 0.005}};
  double worst_slope_gap = 0.0;
  Json tangent = Json::array();
  for (const auto& cs : cases) {
    int accepted = 0;
    for (int attempt = 0; accepted < 3 && attempt < 50; ++attempt) {
      Vec p(3);
      if (cs.sys.kind() == SystemKind::Lorenz63) {
        p << 1.0 + U(rng), 1.0 + U(rng), 20.0 + U(rng);
        for (int k = 0; k < 1000; ++k) cs.sys.advance(p, 0.005);
      } else {
        p = cs.sys.draw_initial(rng);
      }
      const Trajectory tr = integrate_orbit(cs.sys, p, cs.T, cs.dt);
      const Vec end = tr.points.back();
      if (cs.sys.kind() == SystemKind::CatSuspension) {
        const double top = cs.sys.roof().value(end[0], end[1]);
        if (end[2] < 0.05 || end[2] > top - 0.05) continue;  // keep both ends in one chart
      }
      // Whole Jacobian, so that a direction of vanishing curvature cannot mask the first-order term.
      double err[2] = {0.0, 0.0};
      const double hs[2] = {1e-4, 1e-5};
      for (int col = 0; col < 3; ++col) {
        const Vec v = Vec::Unit(3, col);
        const Vec Jv = tangent_propagate(cs.sys, tr, v).back();
        for (int k = 0; k < 2; ++k) {
          const Vec moved = integrate_orbit(cs.sys, p + hs[k] * v, cs.T, cs.dt).points.back();
          err[k] += (chart_delta(cs.sys, moved, end) / hs[k] - Jv).squaredNorm();
        }
      }
      err[0] = std::sqrt(err[0]);
      err[1] = std::sqrt(err[1]);
      const double slope = std::log10(err[0] / err[1]);
      worst_slope_gap = std::max(worst_slope_gap, std::abs(slope - 1.0));
      tangent.push_back({{"case", cs.name}, {"error_h1e-4", err[0]}, {"error_h1e-5", err[1]}, {"slope", slope}});
      ++accepted;
    }
  }

  std::vector<Observable> obs{bench_observable(),
                              trig_window_observable(kBenchRoof, 0.7, 1, 2, 0.3, HeightWindow{2}),
                              trig_window_observable(kBenchRoof, 1.3, 2, -1, 1.1, HeightWindow{0}),
                              constant_observable(3, 2.5),
                              coordinate_observable(3, 2, 1.5),
                              squared_coordinate_observable(3, 0, 0.5)};
  std::vector<Vec> probes;
  for (int i = 0; i < 50; ++i) probes.push_back(cat.draw_initial(rng));
  bool grad_ok = true;
  Json grads = Json::array();
  for (const auto& A : obs) {
    const double m1 = gradient_mismatch(A, probes, 1e-3);
    const double m2 = gradient_mismatch(A, probes, 5e-4);
    // Second order: halving h quarters the error, unless it is at roundoff already.
    const bool ok = m1 < 1e-9 || (m1 / m2 > 3.0 && m1 / m2 < 5.0);
    grad_ok = grad_ok && ok;
    grads.push_back({{"observable", A.name}, {"mismatch_h", m1}, {"mismatch_h_half", m2}, {"ok", ok}});
  }
  c.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  c.passed = worst_slope_gap <= 0.1 && grad_ok && tangent.size() == 9;
  c.summary = "Richardson slopes within " + fmt(worst_slope_gap) + " of 1 over " + std::to_string(tangent.size()) +
              " cases, gradients " + (grad_ok ? "second order" : "FAILED");
  c.details = {{"tangent", tangent}, {"gradients", grads}};
  return c;
}

struct Entry {
  int id;
  const char* title;
  CriterionOutcome (*run)(std::uint64_t);
};

const Entry kCriteria[] = {
    {1, "null response for X = base field", null_response},
    {2, "split formula vs finite differences", split_vs_fd},
    {3, "SRB mean of C vanishes", mean_c},
    {4, "CLV correctness", clv},
    {5, "pressure, Bowen root, Gibbs states", pressure_bowen},
    {6, "resonances of 1 - lambda(omega)", resonances},
    {7, "suspension averages and roof quadrature", suspension_machinery},
    {8, "nonautonomous reduction", nonautonomous},
    {9, "tangent and gradient hygiene", hygiene},
};

}  // namespace

std::vector<CriterionOutcome> run_acceptance(const AcceptanceOptions& options,
                                             const std::function<void(const CriterionOutcome&)>& progress) {
  std::vector<CriterionOutcome> out;
  const std::uint64_t seed = 20240601ULL + options.seed_offset;
  for (const auto& e : kCriteria) {
    if (!options.only.empty() && std::find(options.only.begin(), options.only.end(), e.id) == options.only.end())
      continue;
    CriterionOutcome c;
    const auto start = Clock::now();
    try {
      c = e.run(seed);
    } catch (const std::exception& ex) {
      c.passed = false;
      c.summary = std::string("error: ") + ex.what();
      c.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    }
    c.id = e.id;
    c.title = e.title;
    out.push_back(c);
    if (progress) progress(out.back());
  }
  return out;
}

std::string format_line(const CriterionOutcome& c) {
  return std::string(c.passed ? "[PASS] " : "[FAIL] ") + std::to_string(c.id) + " " + c.title + ": " + c.summary;
}

Json acceptance_manifest(const std::vector<CriterionOutcome>& outcomes) {
  Json j;
  bool all = true;
  Json list = Json::array();
  for (const auto& c : outcomes) {
    all = all && c.passed;
    list.push_back({{"id", c.id}, {"title", c.title}, {"passed", c.passed}, {"summary", c.summary},
                    {"seconds", c.seconds}, {"details", c.details}});
  }
  j["all_passed"] = all;
  j["criteria"] = list;
  return j;
}

}  // namespace hyperlr::runner
