#include <doctest.h>

#include "hyperlr/parallel.hpp"
#include "hyperlr/srb_response.hpp"

#include <cmath>

using namespace hyperlr;

namespace {

const CatRoof kRoof{1.0, 0.3, 0.0};

VectorField bench_field() {
  return trig_window_field(kRoof, {{1, 1.0, 0, 1, -kTwoPi / 4}, {2, 0.5, 1, 0, 0.0}}, HeightWindow{4});
}
Observable bench_observable() { return trig_window_observable(kRoof, 1.0, 0, 1, 0.0, HeightWindow{4}); }

KernelOptions small_kernel() {
  KernelOptions k;
  k.T = 3.0;
  k.n_samples = 2000;
  k.seed = 5;
  return k;
}

}  // namespace

TEST_CASE("Birkhoff averages") {
  const FlowSystem unit = FlowSystem::cat_suspension(CatRoof{1.0, 0.0, 0.0});
  const auto one = birkhoff_average(unit, constant_observable(3, 1.0), 200.0, 4, 5.0, 0.05, 1);
  CHECK(one.mean == 1.0);
  CHECK(one.std_error == 0.0);
  Observable c1{"cos x1", [](const Vec& p) { return std::cos(kTwoPi * p[0]); },
                [](const Vec& p) {
                  Vec g = Vec::Zero(3);
                  g[0] = -kTwoPi * std::sin(kTwoPi * p[0]);
                  return g;
                }};
  const auto r = birkhoff_average(unit, c1, 2000.0, 4, 5.0, 0.05, 2);
  CHECK(std::abs(r.mean) <= 3.0 * r.std_error + 1e-10);
}

TEST_CASE("finite differences of trivial inputs") {
  const FlowSystem sys = FlowSystem::cat_suspension(kRoof).with_perturbation(bench_field());
  FiniteDifferenceOptions o;
  o.T = 200.0;
  o.n_orbits = 2;
  const auto r = finite_difference_response(sys, constant_observable(3, 2.0), o);
  CHECK(r.value == 0.0);
}

TEST_CASE("response kernel: zero field and constant observable") {
  const FlowSystem sys = FlowSystem::cat_suspension(kRoof).with_perturbation(bench_field());
  const KernelCurve kz = response_kernel(sys, bench_observable(), zero_field(3), small_kernel());
  DirectOptions d;
  d.kernel = small_kernel();
  CHECK(direct_damped_from_kernel(kz, d).value == 0.0);
  const KernelCurve kc = response_kernel(sys, constant_observable(3, 1.0), bench_field(), small_kernel());
  CHECK(direct_damped_from_kernel(kc, d).value == 0.0);
  const auto chi = susceptibility_curve(kz, {-1.0, 0.0, 2.0}, 0.1);
  for (const auto& v : chi.values) CHECK(std::abs(v) == 0.0);
}

TEST_CASE("susceptibility at i*eps is the damped integral") {
  const FlowSystem sys = FlowSystem::cat_suspension(kRoof).with_perturbation(bench_field());
  const KernelCurve k = response_kernel(sys, bench_observable(), bench_field(), small_kernel());
  for (double eps : {0.4, 0.2, 0.1}) {
    DirectOptions d;
    d.kernel = small_kernel();
    d.epsilons = {eps};
    const double direct = direct_damped_from_kernel(k, d).value;
    const auto chi = susceptibility_curve(k, {0.0}, eps);
    CHECK(std::abs(chi.values[0].real() - direct) < 1e-12);
    CHECK(std::abs(chi.values[0].imag()) < 1e-12);
  }
}

TEST_CASE("kernels do not depend on the worker count") {
  const FlowSystem sys = FlowSystem::cat_suspension(kRoof).with_perturbation(bench_field());
  worker_override().store(1);
  const auto a = response_kernel(sys, bench_observable(), bench_field(), small_kernel()).mean();
  worker_override().store(3);
  const auto b = response_kernel(sys, bench_observable(), bench_field(), small_kernel()).mean();
  worker_override().store(0);
  CHECK(a == b);
}

TEST_CASE("extrapolation weights") {
  const auto w = intercept_weights({0.4, 0.2, 0.1}, 1);
  double s = 0.0, lin = 0.0;
  const double xs[3] = {0.4, 0.2, 0.1};
  for (int i = 0; i < 3; ++i) {
    s += w[static_cast<std::size_t>(i)];
    lin += w[static_cast<std::size_t>(i)] * (3.0 - 2.0 * xs[i]);
  }
  CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(lin == doctest::Approx(3.0).epsilon(1e-14));
  const auto e = extrapolation_weights({0.2, 0.1});
  CHECK(e[0] == doctest::Approx(-1.0));
  CHECK(e[1] == doctest::Approx(2.0));
}

TEST_CASE("batch statistics") {
  std::vector<double> v(40);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i % 2);
  const MeanError m = batch_means(v);
  CHECK(m.mean == 0.5);
  CHECK(m.std_error == 0.0);
  CHECK(agrees(1.0, 0.1, 1.4, 0.1));
  CHECK_FALSE(agrees(1.0, 0.1, 1.5, 0.1));
}

TEST_CASE("split estimator: trivial inputs") {
  const FlowSystem base = FlowSystem::cat_suspension(kRoof);
  SplitOptions o;
  o.n_orbits = 2;
  o.T = 60.0;
  const auto r = split_response(base.with_perturbation(bench_field()), constant_observable(3, 1.0), bench_field(), o);
  CHECK(r.value == 0.0);
  const VectorField flow = scaled_base_field(base, 1.0);
  const auto n = split_response(base.with_perturbation(flow), bench_observable(), flow, o);
  CHECK(std::abs(n.value) <= 3.0 * n.std_error + 1e-10);
}

TEST_CASE("stable shadow converges geometrically in the backward horizon") {
  const CatRoof flat{1.0, 0.0, 0.0};
  const VectorField X = trig_window_field(flat, {{1, 1.0, 0, 1, -kTwoPi / 4}, {2, 0.5, 1, 0, 0.0}}, HeightWindow{4});
  const Observable A = trig_window_observable(flat, 1.0, 0, 1, 0.0, HeightWindow{4});
  Vec p0(3);
  p0 << 0.31, 0.62, 0.2;
  const FlowSystem sys = FlowSystem::cat_suspension(flat).with_perturbation(X);
  ClvOptions co;
  co.warmup = 20.0;
  const SplitFrame f = compute_clv(sys, integrate_orbit(sys, p0, 200.0, 0.02), co);
  const auto a = stable_shadow_term(sys, A, X, f, 10.0);
  const auto b = stable_shadow_term(sys, A, X, f, 20.0);
  // Tail of order lambda^-T_back.
  CHECK(a.tail < 10.0 * std::pow((3.0 + std::sqrt(5.0)) / 2.0, -10.0));
  CHECK(b.tail < 1e-6);
  CHECK(b.max_leak < 1e-8);
}

TEST_CASE("nonautonomous schedules") {
  const FlowSystem sys = FlowSystem::cat_suspension(kRoof).with_perturbation(bench_field());
  const VectorField X = bench_field();
  NonautonomousOptions o;
  o.kernel = small_kernel();
  o.kernel.T = 5.0;
  FieldSchedule zero{0.0, [](double) { return zero_field(3); }};
  CHECK(nonautonomous_response(sys, bench_observable(), zero, 1.0, o).value == 0.0);

  // X switched off after t0, evaluated 5 time units later: only lags >= 5 carry X.
  o.kernel.T = 8.0;
  FieldSchedule step{0.0, [X](double tau) { return tau <= 0.0 ? X : zero_field(3); }};
  const auto r = nonautonomous_response(sys, bench_observable(), step, 5.0, o);
  const KernelCurve k = response_kernel(sys, bench_observable(), X, o.kernel);
  std::vector<double> tail(k.lags.size());
  for (std::size_t i = 0; i < tail.size(); ++i) tail[i] = k.lags[i] >= 5.0 - 1e-9 ? 1.0 : 0.0;
  CHECK(std::abs(r.value - mean_of_batches(k.batch_integrals(tail)).mean) < 1e-12);
  CHECK(r.value != 0.0);
}
