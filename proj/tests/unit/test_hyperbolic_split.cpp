#include <doctest.h>

#include "hyperlr/hyperbolic_split.hpp"

#include <cmath>

using namespace hyperlr;

namespace {

Vec v3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

// Independent closed forms for the bundles of the suspension with roof
// psi = 1 + a cos(2 pi x1) + b sin(2 pi x2). The unstable line at (x, s) is
// (e_u, h(x)), the stable one (e_s, g(x)), with geometric series over the
// backward and forward cat-map orbit of x.
struct Bundles {
  double a, b;
  double lam = (3.0 + std::sqrt(5.0)) / 2.0;
  double eu[2], es[2];

  Bundles(double a_, double b_) : a(a_), b(b_) {
    const double n = std::sqrt(1.0 + std::pow((std::sqrt(5.0) - 1.0) / 2.0, 2));
    eu[0] = 1.0 / n;
    eu[1] = (std::sqrt(5.0) - 1.0) / 2.0 / n;
    es[0] = -eu[1];
    es[1] = eu[0];
  }

  double dpsi(const double x[2], const double e[2]) const {
    return -a * kTwoPi * std::sin(kTwoPi * x[0]) * e[0] + b * kTwoPi * std::cos(kTwoPi * x[1]) * e[1];
  }

  static void fwd(double x[2]) {
    const double y0 = 2 * x[0] + x[1], y1 = x[0] + x[1];
    x[0] = y0 - std::floor(y0);
    x[1] = y1 - std::floor(y1);
  }
  static void bwd(double x[2]) {
    const double y0 = x[0] - x[1], y1 = -x[0] + 2 * x[1];
    x[0] = y0 - std::floor(y0);
    x[1] = y1 - std::floor(y1);
  }

  Vec unstable(const Vec& p) const {
    double x[2] = {p[0], p[1]};
    double h = 0.0, w = 1.0;
    for (int k = 1; k <= 60; ++k) {
      bwd(x);
      w /= lam;
      h -= w * dpsi(x, eu);
    }
    return v3(eu[0], eu[1], h);
  }

  Vec stable(const Vec& p) const {
    double x[2] = {p[0], p[1]};
    double g = 0.0, w = 1.0;
    for (int k = 0; k <= 60; ++k) {
      g += w * dpsi(x, es);
      fwd(x);
      w /= lam;
    }
    return v3(es[0], es[1], g);
  }
};

}  // namespace

TEST_CASE("covariant vectors match the closed-form bundles") {
  // Short orbits keep the analytic series accurate (the backward orbit is exact to ~1e-15 * lambda^k only for small k).
  for (const CatRoof roof : {CatRoof{1.0, 0.3, 0.0}, CatRoof{1.0, 0.2, 0.15}}) {
    const FlowSystem sys = FlowSystem::cat_suspension(roof);
    const Trajectory tr = integrate_orbit(sys, v3(0.123, 0.456, 0.3), 80.0, 0.02);
    ClvOptions opt;
    opt.warmup = 30.0;
    const SplitFrame f = compute_clv(sys, tr, opt);
    REQUIRE(f.size() > 100);
    const Bundles oracle(roof.amp_x1, roof.amp_x2);
    double worst_u = 0.0, worst_s = 0.0, worst_c = 0.0;
    for (std::size_t i = 0; i < f.size(); i += 7) {
      const Vec p = sys.canonical(f.points[i]);
      worst_u = std::max(worst_u, line_angle(f.unstable(i), oracle.unstable(p)));
      worst_s = std::max(worst_s, line_angle(f.stable(i), oracle.stable(p)));
      worst_c = std::max(worst_c, (f.center(i) - sys.field(f.points[i]).normalized()).norm());
    }
    CHECK(worst_u < 1e-6);
    CHECK(worst_s < 1e-6);
    CHECK(worst_c == 0.0);
  }
}

TEST_CASE("point frames agree with the orbit frame") {
  const CatRoof roof{1.0, 0.3, 0.0};
  const FlowSystem sys = FlowSystem::cat_suspension(roof);
  const Bundles oracle(roof.amp_x1, roof.amp_x2);
  for (const Vec& p : {v3(0.1, 0.2, 0.3), v3(0.77, 0.05, 1.1), v3(0.5, 0.9, 0.01)}) {
    const PointFrame pf = frame_at(sys, p);
    CHECK(line_angle(pf.unstable, oracle.unstable(p)) < 1e-7);
    CHECK(line_angle(pf.stable, oracle.stable(p)) < 1e-7);
    // Unit vectors oriented along the eigenvectors.
    CHECK(pf.unstable.norm() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(pf.unstable[0] * oracle.eu[0] + pf.unstable[1] * oracle.eu[1] > 0.0);
    CHECK(pf.stable[0] * oracle.es[0] + pf.stable[1] * oracle.es[1] > 0.0);
    const Vec su = section_unstable(pf.unstable);
    CHECK(std::hypot(su[0], su[1]) == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("field split is a partition of identity") {
  const CatRoof roof{1.0, 0.3, 0.0};
  const FlowSystem sys = FlowSystem::cat_suspension(roof);
  const Trajectory tr = integrate_orbit(sys, v3(0.3, 0.7, 0.2), 70.0, 0.05);
  ClvOptions opt;
  opt.warmup = 30.0;
  const SplitFrame f = compute_clv(sys, tr, opt);
  const VectorField X = trig_window_field(roof, {{1, 1.0, 0, 1, -kTwoPi / 4}, {2, 0.5, 1, 0, 0.0}}, HeightWindow{4});
  const auto parts = split_field(sys, X, f);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Vec x = X(f.points[i]);
    CHECK((x - parts[i].center - parts[i].stable - parts[i].unstable).norm() < 1e-10);
    CHECK((parts[i].center - parts[i].eta * sys.field(f.points[i])).norm() < 1e-12);
  }
  const auto base = split_field(sys, scaled_base_field(sys, 1.0), f);
  for (const auto& s : base) {
    CHECK(s.eta == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.stable.norm() < 1e-12);
    CHECK(s.unstable.norm() < 1e-12);
  }
  // A vector in E^s has no other components.
  const FieldSplit s = split_vector(sys, f.points[5], f.basis[5], 1, f.stable(5));
  CHECK((s.stable - f.stable(5)).norm() < 1e-12);
  CHECK(std::abs(s.eta) < 1e-12);
}

TEST_CASE("divergence of an unstable field on the unit roof") {
  const FlowSystem sys = FlowSystem::cat_suspension(CatRoof{1.0, 0.0, 0.0});
  const std::vector<TrigTerm> terms{{0, 0.7, 1, 0, 0.3}, {0, 0.2, 1, 2, 0.0}};
  const VectorField X = unstable_trig_field(terms);
  const Trajectory tr = integrate_orbit(sys, v3(0.2, 0.6, 0.1), 40.0, 0.05);
  ClvOptions opt;
  opt.warmup = 15.0;
  const SplitFrame f = compute_clv(sys, tr, opt);
  DivergenceOptions d;
  d.h = 1e-4;
  d.stride = 4;
  const DivergenceSamples C = estimate_divergence_C(sys, X, f, d);
  REQUIRE(!C.values.empty());
  const auto u = CatMap::unstable_direction();
  double worst = 0.0;
  for (std::size_t i = 0; i < C.values.size(); ++i) {
    const Vec p = C.points[i];
    double exact = 0.0;
    for (const auto& t : terms)
      exact -= t.amplitude * kTwoPi * (t.k1 * u[0] + t.k2 * u[1]) *
               std::sin(kTwoPi * (t.k1 * p[0] + t.k2 * p[1]) + t.phase);
    worst = std::max(worst, std::abs(C.values[i] - exact));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("divergence vanishes for the flow field on a constant roof") {
  const FlowSystem sys = FlowSystem::cat_suspension(CatRoof{1.0, 0.0, 0.0});
  const Trajectory tr = integrate_orbit(sys, v3(0.2, 0.6, 0.1), 40.0, 0.05);
  ClvOptions opt;
  opt.warmup = 15.0;
  const SplitFrame f = compute_clv(sys, tr, opt);
  DivergenceOptions d;
  d.stride = 10;
  const DivergenceSamples C = estimate_divergence_C(sys, scaled_base_field(sys, 1.0), f, d);
  for (double c : C.values) CHECK(std::abs(c) < 1e-9);
}

TEST_CASE("divergence is refused off the suspension") {
  const FlowSystem sys = FlowSystem::lorenz63();
  const Trajectory tr = integrate_orbit(sys, v3(1.0, 1.0, 20.0), 30.0, 0.01);
  ClvOptions opt;
  opt.warmup = 10.0;
  const SplitFrame f = compute_clv(sys, tr, opt);
  CHECK(f.exponents[0] > 0.5);
  CHECK(f.exponents[2] < -10.0);
  CHECK_THROWS_AS(estimate_divergence_C(sys, zero_field(3), f), UnsupportedError);
}
