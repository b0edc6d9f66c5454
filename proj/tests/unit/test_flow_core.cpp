#include <doctest.h>

#include "hyperlr/fields.hpp"
#include "hyperlr/flow_core.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace hyperlr;

namespace {

Vec v3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

}  // namespace

TEST_CASE("cat map linear algebra") {
  const double lam = CatMap::expansion();
  CHECK(lam == doctest::Approx((3.0 + std::sqrt(5.0)) / 2.0).epsilon(1e-15));
  const auto u = CatMap::unstable_direction();
  // M u = lambda u
  CHECK(2 * u[0] + u[1] == doctest::Approx(lam * u[0]).epsilon(1e-14));
  CHECK(u[0] + u[1] == doctest::Approx(lam * u[1]).epsilon(1e-14));
  CHECK(u[1] / u[0] == doctest::Approx((std::sqrt(5.0) - 1.0) / 2.0).epsilon(1e-14));
  const auto f = CatMap::forward(0.2, 0.3);
  CHECK(f[0] == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(f[1] == doctest::Approx(0.5).epsilon(1e-15));
  const auto b = CatMap::backward(f[0], f[1]);
  CHECK(b[0] == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(b[1] == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(wrap_unit(-0.25) == 0.75);
  CHECK(wrap_unit(1.0) == 0.0);
}

TEST_CASE("roof bounds and floor") {
  const CatRoof r{1.0, 0.3, 0.1};
  CHECK(r.min_value() == doctest::Approx(0.6));
  CHECK(r.max_value() == doctest::Approx(1.4));
  CHECK_THROWS_AS(FlowSystem::cat_suspension(CatRoof{0.6, 0.3, 0.0}), ValidationError);
}

TEST_CASE("stationary flow stays put") {
  const VectorField zero = zero_field(3);
  const FlowSystem sys = FlowSystem::custom(3, zero);
  const Vec p = v3(0.3, -1.0, 2.0);
  const Trajectory tr = integrate_orbit(sys, p, 1.0, 0.1);
  for (const auto& q : tr.points) CHECK((q - p).norm() == 0.0);
}

TEST_CASE("unit roof: vertical motion and one crossing per unit time") {
  const FlowSystem sys = FlowSystem::cat_suspension(CatRoof{1.0, 0.0, 0.0});
  Vec p = v3(0.2, 0.3, 0.0);
  std::vector<CrossingEvent> ev;
  Vec q = p;
  sys.advance(q, 0.5, nullptr, &ev);
  CHECK(ev.empty());
  CHECK(q[0] == 0.2);
  CHECK(q[2] == doctest::Approx(0.5));
  q = p;
  sys.advance(q, 1.0, nullptr, &ev);
  CHECK(ev.size() == 1);
  const Vec c = sys.canonical(q);
  CHECK(c[0] == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(c[1] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(std::abs(c[2]) < 1e-14);
}

TEST_CASE("exact and RK4 suspension flows agree") {
  const CatRoof roof{1.0, 0.3, 0.1};
  const FlowSystem exact = FlowSystem::cat_suspension(roof);
  // A zero perturbation at nonzero parameter forces the generic integrator.
  const VectorField null{"null", [](const Vec&) { return Vec(Vec::Zero(3)); }, {}, false};
  const FlowSystem rk = FlowSystem::cat_suspension(roof, null, 1.0);
  CHECK(exact.exact());
  CHECK_FALSE(rk.exact());
  const Vec p = v3(0.41, 0.17, 0.2);
  const Vec a = exact.canonical(integrate_orbit(exact, p, 3.3, 0.01).points.back());
  const Vec b = rk.canonical(integrate_orbit(rk, p, 3.3, 0.01).points.back());
  CHECK((a - b).norm() < 1e-9);
}

TEST_CASE("tangent: flow direction is carried to flow direction") {
  const CatRoof roof{1.0, 0.3, 0.0};
  const FlowSystem sys = FlowSystem::cat_suspension(roof).with_perturbation(
      trig_window_field(roof, {{0, 0.5, 1, 1, 0.2}}, HeightWindow{4})).with_parameter(0.1);
  const Vec p = v3(0.3, 0.6, 0.4);
  const Trajectory tr = integrate_orbit(sys, p, 3.0, 0.01);
  const auto vs = tangent_propagate(sys, tr, sys.field(p));
  for (std::size_t i = 0; i < tr.size(); i += 25) CHECK((vs[i] - sys.field(tr.points[i])).norm() < 1e-8);
  const auto zs = tangent_propagate(sys, tr, Vec::Zero(3));
  CHECK(zs.back().norm() == 0.0);
}

TEST_CASE("tangent: unit roof stretches the unstable eigenvector by lambda^n") {
  const FlowSystem sys = FlowSystem::cat_suspension(CatRoof{1.0, 0.0, 0.0});
  const auto u = CatMap::unstable_direction();
  const Trajectory tr = integrate_orbit(sys, v3(0.11, 0.52, 0.3), 5.0, 0.5);
  const auto vs = tangent_propagate(sys, tr, v3(u[0], u[1], 0.0));
  for (int n = 1; n <= 5; ++n)
    CHECK(vs[static_cast<std::size_t>(2 * n)].norm() == doctest::Approx(std::pow(CatMap::expansion(), n)).epsilon(1e-12));
}

TEST_CASE("tangent: exact suspension preserves volume") {
  const FlowSystem sys = FlowSystem::cat_suspension(CatRoof{1.0, 0.3, 0.1});
  Vec p = v3(0.7, 0.2, 0.1);
  Mat J = Mat::Identity(3, 3);
  sys.advance(p, 4.2, &J);
  CHECK(J.determinant() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("Lorenz Jacobian trace") {
  const FlowSystem sys = FlowSystem::lorenz63();
  const Mat J = sys.field_jacobian(v3(1.0, 2.0, 3.0));
  CHECK(J.trace() == doctest::Approx(-(10.0 + 1.0 + 8.0 / 3.0)));
}

TEST_CASE("pullback accumulation") {
  const FlowSystem sys = FlowSystem::cat_suspension(CatRoof{1.0, 0.3, 0.0});
  const Vec p = v3(0.25, 0.5, 0.5);
  const Vec zero = pullback_accumulate(sys, p, [](const Vec&) { return Vec(Vec::Zero(3)); }, 3.0, 0.01);
  CHECK(zero.norm() == 0.0);
  const Vec flow = pullback_accumulate(sys, p, [&](const Vec& q) { return sys.field(q); }, 3.0, 0.01);
  CHECK((flow - 3.0 * sys.field(p)).norm() < 1e-8);
}

TEST_CASE("pullback of a stable field converges geometrically") {
  const FlowSystem sys = FlowSystem::cat_suspension(CatRoof{1.0, 0.0, 0.0});
  const auto s = CatMap::stable_direction();
  const auto Y = [&](const Vec& q) { return Vec(v3(s[0], s[1], 0.0) * (1.0 + 0.5 * std::cos(kTwoPi * q[0]))); };
  const Vec p = v3(0.3, 0.4, 0.5);
  // The tail beyond T is O(lambda^-T); roundoff grows like lambda^T, so horizons stay near 20.
  const Vec a10 = pullback_accumulate(sys, p, Y, 10.0, 0.01);
  const Vec a = pullback_accumulate(sys, p, Y, 20.0, 0.01);
  const Vec b = pullback_accumulate(sys, p, Y, 22.0, 0.01);
  CHECK((a10 - a).norm() < 2.0 * std::pow(CatMap::expansion(), -10.0));
  CHECK((a - b).norm() < 1e-7);
  CHECK(b.norm() <= 1.5 / (1.0 - 1.0 / CatMap::expansion()) + 1e-9);
}

TEST_CASE("draws are under the roof and deterministic") {
  const FlowSystem sys = FlowSystem::cat_suspension(CatRoof{1.0, 0.3, 0.0});
  std::mt19937_64 a(7), b(7);
  for (int i = 0; i < 100; ++i) {
    const Vec p = sys.draw_initial(a);
    CHECK(p == sys.draw_initial(b));
    CHECK(sys.is_valid(p));
  }
}

TEST_CASE("trajectory CSV header") {
  const FlowSystem sys = FlowSystem::cat_suspension(CatRoof{1.0, 0.3, 0.0});
  std::ostringstream os;
  write_trajectory_csv(os, sys, integrate_orbit(sys, v3(0.1, 0.2, 0.3), 0.1, 0.05));
  const std::string s = os.str();
  CHECK(s.substr(0, s.find('\n')) == "t,x1,x2,s");
  CHECK(std::count(s.begin(), s.end(), '\n') == 4);
}
