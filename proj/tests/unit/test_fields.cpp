#include <doctest.h>

#include "hyperlr/fields.hpp"

#include <random>

using namespace hyperlr;

TEST_CASE("windowed fields are smooth across the roof") {
  const CatRoof roof{1.0, 0.3, 0.0};
  const VectorField X = trig_window_field(roof, {{1, 1.0, 0, 1, -kTwoPi / 4}, {2, 0.5, 1, 0, 0.0}}, HeightWindow{4});
  CHECK(gluing_mismatch(roof, X, 200, 3) < 1e-8);
  const VectorField raw = trig_window_field(roof, {{0, 1.0, 1, 0, 0.0}}, HeightWindow{0});
  CHECK(gluing_mismatch(roof, raw, 200, 3) > 1e-3);
}

TEST_CASE("height window") {
  const CatRoof roof{1.0, 0.3, 0.0};
  const HeightWindow w{4};
  Vec p(3);
  p << 0.2, 0.4, 0.0;
  CHECK(w.value(roof, p) == 0.0);
  p[2] = roof.value(0.2, 0.4) / 2;
  CHECK(w.value(roof, p) == doctest::Approx(1.0));
  CHECK(HeightWindow{0}.value(roof, p) == 1.0);
}

TEST_CASE("observable gradients match central differences") {
  const CatRoof roof{1.0, 0.3, 0.1};
  std::mt19937_64 rng(11);
  const FlowSystem sys = FlowSystem::cat_suspension(roof);
  std::vector<Vec> probes;
  for (int i = 0; i < 40; ++i) probes.push_back(sys.draw_initial(rng));
  for (const Observable& A : {trig_window_observable(roof, 1.0, 0, 1, 0.0, HeightWindow{4}),
                              trig_window_observable(roof, 0.4, 2, -1, 1.0, HeightWindow{2}),
                              coordinate_observable(3, 2, 2.0), squared_coordinate_observable(3, 1)}) {
    const double e1 = gradient_mismatch(A, probes, 1e-3);
    const double e2 = gradient_mismatch(A, probes, 5e-4);
    CHECK((e1 < 1e-9 || (e1 / e2 > 3.0 && e1 / e2 < 5.0)));
  }
  const Observable one = constant_observable(3, 1.0);
  CHECK(one.is_constant);
  CHECK(one.gradient(probes[0]).norm() == 0.0);
}

TEST_CASE("base field scaling") {
  const FlowSystem sys = FlowSystem::lorenz63();
  const VectorField X = scaled_base_field(sys, 2.0);
  Vec p(3);
  p << 1.0, 2.0, 3.0;
  CHECK((X(p) - 2.0 * sys.base_field(p)).norm() == 0.0);
}
