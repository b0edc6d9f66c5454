#include <doctest.h>

#include "hyperlr/symbolic_td.hpp"

#include <cmath>
#include <numbers>

using namespace hyperlr;

namespace {
const std::vector<std::vector<int>> kFull{{1, 1}, {1, 1}};
const std::vector<std::vector<int>> kGolden{{1, 1}, {1, 0}};
}  // namespace

TEST_CASE("mixing exponent") {
  CHECK(check_mixing(kFull) == 1);
  CHECK(check_mixing(kGolden) == 2);
  CHECK_FALSE(check_mixing({{1, 0}, {0, 1}}).has_value());
  CHECK_THROWS_AS(SftSystem({{1, 0}, {0, 1}}, 1).validate(), ValidationError);
}

TEST_CASE("word enumeration") {
  const SftSystem g(kGolden, 2);
  CHECK(g.word_count() == 3);  // 00 01 10
  CHECK(g.word_index({1, 1}) == -1);
  CHECK(g.word_index({1, 0}) == 2);
  const SftSystem cat = cat_map_sft();
  CHECK(cat.word_count() == 5);
  CHECK(pressure(cat, std::vector<double>(5, 0.0)) == doctest::Approx(std::log((3.0 + std::sqrt(5.0)) / 2.0)).epsilon(1e-12));
}

TEST_CASE("pressure") {
  const SftSystem full(kFull, 1);
  CHECK(std::abs(pressure(full, {0.0, 0.0}) - std::log(2.0)) < 1e-12);
  CHECK(pressure(full, {0.7, 0.7}) == doctest::Approx(std::log(2.0) + 0.7).epsilon(1e-13));
  const SftSystem g(kGolden, 1);
  CHECK(pressure(g, {0.0, 0.0}) == doctest::Approx(std::log(std::numbers::phi)).epsilon(1e-13));
}

TEST_CASE("Bowen root") {
  const SftSystem full(kFull, 1);
  CHECK(std::abs(bowen_root(full, {0.0, 0.0}, {1.0, 1.0}) - std::log(2.0)) < 1e-12);
  const double c = bowen_root(full, {0.0, 0.0}, {1.0, 2.0});
  CHECK(std::abs(std::exp(-c) + std::exp(-2 * c) - 1.0) < 1e-12);
  // phi = kappa psi shifts the root by kappa.
  const double base = bowen_root(full, {0.0, 0.0}, {0.8, 1.3});
  CHECK(bowen_root(full, {0.3 * 0.8, 0.3 * 1.3}, {0.8, 1.3}) == doctest::Approx(base + 0.3).epsilon(1e-11));
}

TEST_CASE("equilibrium states") {
  const SftSystem full(kFull, 1);
  const auto bern = equilibrium_state(full, {0.0, 0.0}, {1.0, 1.0}, std::log(2.0));
  CHECK(bern.weights[0] == doctest::Approx(0.5).epsilon(1e-14));
  const double c = bowen_root(full, {0.0, std::log(2.0)}, {1.0, 1.0});
  const auto st = equilibrium_state(full, {0.0, std::log(2.0)}, {1.0, 1.0}, c);
  CHECK(std::abs(st.weights[0] - 1.0 / 3.0) < 1e-12);
  CHECK(std::abs(st.weights[1] - 2.0 / 3.0) < 1e-12);
  CHECK(st.invariance_residual < 1e-10);
  CHECK(st.mean_roof == doctest::Approx(1.0));
}

TEST_CASE("suspension averages") {
  SftSystem g(kGolden, 1);
  g.set_roof({1.0, 1.7});
  const double c = bowen_root(g, {0.0, 0.0}, g.roof());
  const auto st = equilibrium_state(g, {0.0, 0.0}, g.roof(), c);
  CHECK(suspension_average(g, st, [](int, double) { return 1.0; }) == 1.0);
  const double half =
      suspension_average(g, st, [&](int w, double t) { return t < 0.5 * g.roof()[static_cast<std::size_t>(w)] ? 1.0 : 0.0; });
  CHECK(half == 0.5);
  QuadratureOptions q;
  q.step = 1.0;
  CHECK_THROWS_AS(roof_integrals(g, [](int, double) { return 1.0; }, q), ValidationError);
}

TEST_CASE("flow correlations") {
  SftSystem full(kFull, 1);
  const auto st = equilibrium_state(full, {0.0, 0.0}, {1.0, 1.0}, std::log(2.0));
  CorrelationOptions o;
  o.n_samples = 20000;
  o.seed = 3;
  std::vector<double> t;
  for (int i = 0; i <= 40; ++i) t.push_back(0.05 * i);
  const auto one = flow_correlation(full, st, [](int, double s) { return std::cos(kTwoPi * s); },
                                    [](int, double) { return 1.0; }, t, o);
  for (double v : one.values) CHECK(std::abs(v) < 1e-12);
  // Constant roof: the height harmonic is carried rigidly, so rho(t) = cos(2 pi t)/2.
  const auto h = flow_correlation(full, st, [](int, double s) { return std::cos(kTwoPi * s); },
                                  [](int, double s) { return std::cos(kTwoPi * s); }, t, o);
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(std::abs(h.values[i] - 0.5 * std::cos(kTwoPi * t[i])) < 0.03);
  CHECK(std::abs(h.values[20] - h.values[0]) < 1e-10);
}

TEST_CASE("leading eigenvalue") {
  const SftSystem full(kFull, 1);
  const double c = std::log(2.0);
  for (double w : {0.0, 0.7, 3.0, 6.0}) {
    const auto b = leading_eigenvalue(full, {0.0, 0.0}, {1.0, 1.0}, c, {w, -0.2});
    CHECK(std::abs(b.lambda - std::exp(std::complex<double>(0, -1) * std::complex<double>(w, -0.2))) < 1e-12);
  }
  const ComplexMatrix L0 = twisted_matrix(full, {0.0, 0.0}, {1.0, 1.0}, c, 0.0);
  CHECK((L0.real() - transfer_matrix(full, {-c, -c})).norm() < 1e-15);
}

TEST_CASE("resonance scan finds the lattice roots") {
  const SftSystem full(kFull, 1);
  ScanStrip s;
  s.re_max = 13.0;
  const auto scan = resonance_scan(full, {0.0, 0.0}, {1.0, 1.0}, std::log(2.0), s);
  REQUIRE(scan.roots.size() == 5);
  for (std::size_t i = 0; i < 5; ++i)
    CHECK(std::abs(scan.roots[i].omega - std::complex<double>(kTwoPi * (static_cast<double>(i) - 2.0), 0.0)) < 1e-8);
  for (const auto& r : scan.roots) CHECK(std::abs(r.derivative) > 0.5);
}

TEST_CASE("cycle averages") {
  const SftSystem full(kFull, 1);
  CHECK(cycle_average(full, {1.0, 2.0}, {0, 1}) == 1.5);
  CHECK_THROWS(cycle_average(SftSystem(kGolden, 1), {1.0, 2.0}, {1, 1}));
}
