#include <doctest.h>

#include "hyperlr/oracle.hpp"

#include <cmath>
#include <numbers>

using namespace hyperlr::oracle;

TEST_CASE("Perron roots and Gibbs chains") {
  CHECK(perron_root({{1, 1}, {1, 1}}, {0.0, 0.0}) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(perron_root({{1, 1}, {1, 0}}, {0.0, 0.0}) == doctest::Approx(std::numbers::phi).epsilon(1e-14));
  const auto full = markov_gibbs({{1, 1}, {1, 1}}, {0.0, 0.0}, {1.0, 1.0});
  CHECK(full.pressure == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(full.distribution[0] == doctest::Approx(0.5).epsilon(1e-14));
  const auto golden = markov_gibbs({{1, 1}, {1, 0}}, {0.0, 0.0}, {1.0, 1.0});
  CHECK(golden.pressure == doctest::Approx(std::log(std::numbers::phi)).epsilon(1e-14));
  const auto skew = markov_gibbs({{1, 1}, {1, 1}}, {0.0, -30.0}, {1.0, 1.0});
  CHECK(skew.distribution[0] > 0.999999);
}

TEST_CASE("periodic orbits") {
  const auto p1 = periodic_orbits({{1, 1}, {1, 1}}, 1);
  CHECK(p1 == std::vector<std::vector<int>>{{0}, {1}});
  const auto p2 = periodic_orbits({{1, 1}, {1, 1}}, 2);
  CHECK(p2 == std::vector<std::vector<int>>{{0}, {1}, {0, 1}});
  const auto g = periodic_orbits({{1, 1}, {1, 0}}, 2);
  CHECK(g == std::vector<std::vector<int>>{{0}, {0, 1}});
  // Necklace counts of the 2-shift: 2, 1, 2, 3, 6, 9.
  CHECK(periodic_orbits({{1, 1}, {1, 1}}, 6).size() == 23);
}

TEST_CASE("finite-difference slope") {
  const std::vector<double> same{1.0, 1.1, 0.9};
  const auto z = fd_slope(same, same, 0.02);
  CHECK(z.values[0] == 0.0);
  CHECK(*z.sigma == 0.0);
  const auto k = fd_slope({0.06, 0.06}, {-0.06, -0.06}, 0.02);
  CHECK(k.values[0] == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(k.exactness == Exactness::MonteCarlo);
}

TEST_CASE("constant-roof resonances") {
  const auto r7 = constant_roof_resonances(7.0, -0.5, 0.1);
  REQUIRE(r7.size() == 3);
  CHECK(r7[0] == doctest::Approx(-2 * std::numbers::pi));
  CHECK(r7[1] == 0.0);
  CHECK(constant_roof_resonances(13.0, -0.5, 0.1).size() == 5);
  CHECK(constant_roof_resonances(7.0, 0.2, 0.5).empty());
}
