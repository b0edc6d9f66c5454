#pragma once

// Perturbation fields and observables used on the testbeds.

#include "hyperlr/flow_core.hpp"

#include <functional>
#include <string>
#include <vector>

namespace hyperlr {

/// amplitude * cos(2 pi (k1 x1 + k2 x2) + phase), placed in one chart component.
struct TrigTerm {
  int component = 0;
  double amplitude = 1.0;
  int k1 = 0;
  int k2 = 0;
  double phase = 0.0;
};

/// Height window sin^power(pi s / psi(x)); power 0 disables the window.
/// Powers >= 2 make windowed fields vanish to that order at base and roof.
struct HeightWindow {
  int power = 4;

  double value(const CatRoof& roof, const Vec& p) const;
  /// Gradient with respect to (x1, x2, s).
  Vec gradient(const CatRoof& roof, const Vec& p) const;
};

/// X(p) = window(p) * sum of trig terms, on the cat suspension chart.
VectorField trig_window_field(const CatRoof& roof, std::vector<TrigTerm> terms, HeightWindow window);

/// c * (base field); the null-response perturbation when applied to any system.
VectorField scaled_base_field(const FlowSystem& system, double c);

/// g(x) * (unstable horizontal direction, 0) with g a sum of trig terms (component ignored).
/// Not continuous across the roof in general; meant for local divergence checks.
VectorField unstable_trig_field(std::vector<TrigTerm> terms);

/// Constant vector field.
VectorField constant_field(const Vec& v);

/// Largest mismatch |X(G p) - DG(p) X(p)| over random roof points p, where G
/// is the gluing map. Fields entering response estimators must be smooth across it.
double gluing_mismatch(const CatRoof& roof, const VectorField& X, int probes, std::uint64_t seed);

/// Real observable with its differential.
struct Observable {
  std::string name;
  std::function<double(const Vec&)> value;
  std::function<Covec(const Vec&)> gradient;
  /// Identically constant (gradient vanishes).
  bool is_constant = false;

  double operator()(const Vec& p) const { return value(p); }
};

Observable constant_observable(int dim, double c);
/// amplitude * cos(2 pi (k1 x1 + k2 x2) + phase) * window(p) on the suspension chart.
Observable trig_window_observable(const CatRoof& roof, double amplitude, int k1, int k2, double phase,
                                  HeightWindow window);
/// scale * q_index.
Observable coordinate_observable(int dim, int index, double scale = 1.0);
/// scale * q_index^2.
Observable squared_coordinate_observable(int dim, int index, double scale = 1.0);

/// Largest |gradient - central difference| over the given probe points.
double gradient_mismatch(const Observable& A, const std::vector<Vec>& probes, double h);

}  // namespace hyperlr
