#include "hyperlr/fields.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace hyperlr {

namespace {

double trig_arg(const TrigTerm& t, const Vec& p) { return kTwoPi * (t.k1 * p[0] + t.k2 * p[1]) + t.phase; }

}  // namespace

double HeightWindow::value(const CatRoof& roof, const Vec& p) const {
  if (power == 0) return 1.0;
  const double u = p[2] / roof.value(p[0], p[1]);
  return std::pow(std::sin(std::numbers::pi * u), power);
}

Vec HeightWindow::gradient(const CatRoof& roof, const Vec& p) const {
  Vec g = Vec::Zero(3);
  if (power == 0) return g;
  const double psi = roof.value(p[0], p[1]);
  const auto dpsi = roof.gradient(p[0], p[1]);
  const double u = p[2] / psi;
  const double sn = std::sin(std::numbers::pi * u);
  const double dw_du = power * std::pow(sn, power - 1) * std::cos(std::numbers::pi * u) * std::numbers::pi;
  g[0] = -dw_du * p[2] * dpsi[0] / (psi * psi);
  g[1] = -dw_du * p[2] * dpsi[1] / (psi * psi);
  g[2] = dw_du / psi;
  return g;
}

VectorField trig_window_field(const CatRoof& roof, std::vector<TrigTerm> terms, HeightWindow window) {
  for (const auto& t : terms)
    if (t.component < 0 || t.component > 2) throw ValidationError("trig term component must be 0, 1 or 2");
  VectorField f;
  f.name = "trig_window";
  f.is_zero = terms.empty();
  auto raw = [terms](const Vec& p) {
    Vec v = Vec::Zero(3);
    for (const auto& t : terms) v[t.component] += t.amplitude * std::cos(trig_arg(t, p));
    return v;
  };
  f.eval = [raw, roof, window](const Vec& p) { return Vec(window.value(roof, p) * raw(p)); };
  f.jacobian = [raw, terms, roof, window](const Vec& p) {
    const double w = window.value(roof, p);
    Mat J = raw(p) * window.gradient(roof, p).transpose();
    for (const auto& t : terms) {
      const double d = -t.amplitude * std::sin(trig_arg(t, p)) * kTwoPi * w;
      J(t.component, 0) += d * t.k1;
      J(t.component, 1) += d * t.k2;
    }
    return J;
  };
  return f;
}

VectorField scaled_base_field(const FlowSystem& system, double c) {
  VectorField f;
  f.name = "scaled_base";
  f.is_zero = c == 0.0;
  const VectorField base = system.base_vector_field();
  const int n = system.dim();
  f.eval = [base, c](const Vec& p) { return Vec(c * base.eval(p)); };
  f.jacobian = [base, c, n](const Vec& p) {
    if (c == 0.0) return Mat(Mat::Zero(n, n));
    return Mat(c * base.jacobian_at(p));
  };
  return f;
}

VectorField unstable_trig_field(std::vector<TrigTerm> terms) {
  const auto e = CatMap::unstable_direction();
  VectorField f;
  f.name = "unstable_trig";
  f.is_zero = terms.empty();
  auto g = [terms](const Vec& p) {
    double s = 0.0;
    for (const auto& t : terms) s += t.amplitude * std::cos(trig_arg(t, p));
    return s;
  };
  f.eval = [g, e](const Vec& p) {
    const double v = g(p);
    Vec out(3);
    out << v * e[0], v * e[1], 0.0;
    return out;
  };
  f.jacobian = [terms, e](const Vec& p) {
    double d1 = 0.0;
    double d2 = 0.0;
    for (const auto& t : terms) {
      const double s = -t.amplitude * std::sin(trig_arg(t, p)) * kTwoPi;
      d1 += s * t.k1;
      d2 += s * t.k2;
    }
    Mat J = Mat::Zero(3, 3);
    J(0, 0) = e[0] * d1;
    J(0, 1) = e[0] * d2;
    J(1, 0) = e[1] * d1;
    J(1, 1) = e[1] * d2;
    return J;
  };
  return f;
}

VectorField constant_field(const Vec& v) {
  VectorField f;
  f.name = "constant";
  f.is_zero = v.isZero(0.0);
  const int n = static_cast<int>(v.size());
  f.eval = [v](const Vec&) { return v; };
  f.jacobian = [n](const Vec&) { return Mat(Mat::Zero(n, n)); };
  return f;
}

double gluing_mismatch(const CatRoof& roof, const VectorField& X, int probes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < probes; ++i) {
    Vec top(3);
    top[0] = unit(rng);
    top[1] = unit(rng);
    top[2] = roof.value(top[0], top[1]);
    const auto g = roof.gradient(top[0], top[1]);
    Mat D(3, 3);
    D << 2.0, 1.0, 0.0, 1.0, 1.0, 0.0, -g[0], -g[1], 1.0;
    const auto x = CatMap::forward(top[0], top[1]);
    Vec base(3);
    base << x[0], x[1], 0.0;
    worst = std::max(worst, (X.eval(base) - D * X.eval(top)).norm());
  }
  return worst;
}

// ---------------------------------------------------------------------------

Observable constant_observable(int dim, double c) {
  Observable A;
  A.name = "constant";
  A.is_constant = true;
  A.value = [c](const Vec&) { return c; };
  A.gradient = [dim](const Vec&) { return Covec(Covec::Zero(dim)); };
  return A;
}

Observable trig_window_observable(const CatRoof& roof, double amplitude, int k1, int k2, double phase,
                                  HeightWindow window) {
  Observable A;
  A.name = "trig_window";
  A.is_constant = amplitude == 0.0;
  const TrigTerm t{0, amplitude, k1, k2, phase};
  A.value = [t, roof, window](const Vec& p) {
    return t.amplitude * std::cos(trig_arg(t, p)) * window.value(roof, p);
  };
  A.gradient = [t, roof, window](const Vec& p) {
    const double arg = trig_arg(t, p);
    const double w = window.value(roof, p);
    Covec g = t.amplitude * std::cos(arg) * window.gradient(roof, p);
    const double d = -t.amplitude * std::sin(arg) * kTwoPi * w;
    g[0] += d * t.k1;
    g[1] += d * t.k2;
    return g;
  };
  return A;
}

Observable coordinate_observable(int dim, int index, double scale) {
  require(index >= 0 && index < dim, "coordinate observable index out of range");
  Observable A;
  A.name = "coordinate";
  A.is_constant = scale == 0.0;
  A.value = [index, scale](const Vec& p) { return scale * p[index]; };
  A.gradient = [dim, index, scale](const Vec&) {
    Covec g = Covec::Zero(dim);
    g[index] = scale;
    return g;
  };
  return A;
}

Observable squared_coordinate_observable(int dim, int index, double scale) {
  require(index >= 0 && index < dim, "coordinate observable index out of range");
  Observable A;
  A.name = "squared_coordinate";
  A.is_constant = scale == 0.0;
  A.value = [index, scale](const Vec& p) { return scale * p[index] * p[index]; };
  A.gradient = [dim, index, scale](const Vec& p) {
    Covec g = Covec::Zero(dim);
    g[index] = 2.0 * scale * p[index];
    return g;
  };
  return A;
}

double gradient_mismatch(const Observable& A, const std::vector<Vec>& probes, double h) {
  double worst = 0.0;
  for (const auto& p : probes) {
    const Covec g = A.gradient(p);
    for (int j = 0; j < p.size(); ++j) {
      Vec plus = p;
      Vec minus = p;
      plus[j] += h;
      minus[j] -= h;
      const double fd = (A.value(plus) - A.value(minus)) / (2.0 * h);
      worst = std::max(worst, std::abs(fd - g[j]));
    }
  }
  return worst;
}

}  // namespace hyperlr
