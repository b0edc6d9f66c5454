#include "hyperlr/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace hyperlr::oracle {

std::string to_string(Exactness e) { return e == Exactness::Exact ? "exact" : "monte_carlo"; }

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_square(const Transitions& tau) {
  if (tau.empty()) throw std::invalid_argument("empty transition matrix");
  for (const auto& row : tau)
    if (row.size() != tau.size()) throw std::invalid_argument("transition matrix must be square");
}

// Positive Perron vector of M (right when `left` is false), with its eigenvalue.
std::pair<double, Table> power_iterate(const Transitions& tau, const Table& weight, bool left) {
  check_square(tau);
  const std::size_t n = tau.size();
  if (weight.size() != n) throw std::invalid_argument("one weight per symbol required");
  std::vector<Table> M(n, Table(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (tau[i][j]) M[i][j] = std::exp(weight[i]);
  Table v(n, 1.0 / static_cast<double>(n));
  double lambda = 0.0;
  int quiet = 0;
  for (int it = 0; it < 200000 && quiet < 3; ++it) {
    Table w(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (left)
          w[j] += v[i] * M[i][j];
        else
          w[i] += M[i][j] * v[j];
      }
    const double s = std::accumulate(w.begin(), w.end(), 0.0);
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      w[i] /= s;
      change = std::max(change, std::abs(w[i] - v[i]));
    }
    v.swap(w);
    lambda = s;  // v summed to 1 before the step
    quiet = change < 1e-15 ? quiet + 1 : 0;
  }
  return {lambda, v};
}

}  // namespace

double perron_root(const Transitions& tau, const Table& weight) { return power_iterate(tau, weight, false).first; }

GibbsChain markov_gibbs(const Transitions& tau, const Table& phi, const Table& psi) {
  check_square(tau);
  const std::size_t n = tau.size();
  if (phi.size() != n || psi.size() != n) throw std::invalid_argument("phi and psi need one entry per symbol");
  for (double p : psi)
    if (!(p > 0.0)) throw std::invalid_argument("psi must be positive");
  auto P = [&](double c) {
    Table w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = phi[i] - c * psi[i];
    return std::log(perron_root(tau, w));
  };
  GibbsChain out;
  out.pressure = P(0.0);
  double lo = -1.0, hi = 1.0;
  while (P(lo) < 0.0) lo *= 2.0;
  while (P(hi) > 0.0) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (P(mid) > 0.0 ? lo : hi) = mid;
  }
  out.c = 0.5 * (lo + hi);

  Table w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = phi[i] - out.c * psi[i];
  const auto [lr, r] = power_iterate(tau, w, false);
  const auto [ll, l] = power_iterate(tau, w, true);
  (void)ll;
  out.distribution.resize(n);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) z += l[i] * r[i];
  for (std::size_t i = 0; i < n; ++i) out.distribution[i] = l[i] * r[i] / z;
  out.kernel.assign(n, Table(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (tau[i][j]) out.kernel[i][j] = std::exp(w[i]) * r[j] / (lr * r[i]);
  return out;
}

double symbol_suspension_average(const Table& distribution, const Table& psi, const Table& A) {
  if (distribution.size() != psi.size() || psi.size() != A.size())
    throw std::invalid_argument("tables must have equal length");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    num += distribution[i] * psi[i] * A[i];
    den += distribution[i] * psi[i];
  }
  return num / den;
}

std::vector<std::vector<int>> periodic_orbits(const Transitions& tau, int max_period) {
  check_square(tau);
  if (max_period > 8) throw std::invalid_argument("period bound is 8");
  const int n = static_cast<int>(tau.size());
  std::vector<std::vector<int>> out;
  std::vector<int> word;
  auto least_rotation = [](const std::vector<int>& w) {
    for (std::size_t r = 1; r < w.size(); ++r) {
      std::vector<int> rot(w.begin() + static_cast<long>(r), w.end());
      rot.insert(rot.end(), w.begin(), w.begin() + static_cast<long>(r));
      if (!(w < rot)) return false;  // a smaller or equal rotation: not least, or not primitive
    }
    return true;
  };
  for (int p = 1; p <= max_period; ++p) {
    std::vector<std::vector<int>> level;
    auto extend = [&](auto&& self) -> void {
      if (static_cast<int>(word.size()) == p) {
        if (tau[static_cast<std::size_t>(word.back())][static_cast<std::size_t>(word.front())] && least_rotation(word))
          level.push_back(word);
        return;
      }
      for (int a = 0; a < n; ++a) {
        if (!word.empty() && !tau[static_cast<std::size_t>(word.back())][static_cast<std::size_t>(a)]) continue;
        word.push_back(a);
        self(self);
        word.pop_back();
      }
    };
    extend(extend);
    out.insert(out.end(), level.begin(), level.end());
  }
  return out;
}

OracleResult fd_slope(const Table& plus_batches, const Table& minus_batches, double a) {
  if (plus_batches.size() != minus_batches.size() || plus_batches.empty())
    throw std::invalid_argument("paired batches of equal, nonzero length required");
  if (!(a > 0.0)) throw std::invalid_argument("step must be positive");
  const std::size_t b = plus_batches.size();
  Table slopes(b);
  for (std::size_t i = 0; i < b; ++i) slopes[i] = ((plus_batches[i] - minus_batches[i]) / 2.0) / a;
  const double mean = std::accumulate(slopes.begin(), slopes.end(), 0.0) / static_cast<double>(b);
  double var = 0.0;
  for (double s : slopes) var += (s - mean) * (s - mean);
  const double sigma = b > 1 ? std::sqrt(var / static_cast<double>(b - 1) / static_cast<double>(b)) : 0.0;
  OracleResult r;
  r.name = "fd_slope";
  r.values = {mean};
  r.sigma = sigma;
  r.method = "paired central difference over " + std::to_string(b) + " batches";
  r.exactness = Exactness::MonteCarlo;
  r.inconclusive = std::abs(mean) < sigma;
  return r;
}

Table constant_roof_resonances(double re_max, double im_min, double im_max) {
  Table out;
  if (re_max < 0.0 || im_min > im_max || im_min > 0.0 || im_max < 0.0) return out;
  const long k = static_cast<long>(std::floor(re_max / (2.0 * kPi)));
  for (long j = -k; j <= k; ++j) out.push_back(2.0 * kPi * static_cast<double>(j));
  return out;
}

}  // namespace hyperlr::oracle
