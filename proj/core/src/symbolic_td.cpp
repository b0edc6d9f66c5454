#include "hyperlr/symbolic_td.hpp"

#include "hyperlr/parallel.hpp"
#include "hyperlr/statistics.hpp"

#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <map>
#include <ostream>
#include <random>

namespace hyperlr {

std::optional<int> check_mixing(const std::vector<std::vector<int>>& tau) {
  const std::size_t n = tau.size();
  if (n == 0) return std::nullopt;
  for (const auto& row : tau)
    if (row.size() != n) return std::nullopt;
  std::vector<std::vector<char>> power(n, std::vector<char>(n, 0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) power[i][j] = tau[i][j] != 0;
  const std::size_t limit = n * n;
  for (std::size_t k = 1; k <= limit; ++k) {
    bool positive = true;
    for (std::size_t i = 0; i < n && positive; ++i)
      for (std::size_t j = 0; j < n && positive; ++j) positive = power[i][j] != 0;
    if (positive) return static_cast<int>(k);
    std::vector<std::vector<char>> next(n, std::vector<char>(n, 0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t l = 0; l < n; ++l)
        if (power[i][l])
          for (std::size_t j = 0; j < n; ++j)
            if (tau[l][j]) next[i][j] = 1;
    power.swap(next);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

SftSystem::SftSystem(std::vector<std::vector<int>> tau, int memory) : tau_(std::move(tau)), memory_(memory) {
  const std::size_t n = tau_.size();
  if (n == 0) throw ValidationError("transition matrix is empty");
  for (const auto& row : tau_) {
    if (row.size() != n) throw ValidationError("transition matrix must be square");
    for (int v : row)
      if (v != 0 && v != 1) throw ValidationError("transition matrix entries must be 0 or 1");
  }
  if (memory_ < 1) throw ValidationError("memory must be >= 1");

  Word w;
  std::function<void()> extend = [&] {
    if (static_cast<int>(w.size()) == memory_) {
      words_.push_back(w);
      return;
    }
    for (std::size_t a = 0; a < n; ++a) {
      if (!w.empty() && !tau_[static_cast<std::size_t>(w.back())][a]) continue;
      w.push_back(static_cast<int>(a));
      extend();
      w.pop_back();
    }
  };
  extend();

  succ_.resize(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) {
    const Word& src = words_[i];
    for (std::size_t a = 0; a < n; ++a) {
      if (!tau_[static_cast<std::size_t>(src.back())][a]) continue;
      Word next(src.begin() + 1, src.end());
      next.push_back(static_cast<int>(a));
      succ_[i].push_back(word_index(next));
    }
  }
  roof_.assign(words_.size(), 1.0);
  potential_.assign(words_.size(), 0.0);
}

int SftSystem::word_index(const Word& w) const {
  const auto it = std::lower_bound(words_.begin(), words_.end(), w);
  if (it == words_.end() || *it != w) return -1;
  return static_cast<int>(it - words_.begin());
}

RealMatrix SftSystem::adjacency() const {
  const auto n = static_cast<Eigen::Index>(words_.size());
  RealMatrix A = RealMatrix::Zero(n, n);
  for (std::size_t i = 0; i < succ_.size(); ++i)
    for (int j : succ_[i]) A(static_cast<Eigen::Index>(i), j) = 1.0;
  return A;
}

void SftSystem::set_roof(std::vector<double> roof) {
  if (roof.size() != words_.size())
    throw ValidationError("roof table has " + std::to_string(roof.size()) + " entries, expected " +
                          std::to_string(words_.size()));
  roof_ = std::move(roof);
}

void SftSystem::set_potential(std::vector<double> potential) {
  if (potential.size() != words_.size())
    throw ValidationError("potential table has " + std::to_string(potential.size()) + " entries, expected " +
                          std::to_string(words_.size()));
  potential_ = std::move(potential);
}

double SftSystem::roof_min() const { return *std::min_element(roof_.begin(), roof_.end()); }

std::vector<double> SftSystem::tabulate(const std::function<double(const Word&)>& f) const {
  std::vector<double> t;
  t.reserve(words_.size());
  for (const auto& w : words_) t.push_back(f(w));
  return t;
}

void SftSystem::validate() const {
  if (!check_mixing(tau_)) throw ValidationError("transition matrix is not mixing");
  for (std::size_t i = 0; i < roof_.size(); ++i) {
    if (!std::isfinite(roof_[i]) || roof_[i] < psi_min)
      throw ValidationError("roof value " + std::to_string(roof_[i]) + " below psi_min " + std::to_string(psi_min));
    if (!std::isfinite(potential_[i])) throw ValidationError("potential value is not finite");
  }
}

SftSystem cat_map_sft() {
  // Edges of the graph with adjacency (2,1;1,1): 0->0 twice, 0->1, 1->0, 1->1.
  const std::array<int, 5> source{0, 0, 0, 1, 1};
  const std::array<int, 5> target{0, 0, 1, 0, 1};
  std::vector<std::vector<int>> tau(5, std::vector<int>(5, 0));
  for (std::size_t e = 0; e < 5; ++e)
    for (std::size_t f = 0; f < 5; ++f) tau[e][f] = target[e] == source[f] ? 1 : 0;
  return SftSystem(tau, 1);
}

// ---------------------------------------------------------------------------

RealMatrix transfer_matrix(const SftSystem& sft, const std::vector<double>& weight) {
  require(weight.size() == sft.word_count(), "transfer_matrix: one weight per word required");
  const auto n = static_cast<Eigen::Index>(sft.word_count());
  RealMatrix L = RealMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double e = std::exp(weight[static_cast<std::size_t>(i)]);
    for (int j : sft.successors(static_cast<int>(i))) L(i, j) = e;
  }
  return L;
}

namespace {

Eigen::VectorXd refine_vector(const RealMatrix& L, double lambda, Eigen::VectorXd v) {
  const auto n = L.rows();
  const double shift = lambda * (1.0 + 1e-10);
  const Eigen::PartialPivLU<RealMatrix> lu(L - shift * RealMatrix::Identity(n, n));
  for (int it = 0; it < 2; ++it) {
    Eigen::VectorXd w = lu.solve(v);
    if (!w.allFinite()) break;
    v = w / w.norm();
  }
  if (v.sum() < 0.0) v = -v;
  return v;
}

}  // namespace

PerronData perron(const RealMatrix& L) {
  const auto n = L.rows();
  PerronData d;
  if (n == 1) {
    d.eigenvalue = L(0, 0);
    d.right = Eigen::VectorXd::Ones(1);
    d.left = Eigen::VectorXd::Ones(1);
    return d;
  }
  Eigen::EigenSolver<RealMatrix> es(L);
  const auto& vals = es.eigenvalues();
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < n; ++i)
    if (vals[i].real() > vals[best].real()) best = i;
  d.eigenvalue = vals[best].real();
  for (Eigen::Index i = 0; i < n; ++i)
    if (i != best) d.second_modulus = std::max(d.second_modulus, std::abs(vals[i]));
  Eigen::VectorXd r = es.eigenvectors().col(best).real();
  d.right = refine_vector(L, d.eigenvalue, r / r.norm());

  Eigen::EigenSolver<RealMatrix> et(L.transpose());
  const auto& tv = et.eigenvalues();
  Eigen::Index lb = 0;
  for (Eigen::Index i = 1; i < n; ++i)
    if (std::abs(tv[i] - d.eigenvalue) < std::abs(tv[lb] - d.eigenvalue)) lb = i;
  Eigen::VectorXd l = et.eigenvectors().col(lb).real();
  d.left = refine_vector(L.transpose(), d.eigenvalue, l / l.norm());
  return d;
}

double pressure(const SftSystem& sft, const std::vector<double>& weight) {
  if (!check_mixing(sft.transitions())) throw ValidationError("pressure: transition matrix is not mixing");
  const PerronData d = perron(transfer_matrix(sft, weight));
  if (!(d.eigenvalue > 0.0)) throw NumericalError("pressure: Perron eigenvalue is not positive");
  return std::log(d.eigenvalue);
}

namespace {

std::vector<double> shifted(const std::vector<double>& phi, const std::vector<double>& psi, double c) {
  std::vector<double> w(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) w[i] = phi[i] - c * psi[i];
  return w;
}

}  // namespace

double bowen_root(const SftSystem& sft, const std::vector<double>& phi, const std::vector<double>& psi) {
  require(phi.size() == sft.word_count() && psi.size() == sft.word_count(), "bowen_root: table size mismatch");
  const double pmin = *std::min_element(psi.begin(), psi.end());
  const double pmax = *std::max_element(psi.begin(), psi.end());
  if (!(pmin > 0.0)) throw ValidationError("bowen_root: roof must be positive");
  auto P = [&](double c) { return pressure(sft, shifted(phi, psi, c)); };
  const double p0 = P(0.0);
  double lo = std::min(p0 / pmin, p0 / pmax) - 1.0;
  double hi = std::max(p0 / pmin, p0 / pmax) + 1.0;
  double flo = P(lo);
  double fhi = P(hi);
  if (!(flo > 0.0 && fhi < 0.0))
    throw NumericalError("bowen_root: no sign change on [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  while (hi - lo > 1e-6) {
    const double mid = 0.5 * (lo + hi);
    const double fm = P(mid);
    if (fm > 0.0) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
      fhi = fm;
    }
  }
  // Secant inside the bracket.
  double a = lo, fa = flo, b = hi, fb = fhi;
  double c = b;
  for (int it = 0; it < 100; ++it) {
    c = b - fb * (b - a) / (fb - fa);
    if (!(c > lo && c < hi)) c = 0.5 * (lo + hi);
    const double fc = P(c);
    if (std::abs(fc) < 1e-12) return c;
    if (fc > 0.0) {
      lo = c;
    } else {
      hi = c;
    }
    a = b;
    fa = fb;
    b = c;
    fb = fc;
    if (hi - lo < 1e-15 * std::max(1.0, std::abs(c))) break;
  }
  if (std::abs(P(c)) < 1e-11) return c;
  throw NumericalError("bowen_root: refinement did not reach |P| < 1e-12");
}

EquilibriumState equilibrium_state(const SftSystem& sft, const std::vector<double>& phi,
                                   const std::vector<double>& psi, double c) {
  require(phi.size() == sft.word_count() && psi.size() == sft.word_count(), "equilibrium_state: table size mismatch");
  if (!check_mixing(sft.transitions())) throw ValidationError("equilibrium_state: transition matrix is not mixing");
  const RealMatrix L = transfer_matrix(sft, shifted(phi, psi, c));
  const PerronData d = perron(L);
  if (d.second_modulus > d.eigenvalue * (1.0 - 1e-12))
    throw NumericalError("equilibrium_state: leading eigenvalue is not simple");
  for (Eigen::Index i = 0; i < d.right.size(); ++i)
    if (!(d.right[i] > 0.0) || !(d.left[i] > 0.0))
      throw NumericalError("equilibrium_state: Perron vectors are not strictly positive");
  EquilibriumState s;
  s.c = c;
  s.pressure = std::log(d.eigenvalue);
  s.eigenfunction = d.right;
  const auto n = L.rows();
  s.weights.resize(static_cast<std::size_t>(n));
  double z = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) z += d.left[i] * d.right[i];
  for (Eigen::Index i = 0; i < n; ++i) s.weights[static_cast<std::size_t>(i)] = d.left[i] * d.right[i] / z;
  s.kernel = RealMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (L(i, j) != 0.0) s.kernel(i, j) = L(i, j) * d.right[j] / (d.eigenvalue * d.right[i]);
  for (std::size_t i = 0; i < s.weights.size(); ++i) s.mean_roof += s.weights[i] * psi[i];
  Eigen::VectorXd mu = Eigen::Map<const Eigen::VectorXd>(s.weights.data(), n);
  const Eigen::VectorXd pushed = s.kernel.transpose() * mu;
  s.invariance_residual = (pushed - mu).cwiseAbs().maxCoeff();
  return s;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::array<double, 5> kGaussNodes{-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                            0.9061798459386640};
constexpr std::array<double, 5> kGaussWeights{0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                              0.4786286704993665, 0.2369268850561891};

double panel_step(const SftSystem& sft, const QuadratureOptions& q) {
  const double limit = sft.roof_min() / 10.0;
  const double step = q.step > 0.0 ? q.step : limit;
  if (step > limit * (1.0 + 1e-12))
    throw ValidationError("quadrature step " + std::to_string(step) + " exceeds psi_min/10 = " +
                          std::to_string(limit));
  return step;
}

// Both halves of [0, psi) are summed separately so that symmetric integrands split exactly.
double roof_integral(const SuspensionFunction& A, int w, double psi, double step) {
  auto panels = static_cast<long>(std::ceil(psi / step - 1e-12));
  if (panels < 2) panels = 2;
  if (panels % 2 != 0) ++panels;
  const double h = psi / static_cast<double>(panels);
  auto half_sum = [&](long from, long to) {
    double s = 0.0;
    for (long k = from; k < to; ++k) {
      const double mid = (static_cast<double>(k) + 0.5) * h;
      double ps = 0.0;
      for (std::size_t g = 0; g < 5; ++g) ps += kGaussWeights[g] * A(w, mid + 0.5 * h * kGaussNodes[g]);
      s += 0.5 * h * ps;
    }
    return s;
  };
  return half_sum(0, panels / 2) + half_sum(panels / 2, panels);
}

}  // namespace

std::vector<double> roof_integrals(const SftSystem& sft, const SuspensionFunction& A, const QuadratureOptions& q) {
  const double step = panel_step(sft, q);
  std::vector<double> out(sft.word_count());
  for (std::size_t w = 0; w < out.size(); ++w) out[w] = roof_integral(A, static_cast<int>(w), sft.roof()[w], step);
  return out;
}

double suspension_average(const SftSystem& sft, const EquilibriumState& state, const SuspensionFunction& A,
                          const QuadratureOptions& q) {
  require(state.weights.size() == sft.word_count(), "suspension_average: state does not match the system");
  const auto num = roof_integrals(sft, A, q);
  const auto den = roof_integrals(sft, [](int, double) { return 1.0; }, q);
  double a = 0.0;
  double b = 0.0;
  for (std::size_t w = 0; w < num.size(); ++w) {
    a += state.weights[w] * num[w];
    b += state.weights[w] * den[w];
  }
  return a / b;
}

// ---------------------------------------------------------------------------

namespace {

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

int draw_index(const std::vector<double>& cdf, double u) {
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u * cdf.back());
  return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1));
}

}  // namespace

FlowCorrelation flow_correlation(const SftSystem& sft, const EquilibriumState& state, const SuspensionFunction& B,
                                 const SuspensionFunction& Bp, const std::vector<double>& t_grid,
                                 const CorrelationOptions& options) {
  require(!t_grid.empty(), "flow_correlation: empty time grid");
  require(options.n_samples >= 2, "flow_correlation: need samples");
  const double t_max = *std::max_element(t_grid.begin(), t_grid.end());
  require(*std::min_element(t_grid.begin(), t_grid.end()) >= 0.0, "flow_correlation: times must be >= 0");
  const double pmin = sft.roof_min();
  int n_ext = options.n_ext;
  if (n_ext <= 0) n_ext = static_cast<int>(std::ceil(t_max / pmin)) + 2;
  if (t_max > n_ext * pmin)
    throw ValidationError("flow_correlation: t_max " + std::to_string(t_max) + " exceeds n_ext*psi_min = " +
                          std::to_string(n_ext * pmin));

  const std::size_t W = sft.word_count();
  std::vector<double> start_cdf(W);
  double acc = 0.0;
  for (std::size_t w = 0; w < W; ++w) {
    acc += state.weights[w] * sft.roof()[w];
    start_cdf[w] = acc;
  }
  std::vector<std::vector<double>> row_cdf(W);
  std::vector<std::vector<int>> row_target(W);
  for (std::size_t w = 0; w < W; ++w) {
    double s = 0.0;
    for (int j : sft.successors(static_cast<int>(w))) {
      s += state.kernel(static_cast<Eigen::Index>(w), j);
      row_cdf[w].push_back(s);
      row_target[w].push_back(j);
    }
  }

  std::vector<std::size_t> order(t_grid.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return t_grid[a] < t_grid[b]; });

  const std::size_t nt = t_grid.size();
  const auto nb = static_cast<std::size_t>(std::min(kBatches, options.n_samples));
  const auto N = static_cast<std::size_t>(options.n_samples);
  struct Sums {
    std::vector<double> prod, b;
    double bp = 0.0;
    std::size_t count = 0;
  };
  std::vector<Sums> batch(nb);
  parallel_for(nb, [&](std::size_t k) {
    Sums& s = batch[k];
    s.prod.assign(nt, 0.0);
    s.b.assign(nt, 0.0);
    const std::size_t lo = k * N / nb;
    const std::size_t hi = (k + 1) * N / nb;
    for (std::size_t j = lo; j < hi; ++j) {
      std::mt19937_64 rng(j * 0x9E3779B97F4A7C15ULL + options.seed);
      int w = draw_index(start_cdf, unit(rng));
      const double s0 = unit(rng) * sft.roof()[static_cast<std::size_t>(w)];
      const double bp = Bp(w, s0);
      s.bp += bp;
      double pos = s0;
      double base = 0.0;  // time already consumed by completed returns
      for (std::size_t oi : order) {
        pos = s0 + t_grid[oi] - base;
        while (pos >= sft.roof()[static_cast<std::size_t>(w)]) {
          const double r = sft.roof()[static_cast<std::size_t>(w)];
          pos -= r;
          base += r;
          const auto& cdf = row_cdf[static_cast<std::size_t>(w)];
          w = row_target[static_cast<std::size_t>(w)][static_cast<std::size_t>(draw_index(cdf, unit(rng)))];
        }
        const double bv = B(w, pos);
        s.prod[oi] += bv * bp;
        s.b[oi] += bv;
      }
      ++s.count;
    }
  });

  FlowCorrelation out;
  out.t = t_grid;
  out.values.resize(nt);
  out.std_errors.resize(nt);
  for (std::size_t i = 0; i < nt; ++i) {
    double prod = 0.0, b = 0.0, bp = 0.0, n = 0.0;
    std::vector<double> per_batch;
    for (const auto& s : batch) {
      prod += s.prod[i];
      b += s.b[i];
      bp += s.bp;
      n += static_cast<double>(s.count);
      const double c = static_cast<double>(s.count);
      per_batch.push_back(s.prod[i] / c - (s.b[i] / c) * (s.bp / c));
    }
    out.values[i] = prod / n - (b / n) * (bp / n);
    out.std_errors[i] = mean_of_batches(per_batch).std_error;
  }
  return out;
}

// ---------------------------------------------------------------------------

ComplexMatrix twisted_matrix(const SftSystem& sft, const std::vector<double>& phi, const std::vector<double>& psi,
                             double c, std::complex<double> omega) {
  require(phi.size() == sft.word_count() && psi.size() == sft.word_count(), "twisted_matrix: table size mismatch");
  const auto n = static_cast<Eigen::Index>(sft.word_count());
  ComplexMatrix L = ComplexMatrix::Zero(n, n);
  const std::complex<double> I(0.0, 1.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const std::complex<double> e = std::exp(phi[k] - c * psi[k] - I * omega * psi[k]);
    for (int j : sft.successors(static_cast<int>(i))) L(i, j) = e;
  }
  return L;
}

BranchError::BranchError(std::complex<double> omega, double overlap)
    : NumericalError("eigenvalue branch ambiguous at omega=(" + std::to_string(omega.real()) + ", " +
                     std::to_string(omega.imag()) + "): overlap " + std::to_string(overlap)),
      omega_(omega) {}

namespace {

double overlap(const ComplexVector& a, const ComplexVector& b) {
  return std::abs(a.dot(b)) / (a.norm() * b.norm());
}

struct EigenSystem {
  ComplexVector values;
  ComplexMatrix vectors;
};

EigenSystem eigen_system(const ComplexMatrix& L) {
  Eigen::ComplexEigenSolver<ComplexMatrix> ces(L);
  return {ces.eigenvalues(), ces.eigenvectors()};
}

// Picks the eigenpair whose vector best overlaps `prev`.
EigenBranch select(const EigenSystem& es, const ComplexVector& prev, std::complex<double> omega, double* best_overlap) {
  Eigen::Index best = 0;
  double bo = -1.0;
  for (Eigen::Index i = 0; i < es.values.size(); ++i) {
    const double o = overlap(prev, es.vectors.col(i));
    if (o > bo) {
      bo = o;
      best = i;
    }
  }
  if (best_overlap) *best_overlap = bo;
  if (bo < 0.9) throw BranchError(omega, bo);
  ComplexVector v = es.vectors.col(best);
  v /= v.norm();
  return {es.values[best], v};
}

EigenBranch anchor(const SftSystem& sft, const std::vector<double>& phi, const std::vector<double>& psi, double c) {
  const PerronData d = perron(transfer_matrix(sft, shifted(phi, psi, c)));
  ComplexVector v = d.right.cast<std::complex<double>>();
  v /= v.norm();
  return {d.eigenvalue, v};
}

}  // namespace

EigenBranch leading_eigenvalue(const SftSystem& sft, const std::vector<double>& phi, const std::vector<double>& psi,
                               double c, std::complex<double> omega, double max_step) {
  require(max_step > 0.0, "leading_eigenvalue: step must be positive");
  EigenBranch b = anchor(sft, phi, psi, c);
  if (omega == std::complex<double>(0.0, 0.0)) {
    const auto es = eigen_system(twisted_matrix(sft, phi, psi, c, 0.0));
    return select(es, b.right, 0.0, nullptr);
  }
  const int steps = std::max(1, static_cast<int>(std::ceil(std::abs(omega) / max_step)));
  for (int k = 1; k <= steps; ++k) {
    const std::complex<double> w = omega * (static_cast<double>(k) / steps);
    const auto es = eigen_system(twisted_matrix(sft, phi, psi, c, w));
    b = select(es, b.right, w, nullptr);
  }
  return b;
}

std::complex<double> eigenvalue_derivative(const SftSystem& sft, const std::vector<double>& phi,
                                           const std::vector<double>& psi, double c, std::complex<double> omega,
                                           const EigenBranch& branch) {
  const ComplexMatrix L = twisted_matrix(sft, phi, psi, c, omega);
  const auto es = eigen_system(L.transpose());
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < es.values.size(); ++i)
    if (std::abs(es.values[i] - branch.lambda) < std::abs(es.values[best] - branch.lambda)) best = i;
  const ComplexVector l = es.vectors.col(best);
  const std::complex<double> I(0.0, 1.0);
  ComplexMatrix dL = L;
  for (Eigen::Index i = 0; i < L.rows(); ++i) dL.row(i) *= -I * psi[static_cast<std::size_t>(i)];
  const std::complex<double> num = (l.transpose() * dL * branch.right)(0, 0);
  const std::complex<double> den = (l.transpose() * branch.right)(0, 0);
  return num / den;
}

Resonance refine_root(const SftSystem& sft, const std::vector<double>& phi, const std::vector<double>& psi, double c,
                      std::complex<double> start, EigenBranch branch, double tol) {
  Resonance r;
  std::complex<double> omega = start;
  for (int it = 1; it <= 60; ++it) {
    const auto es = eigen_system(twisted_matrix(sft, phi, psi, c, omega));
    branch = select(es, branch.right, omega, nullptr);
    const std::complex<double> d = eigenvalue_derivative(sft, phi, psi, c, omega, branch);
    r.iterations = it;
    if (std::abs(d) == 0.0) break;
    const std::complex<double> step = (1.0 - branch.lambda) / d;
    omega += step;
    if (std::abs(step) < tol) {
      const auto es2 = eigen_system(twisted_matrix(sft, phi, psi, c, omega));
      branch = select(es2, branch.right, omega, nullptr);
      r.refined = std::abs(1.0 - branch.lambda) < 1e3 * tol;
      break;
    }
  }
  r.omega = omega;
  r.lambda = branch.lambda;
  r.derivative = eigenvalue_derivative(sft, phi, psi, c, omega, branch);
  return r;
}

SpectralScan resonance_scan(const SftSystem& sft, const std::vector<double>& phi, const std::vector<double>& psi,
                            double c, const ScanStrip& strip) {
  require(strip.re_max >= 0.0 && strip.re_step > 0.0 && strip.im_step > 0.0, "resonance_scan: bad strip");
  require(strip.im_min <= 0.0 && strip.im_max >= 0.0, "resonance_scan: strip must contain the real axis");
  SpectralScan scan;
  const long nre = static_cast<long>(std::floor(strip.re_max / strip.re_step + 1e-9));
  for (long k = -nre; k <= nre; ++k) scan.re_grid.push_back(static_cast<double>(k) * strip.re_step);
  const long jmin = static_cast<long>(std::ceil(strip.im_min / strip.im_step - 1e-9));
  const long jmax = static_cast<long>(std::floor(strip.im_max / strip.im_step + 1e-9));
  for (long j = jmin; j <= jmax; ++j) scan.im_grid.push_back(static_cast<double>(j) * strip.im_step);
  const std::size_t NR = scan.re_grid.size();
  const std::size_t NI = scan.im_grid.size();
  const std::size_t r0 = static_cast<std::size_t>(nre);
  const std::size_t i0 = static_cast<std::size_t>(-jmin);

  std::vector<EigenSystem> systems(NR * NI);
  parallel_for(NR * NI, [&](std::size_t idx) {
    const std::size_t i = idx / NR;
    const std::size_t k = idx % NR;
    systems[idx] = eigen_system(twisted_matrix(sft, phi, psi, c, {scan.re_grid[k], scan.im_grid[i]}));
  });

  // Stitch: real axis outward from 0, then each column away from the axis.
  std::vector<EigenBranch> branch(NR * NI);
  auto at = [&](std::size_t i, std::size_t k) { return i * NR + k; };
  auto pick = [&](std::size_t i, std::size_t k, const ComplexVector& prev) {
    double o = 1.0;
    branch[at(i, k)] = select(systems[at(i, k)], prev, {scan.re_grid[k], scan.im_grid[i]}, &o);
    scan.min_overlap = std::min(scan.min_overlap, o);
  };
  pick(i0, r0, anchor(sft, phi, psi, c).right);
  for (std::size_t k = r0 + 1; k < NR; ++k) pick(i0, k, branch[at(i0, k - 1)].right);
  for (std::size_t k = r0; k-- > 0;) pick(i0, k, branch[at(i0, k + 1)].right);
  for (std::size_t k = 0; k < NR; ++k) {
    for (std::size_t i = i0 + 1; i < NI; ++i) pick(i, k, branch[at(i - 1, k)].right);
    for (std::size_t i = i0; i-- > 0;) pick(i, k, branch[at(i + 1, k)].right);
  }
  scan.lambda.assign(NI, std::vector<std::complex<double>>(NR));
  for (std::size_t i = 0; i < NI; ++i)
    for (std::size_t k = 0; k < NR; ++k) scan.lambda[i][k] = branch[at(i, k)].lambda;

  // Local minima of |1 - lambda| seed Newton.
  auto gap = [&](std::size_t i, std::size_t k) { return std::abs(1.0 - scan.lambda[i][k]); };
  const double seed_threshold = 0.5;
  for (std::size_t i = 0; i < NI; ++i) {
    for (std::size_t k = 0; k < NR; ++k) {
      const double g = gap(i, k);
      if (g > seed_threshold) continue;
      bool minimum = true;
      for (int di = -1; di <= 1 && minimum; ++di)
        for (int dk = -1; dk <= 1 && minimum; ++dk) {
          if (di == 0 && dk == 0) continue;
          const long ii = static_cast<long>(i) + di;
          const long kk = static_cast<long>(k) + dk;
          if (ii < 0 || kk < 0 || ii >= static_cast<long>(NI) || kk >= static_cast<long>(NR)) continue;
          const double other = gap(static_cast<std::size_t>(ii), static_cast<std::size_t>(kk));
          // Ties broken toward the lower index so that plateaus seed once.
          if (other < g || (other == g && (di < 0 || (di == 0 && dk < 0)))) minimum = false;
        }
      if (!minimum) continue;
      Resonance r;
      try {
        r = refine_root(sft, phi, psi, c, {scan.re_grid[k], scan.im_grid[i]}, branch[at(i, k)], strip.newton_tol);
      } catch (const BranchError&) {
        r.omega = {scan.re_grid[k], scan.im_grid[i]};
        r.lambda = scan.lambda[i][k];
        r.refined = false;
      }
      const double slack = std::max(strip.re_step, strip.im_step);
      if (std::abs(r.omega.real()) > strip.re_max + slack || r.omega.imag() < strip.im_min - slack ||
          r.omega.imag() > strip.im_max + slack)
        continue;
      bool duplicate = false;
      for (const auto& other : scan.roots)
        if (std::abs(other.omega - r.omega) < 1e-6) duplicate = true;
      if (!duplicate) scan.roots.push_back(r);
    }
  }
  std::sort(scan.roots.begin(), scan.roots.end(), [](const Resonance& a, const Resonance& b) {
    if (a.omega.real() != b.omega.real()) return a.omega.real() < b.omega.real();
    return a.omega.imag() < b.omega.imag();
  });
  return scan;
}

double cycle_average(const SftSystem& sft, const std::vector<double>& table, const Word& cycle) {
  require(!cycle.empty(), "cycle_average: empty cycle");
  const std::size_t p = cycle.size();
  const auto m = static_cast<std::size_t>(sft.memory());
  double s = 0.0;
  for (std::size_t i = 0; i < p; ++i) {
    const auto a = static_cast<std::size_t>(cycle[i]);
    const auto b = static_cast<std::size_t>(cycle[(i + 1) % p]);
    require(sft.transitions()[a][b] == 1, "cycle_average: cycle is not admissible");
    Word w(m);
    for (std::size_t j = 0; j < m; ++j) w[j] = cycle[(i + j) % p];
    const int idx = sft.word_index(w);
    require(idx >= 0, "cycle_average: cycle word is not admissible");
    s += table[static_cast<std::size_t>(idx)];
  }
  return s / static_cast<double>(p);
}

void write_scan_csv(std::ostream& os, const SpectralScan& scan) {
  os << "re_omega,im_omega,re_lambda,im_lambda,abs_one_minus_lambda\n";
  os.precision(17);
  for (std::size_t i = 0; i < scan.im_grid.size(); ++i)
    for (std::size_t k = 0; k < scan.re_grid.size(); ++k) {
      const auto l = scan.lambda[i][k];
      os << scan.re_grid[k] << ',' << scan.im_grid[i] << ',' << l.real() << ',' << l.imag() << ','
         << std::abs(1.0 - l) << '\n';
    }
}

}  // namespace hyperlr
