#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace hyperlr {

inline constexpr int kBatches = 20;

/// Mean with its batch-means standard error.
struct MeanError {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Splits `values` (in order) into `batches` contiguous groups of near-equal size.
/// With fewer values than batches each value is its own batch.
inline MeanError batch_means(const std::vector<double>& values, int batches = kBatches) {
  MeanError out;
  const std::size_t n = values.size();
  if (n == 0) return out;
  double total = 0.0;
  for (double v : values) total += v;
  out.mean = total / static_cast<double>(n);
  const std::size_t b = std::min<std::size_t>(static_cast<std::size_t>(batches), n);
  if (b < 2) return out;
  std::vector<double> means(b, 0.0);
  for (std::size_t k = 0; k < b; ++k) {
    const std::size_t lo = k * n / b;
    const std::size_t hi = (k + 1) * n / b;
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += values[i];
    means[k] = s / static_cast<double>(hi - lo);
  }
  double mm = 0.0;
  for (double m : means) mm += m;
  mm /= static_cast<double>(b);
  double var = 0.0;
  for (double m : means) var += (m - mm) * (m - mm);
  var /= static_cast<double>(b - 1);
  out.std_error = std::sqrt(var / static_cast<double>(b));
  return out;
}

/// Mean and standard error of already-formed batch values (equal weights).
inline MeanError mean_of_batches(const std::vector<double>& batch_values) {
  MeanError out;
  const std::size_t b = batch_values.size();
  if (b == 0) return out;
  double s = 0.0;
  for (double v : batch_values) s += v;
  out.mean = s / static_cast<double>(b);
  if (b < 2) return out;
  double var = 0.0;
  for (double v : batch_values) var += (v - out.mean) * (v - out.mean);
  var /= static_cast<double>(b - 1);
  out.std_error = std::sqrt(var / static_cast<double>(b));
  return out;
}

/// Lagrange weights for evaluating at x = 0 the polynomial through (xs[i], .).
inline std::vector<double> extrapolation_weights(const std::vector<double>& xs) {
  std::vector<double> w(xs.size(), 1.0);
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < xs.size(); ++j)
      if (i != j) w[i] *= xs[j] / (xs[j] - xs[i]);
  return w;
}

inline double combined_sigma(double a, double b) { return std::sqrt(a * a + b * b); }

/// |x - y| within k combined standard errors.
inline bool agrees(double x, double sx, double y, double sy, double k = 3.0) {
  return std::abs(x - y) <= k * combined_sigma(sx, sy);
}

}  // namespace hyperlr
