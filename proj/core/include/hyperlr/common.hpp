#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace hyperlr {

/// Largest phase-space dimension supported by the fixed-capacity vector types.
inline constexpr int kMaxDim = 6;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;
/// Covector stored as a column.
using Covec = Vec;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Base of all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Input failed validation (configuration, tables, shapes).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class IntegrationDiverged : public Error {
 public:
  IntegrationDiverged(double time, const std::string& what)
      : Error("integration diverged at t=" + std::to_string(time) + ": " + what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// Stable/unstable directions too close to each other (or to the flow).
class ConditioningError : public Error {
 public:
  ConditioningError(double min_angle, const std::string& what)
      : Error(what + " (min angle " + std::to_string(min_angle) + " rad)"), min_angle_(min_angle) {}
  double min_angle() const noexcept { return min_angle_; }

 private:
  double min_angle_;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Numerical procedure failed to converge or to bracket a root.
class NumericalError : public Error {
 public:
  using Error::Error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ContractViolation(what);
}

inline Vec zeros(int n) { return Vec::Zero(n); }

/// Angle between two lines spanned by nonzero vectors, in [0, pi/2].
inline double line_angle(const Vec& a, const Vec& b) {
  // acos loses precision near 1; measure the rejection of b from a instead.
  const double na = a.norm();
  const double nb = b.norm();
  const Vec ua = a / na;
  const Vec ub = b / nb;
  const double c = std::abs(ua.dot(ub));
  const double s = (ub - ua.dot(ub) * ua).norm();
  return std::atan2(s, c);
}

}  // namespace hyperlr
