#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace aspace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;

/// Raised when a caller hands over vectors of the wrong length.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require_size(const Eigen::Ref<const Vec>& v, Eigen::Index n,
                         const char* what) {
  if (v.size() != n) {
    throw DimensionError(std::string(what) + ": expected length " +
                         std::to_string(n) + ", got " +
                         std::to_string(v.size()));
  }
}

inline bool all_finite(const Eigen::Ref<const Vec>& v) {
  return v.allFinite();
}

/// Elementwise clamp of v into [lo, hi].
inline constexpr double square(double x) { return x * x; }

inline Vec clamp(const Vec& v, const Vec& lo, const Vec& hi) {
  return v.cwiseMax(lo).cwiseMin(hi);
}

inline Vec clamp_symmetric(const Vec& v, const Vec& bound) {
  return v.cwiseMax(-bound).cwiseMin(bound);
}

inline Mat3 skew(const Vec3& w) {
  Mat3 s;
  s << 0.0, -w.z(), w.y(), w.z(), 0.0, -w.x(), -w.y(), w.x(), 0.0;
  return s;
}

constexpr double kPi = 3.14159265358979323846;

/// Simulation/controller rate and policy rate (Hz).
inline constexpr double kControlRate = 120.0;
inline constexpr double kPolicyRate = 60.0;

}  // namespace aspace
