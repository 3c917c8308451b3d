#pragma once

#include <Eigen/Dense>
#include <complex>

#include "implab/errors.hpp"

namespace implab {

using Complex = std::complex<double>;
using Point = Eigen::Vector2cd;
using Matrix2 = Eigen::Matrix2cd;

inline constexpr double kPi = 3.14159265358979323846;
inline const Complex kI{0.0, 1.0};

// principal branch; refuses the cut instead of picking a side
inline Complex principal_log(Complex z) {
  if (z.imag() == 0.0 && z.real() <= 0.0) throw BranchCutError(z);
  return std::log(z);
}

inline Complex pow_eta(Complex z, Complex eta) { return std::exp(eta * principal_log(z)); }

// arctan through the log form, branch cut at {it : |t| >= 1}
inline Complex arctan_log(Complex z) {
  return principal_log((kI - z) / (kI + z)) / (2.0 * kI);
}

inline Point make_point(Complex x, Complex y) { return Point(x, y); }

// euclidean distance in C^2, used for every sup-norm residual
inline double dist(const Point& a, const Point& b) { return (a - b).norm(); }

}  // namespace implab
