#pragma once

#include <complex>
#include <numbers>

#include <Eigen/Dense>

namespace flexsense {

using cd = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr cd kJ{0.0, 1.0};

// Angles are radians internally; degrees only cross the external interfaces.
constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

}  // namespace flexsense
