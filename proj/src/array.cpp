#include "flexsense/array.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "flexsense/errors.hpp"

namespace flexsense {

namespace {

constexpr double kLagTolerance = 1e-9;

SteeringSet phase_ramp_set(const RVector& positions, double theta) {
  const double s = std::sin(theta);
  const double c = std::cos(theta);
  const Eigen::Index n = positions.size();

  SteeringSet out{CVector(n), CVector(n), CVector(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = positions[i];
    const cd a = std::polar(1.0, kPi * d * s);
    out.a[i] = a;
    out.da[i] = kJ * kPi * c * d * a;
    out.dda[i] = -(kJ * kPi * s * d + kPi * kPi * c * c * d * d) * a;
  }
  return out;
}

}  // namespace

ArrayGeometry build_geometry(int n_ports, std::vector<int> omega, double spacing) {
  if (n_ports < 1) {
    throw Error(ErrorKind::InvalidGeometry, "n_ports must be >= 1, got " + std::to_string(n_ports));
  }
  if (omega.empty()) {
    throw Error(ErrorKind::InvalidGeometry, "activated index set is empty");
  }
  if (!(spacing > 0.0) || !std::isfinite(spacing)) {
    throw Error(ErrorKind::InvalidGeometry, "spacing must be positive");
  }
  std::sort(omega.begin(), omega.end());
  for (std::size_t i = 0; i < omega.size(); ++i) {
    if (omega[i] < 1 || omega[i] > n_ports) {
      throw Error(ErrorKind::InvalidGeometry,
                  "port index " + std::to_string(omega[i]) + " outside [1, " +
                      std::to_string(n_ports) + "]");
    }
    if (i > 0 && omega[i] == omega[i - 1]) {
      throw Error(ErrorKind::InvalidGeometry, "duplicate port index " + std::to_string(omega[i]));
    }
  }

  ArrayGeometry g;
  g.n_ports = n_ports;
  g.positions = RVector::LinSpaced(n_ports, 0.0, static_cast<double>(n_ports - 1)) * spacing;
  g.omega = std::move(omega);
  g.selected_positions.resize(static_cast<Eigen::Index>(g.omega.size()));
  for (std::size_t i = 0; i < g.omega.size(); ++i) {
    g.selected_positions[static_cast<Eigen::Index>(i)] = g.positions[g.omega[i] - 1];
  }
  return g;
}

ArrayGeometry block_geometry(int n_ports, int first, int count, double spacing) {
  std::vector<int> omega;
  for (int i = 0; i < count; ++i) omega.push_back(first + i);
  return build_geometry(n_ports, std::move(omega), spacing);
}

CVector steering_vector(const RVector& positions, double theta) {
  const double s = std::sin(theta);
  CVector a(positions.size());
  for (Eigen::Index i = 0; i < positions.size(); ++i) a[i] = std::polar(1.0, kPi * positions[i] * s);
  return a;
}

CMatrix steering_matrix(const RVector& positions, const std::vector<double>& thetas) {
  CMatrix A(positions.size(), static_cast<Eigen::Index>(thetas.size()));
  for (std::size_t k = 0; k < thetas.size(); ++k) {
    A.col(static_cast<Eigen::Index>(k)) = steering_vector(positions, thetas[k]);
  }
  return A;
}

SteeringSet steering_set(const RVector& positions, double theta) {
  return phase_ramp_set(positions, theta);
}

std::vector<double> unique_sorted(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) {
    if (out.empty() || std::abs(v - out.back()) > kLagTolerance) out.push_back(v);
  }
  return out;
}

VirtualGeometry virtual_geometry(const ArrayGeometry& geometry) {
  const RVector& d = geometry.selected_positions;
  const Eigen::Index m = d.size();

  VirtualGeometry vg;
  vg.virtual_positions.resize(m * m);
  for (Eigen::Index m1 = 0; m1 < m; ++m1) {
    for (Eigen::Index m2 = 0; m2 < m; ++m2) vg.virtual_positions[m1 * m + m2] = d[m1] - d[m2];
  }
  vg.diff_set = unique_sorted({vg.virtual_positions.data(), vg.virtual_positions.data() + m * m});
  vg.dof = static_cast<int>(vg.diff_set.size()) - 1;
  return vg;
}

std::vector<double> sum_coarray(const ArrayGeometry& geometry) {
  const RVector& d = geometry.selected_positions;
  std::vector<double> sums;
  sums.reserve(static_cast<std::size_t>(d.size() * d.size()));
  for (Eigen::Index m1 = 0; m1 < d.size(); ++m1) {
    for (Eigen::Index m2 = 0; m2 < d.size(); ++m2) sums.push_back(d[m1] + d[m2]);
  }
  return unique_sorted(std::move(sums));
}

SteeringSet virtual_steering_set(const VirtualGeometry& vg, double theta) {
  return phase_ramp_set(vg.virtual_positions, theta);
}

}  // namespace flexsense
