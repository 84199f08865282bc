#pragma once

#include <vector>

#include "flexsense/types.hpp"

namespace flexsense {

/// Port layout of a flexible-antenna array and its activated subset.
///
/// Positions are in half-wavelength units, so a port at position d sees the
/// phase pi * d * sin(theta). Port 1 sits at position 0 and is the phase
/// reference for every subset, activated or not.
struct ArrayGeometry {
  int n_ports = 0;
  RVector positions;             // length N
  std::vector<int> omega;        // 1-based, strictly increasing, size M
  RVector selected_positions;    // positions[omega[i] - 1]

  int n_active() const { return static_cast<int>(omega.size()); }
};

/// Difference co-array of the activated subset.
struct VirtualGeometry {
  RVector virtual_positions;     // length M^2, entry (m1-1)M + m2 holds d_m1 - d_m2
  std::vector<double> diff_set;  // sorted unique lags
  int dof = 0;                   // |diff_set| - 1
};

/// A vector together with its first and second derivatives in theta.
struct SteeringSet {
  CVector a;
  CVector da;
  CVector dda;
};

/// Throws Error(InvalidGeometry) for empty, duplicate or out-of-range indices.
/// Indices are 1-based and sorted on the way in.
ArrayGeometry build_geometry(int n_ports, std::vector<int> omega, double spacing = 1.0);

/// Consecutive-block geometry {first, ..., first + count - 1} used to tile ports.
ArrayGeometry block_geometry(int n_ports, int first, int count, double spacing = 1.0);

CVector steering_vector(const RVector& positions, double theta);
CMatrix steering_matrix(const RVector& positions, const std::vector<double>& thetas);

/// a = exp(j pi d sin theta) with analytic derivatives
///   da  = j pi cos(theta) D a
///   dda = -(j pi sin(theta) D + pi^2 cos^2(theta) D^2) a
SteeringSet steering_set(const RVector& positions, double theta);

VirtualGeometry virtual_geometry(const ArrayGeometry& geometry);

/// Sorted unique sums d_m1 + d_m2 over the activated ports.
std::vector<double> sum_coarray(const ArrayGeometry& geometry);

/// Virtual steering vector b = a (x) conj(a), evaluated directly on the
/// co-array lags, with derivatives.
SteeringSet virtual_steering_set(const VirtualGeometry& vg, double theta);

/// Sorted, deduplicated copy. Values closer than 1e-9 collapse onto the first.
std::vector<double> unique_sorted(std::vector<double> values);

}  // namespace flexsense
