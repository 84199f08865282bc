#pragma once

#include "flexsense/array.hpp"
#include "flexsense/search.hpp"
#include "flexsense/signals.hpp"
#include "flexsense/subspace_soc.hpp"
#include "flexsense/types.hpp"

namespace flexsense {

/// Sample zero-lag fourth-order cumulant matrix of the received vector.
struct FocMatrix {
  CMatrix c4;  // M^2 x M^2, Hermitian
  Eigen::Index n_snapshots = 0;
};

/// With z(t) = y(t) (x) conj(y(t)), accumulated snapshot by snapshot:
///
///   C4 = (1/T) sum z z^H  -  zbar zbar^H  -  R (x) conj(R)
///
/// where zbar is the sample mean of z and R the sample covariance. The
/// Kronecker products act on each snapshot vector, never on the stacked data.
/// Throws Error(EmptyInput) for T < 2.
FocMatrix foc_matrix(const CMatrix& snapshots);
FocMatrix foc_matrix(const SnapshotMatrix& y);

/// Left singular vectors beyond the K largest singular values.
/// Throws Error(FocUnidentifiable) when K > dof or K >= M^2.
SubspaceBasis foc_noise_subspace(const FocMatrix& c4, int n_sources, int dof);

/// MUSIC cost over the virtual array b = a (x) conj(a).
ObjectiveValue foc_objective(double theta, const SubspaceBasis& basis, const VirtualGeometry& vg);

DoaEstimate estimate_doa_foc(const SnapshotMatrix& y, int n_sources, const ArrayGeometry& geometry,
                             SearchMethod method, const SearchConfig& config = {});

}  // namespace flexsense
