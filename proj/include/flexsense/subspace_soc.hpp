#pragma once

#include "flexsense/array.hpp"
#include "flexsense/search.hpp"
#include "flexsense/signals.hpp"
#include "flexsense/types.hpp"

namespace flexsense {

enum class StatOrder { Soc, Foc };

/// Orthonormal basis of the noise subspace. `values` keeps the full
/// eigenvalue (SOC) or singular value (FOC) spectrum, descending.
struct SubspaceBasis {
  CMatrix noise_basis;  // L x (L - K)
  StatOrder order = StatOrder::Soc;
  int signal_dim = 0;
  RVector values;
};

/// R = (1/T) sum_t y(t) y(t)^H. Throws Error(EmptyInput) for T = 0.
CMatrix sample_covariance(const CMatrix& snapshots);
CMatrix sample_covariance(const SnapshotMatrix& y);

/// Eigenvectors of the M - K smallest eigenvalues of a Hermitian R.
/// Throws Error(SocUnidentifiable) when K >= M.
SubspaceBasis soc_noise_subspace(const CMatrix& covariance, int n_sources);

/// J = s^H Pi s, 2 Re{ds^H Pi s}, 2 Re{ds^H Pi ds + s^H Pi dds} with
/// Pi = U U^H never formed.
ObjectiveValue projector_objective(const CMatrix& noise_basis, const SteeringSet& s);

/// MUSIC cost over the activated ports. The spectrum is 1 / value.
ObjectiveValue soc_objective(double theta, const SubspaceBasis& basis, const ArrayGeometry& geometry);

DoaEstimate estimate_doa_soc(const SnapshotMatrix& y, int n_sources, const ArrayGeometry& geometry,
                             SearchMethod method, const SearchConfig& config = {});

}  // namespace flexsense
