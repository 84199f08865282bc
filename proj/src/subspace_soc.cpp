#include "flexsense/subspace_soc.hpp"

#include <string>

#include <Eigen/Eigenvalues>

#include "flexsense/errors.hpp"

namespace flexsense {

CMatrix sample_covariance(const CMatrix& snapshots) {
  if (snapshots.cols() == 0) throw Error(ErrorKind::EmptyInput, "no snapshots");
  CMatrix r = snapshots * snapshots.adjoint() / static_cast<double>(snapshots.cols());
  return (r + r.adjoint()) / 2.0;
}

CMatrix sample_covariance(const SnapshotMatrix& y) { return sample_covariance(y.data); }

SubspaceBasis soc_noise_subspace(const CMatrix& covariance, int n_sources) {
  const auto m = covariance.rows();
  if (n_sources >= m) {
    throw Error(ErrorKind::SocUnidentifiable,
                "SOC requires K < M (K = " + std::to_string(n_sources) + ", M = " + std::to_string(m) + ")");
  }
  if (n_sources < 0) throw Error(ErrorKind::InvalidScenario, "negative source count");

  // Eigen returns ascending eigenvalues: the first M - K columns are the noise subspace.
  Eigen::SelfAdjointEigenSolver<CMatrix> evd(covariance);
  SubspaceBasis basis;
  basis.order = StatOrder::Soc;
  basis.signal_dim = n_sources;
  basis.noise_basis = evd.eigenvectors().leftCols(m - n_sources);
  basis.values = evd.eigenvalues().reverse();
  return basis;
}

ObjectiveValue projector_objective(const CMatrix& noise_basis, const SteeringSet& s) {
  const CVector w = noise_basis.adjoint() * s.a;
  const CVector dw = noise_basis.adjoint() * s.da;
  const CVector ddw = noise_basis.adjoint() * s.dda;
  ObjectiveValue v;
  v.value = w.squaredNorm();
  v.gradient = 2.0 * dw.dot(w).real();
  v.hessian = 2.0 * (dw.squaredNorm() + w.dot(ddw).real());
  return v;
}

ObjectiveValue soc_objective(double theta, const SubspaceBasis& basis, const ArrayGeometry& geometry) {
  return projector_objective(basis.noise_basis, steering_set(geometry.selected_positions, theta));
}

DoaEstimate estimate_doa_soc(const SnapshotMatrix& y, int n_sources, const ArrayGeometry& geometry,
                             SearchMethod method, const SearchConfig& config) {
  if (y.n_sensors() != geometry.n_active()) {
    throw Error(ErrorKind::DimensionMismatch, "snapshot rows do not match the activated ports");
  }
  const SubspaceBasis basis = soc_noise_subspace(sample_covariance(y), n_sources);
  const Objective objective = [&](double theta) { return soc_objective(theta, basis, geometry); };
  return search_doas(objective, n_sources, method, config,
                     method == SearchMethod::Grid ? "soc_music" : "soc_newton");
}

}  // namespace flexsense
