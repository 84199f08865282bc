#include "flexsense/subspace_foc.hpp"

#include <string>

#include <Eigen/SVD>

#include "flexsense/errors.hpp"

namespace flexsense {

FocMatrix foc_matrix(const CMatrix& snapshots) {
  const Eigen::Index m = snapshots.rows();
  const Eigen::Index t = snapshots.cols();
  if (t < 2) throw Error(ErrorKind::EmptyInput, "FOC needs at least 2 snapshots");

  const Eigen::Index l = m * m;
  CMatrix zz = CMatrix::Zero(l, l);
  CVector zsum = CVector::Zero(l);
  CMatrix r = CMatrix::Zero(m, m);
  CVector z(l);

  for (Eigen::Index n = 0; n < t; ++n) {
    const auto y = snapshots.col(n);
    for (Eigen::Index m1 = 0; m1 < m; ++m1) {
      for (Eigen::Index m2 = 0; m2 < m; ++m2) z[m1 * m + m2] = y[m1] * std::conj(y[m2]);
    }
    zz.selfadjointView<Eigen::Lower>().rankUpdate(z);
    zsum += z;
    r.noalias() += y * y.adjoint();
  }

  const double inv_t = 1.0 / static_cast<double>(t);
  CMatrix moment = zz.selfadjointView<Eigen::Lower>();
  moment *= inv_t;
  zsum *= inv_t;
  r *= inv_t;

  FocMatrix out;
  out.n_snapshots = t;
  out.c4 = moment - zsum * zsum.adjoint();
  // R (x) conj(R)
  for (Eigen::Index m1 = 0; m1 < m; ++m1) {
    for (Eigen::Index m3 = 0; m3 < m; ++m3) {
      out.c4.block(m1 * m, m3 * m, m, m) -= r(m1, m3) * r.conjugate();
    }
  }
  out.c4 = (out.c4 + out.c4.adjoint()) / 2.0;
  return out;
}

FocMatrix foc_matrix(const SnapshotMatrix& y) { return foc_matrix(y.data); }

SubspaceBasis foc_noise_subspace(const FocMatrix& c4, int n_sources, int dof) {
  const Eigen::Index l = c4.c4.rows();
  if (n_sources > dof) {
    throw Error(ErrorKind::FocUnidentifiable, "FOC requires K <= dof (K = " + std::to_string(n_sources) +
                                                  ", dof = " + std::to_string(dof) + ")");
  }
  if (n_sources >= l) {
    throw Error(ErrorKind::FocUnidentifiable, "FOC requires K < M^2");
  }
  if (n_sources < 0) throw Error(ErrorKind::InvalidScenario, "negative source count");

  Eigen::JacobiSVD<CMatrix> svd(c4.c4, Eigen::ComputeFullU);
  SubspaceBasis basis;
  basis.order = StatOrder::Foc;
  basis.signal_dim = n_sources;
  basis.noise_basis = svd.matrixU().rightCols(l - n_sources);
  basis.values = svd.singularValues();
  return basis;
}

ObjectiveValue foc_objective(double theta, const SubspaceBasis& basis, const VirtualGeometry& vg) {
  return projector_objective(basis.noise_basis, virtual_steering_set(vg, theta));
}

DoaEstimate estimate_doa_foc(const SnapshotMatrix& y, int n_sources, const ArrayGeometry& geometry,
                             SearchMethod method, const SearchConfig& config) {
  if (y.n_sensors() != geometry.n_active()) {
    throw Error(ErrorKind::DimensionMismatch, "snapshot rows do not match the activated ports");
  }
  const VirtualGeometry vg = virtual_geometry(geometry);
  const SubspaceBasis basis = foc_noise_subspace(foc_matrix(y), n_sources, vg.dof);
  const Objective objective = [&](double theta) { return foc_objective(theta, basis, vg); };
  return search_doas(objective, n_sources, method, config,
                     method == SearchMethod::Grid ? "foc_music" : "foc_newton");
}

}  // namespace flexsense
