#include "flexsense/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "flexsense/errors.hpp"

namespace flexsense {

namespace {

constexpr double kMaxCalibrationCondition = 1e8;

void search_injection(const Eigen::MatrixXd& cost, Eigen::Index row, std::vector<bool>& used,
                      std::vector<int>& current, double partial, double& best, std::vector<int>& best_cols) {
  if (partial >= best) return;
  if (row == cost.rows()) {
    best = partial;
    best_cols = current;
    return;
  }
  for (Eigen::Index c = 0; c < cost.cols(); ++c) {
    if (used[static_cast<std::size_t>(c)]) continue;
    used[static_cast<std::size_t>(c)] = true;
    current[static_cast<std::size_t>(row)] = static_cast<int>(c);
    search_injection(cost, row + 1, used, current, partial + cost(row, c), best, best_cols);
    used[static_cast<std::size_t>(c)] = false;
  }
}

}  // namespace

UserDoas all_detected(std::span<const double> doas) { return UserDoas(doas.begin(), doas.end()); }

std::vector<int> best_injection(const Eigen::MatrixXd& cost) {
  if (cost.rows() > cost.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "more rows than columns in assignment");
  }
  std::vector<bool> used(static_cast<std::size_t>(cost.cols()), false);
  std::vector<int> current(static_cast<std::size_t>(cost.rows()), -1);
  std::vector<int> best_cols = current;
  double best = std::numeric_limits<double>::infinity();
  search_injection(cost, 0, used, current, 0.0, best, best_cols);
  return best_cols;
}

CVector calibrate_gains(const CMatrix& pilot_block, const UserDoas& doas, const ArrayGeometry& geometry,
                        const CMatrix& pilots) {
  const Eigen::Index k = pilots.rows();
  if (static_cast<Eigen::Index>(doas.size()) != k) {
    throw Error(ErrorKind::DimensionMismatch, "one DOA slot per pilot row required");
  }
  if (pilots.cols() < k) throw Error(ErrorKind::InsufficientPilots, "T_p < K");
  if (pilot_block.rows() != geometry.n_active() || pilot_block.cols() != pilots.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "pilot block must be M x T_p");
  }

  std::vector<Eigen::Index> active;
  std::vector<double> thetas;
  for (Eigen::Index u = 0; u < k; ++u) {
    if (doas[static_cast<std::size_t>(u)]) {
      active.push_back(u);
      thetas.push_back(*doas[static_cast<std::size_t>(u)]);
    }
  }
  CVector gains = CVector::Zero(k);
  if (active.empty()) return gains;

  const auto n = static_cast<Eigen::Index>(active.size());
  const CMatrix a = steering_matrix(geometry.selected_positions, thetas);
  const CMatrix despread = pilot_block * pilots.adjoint();
  const CMatrix pilot_gram = pilots * pilots.adjoint();
  const CMatrix steer_gram = a.adjoint() * a;

  CMatrix g(n, n);
  CVector c(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      g(i, j) = steer_gram(i, j) * std::conj(pilot_gram(active[i], active[j]));
    }
    c[i] = a.col(i).dot(despread.col(active[i]));
  }

  Eigen::SelfAdjointEigenSolver<CMatrix> evd(g);
  const RVector& lambda = evd.eigenvalues();
  const double lmax = lambda.maxCoeff();
  const double lmin = lambda.minCoeff();
  if (!(lmin > 0.0) || lmax / lmin > kMaxCalibrationCondition) {
    throw Error(ErrorKind::IllConditionedCalibration,
                "normal equations have condition number " + std::to_string(lmin > 0.0 ? lmax / lmin : INFINITY));
  }
  const CVector p = evd.eigenvectors() * ((evd.eigenvectors().adjoint() * c).array() / lambda.array()).matrix();
  for (Eigen::Index i = 0; i < n; ++i) gains[active[i]] = p[i];
  return gains;
}

UserDoas assign_doas_to_users(const CMatrix& pilot_block, std::span<const double> doas,
                              const ArrayGeometry& geometry, const CMatrix& pilots) {
  const Eigen::Index k = pilots.rows();
  UserDoas out(static_cast<std::size_t>(k));
  if (doas.empty()) return out;
  if (static_cast<Eigen::Index>(doas.size()) > k) {
    throw Error(ErrorKind::DimensionMismatch, "more DOAs than pilot rows");
  }
  const CMatrix despread = pilot_block * pilots.adjoint();
  Eigen::MatrixXd cost(static_cast<Eigen::Index>(doas.size()), k);
  for (std::size_t j = 0; j < doas.size(); ++j) {
    const CVector a = steering_vector(geometry.selected_positions, doas[j]);
    for (Eigen::Index u = 0; u < k; ++u) {
      cost(static_cast<Eigen::Index>(j), u) = std::norm(a.dot(despread.col(u))) / a.squaredNorm();
    }
  }
  cost = (cost.maxCoeff() - cost.array()).matrix();
  const auto cols = best_injection(cost);
  for (std::size_t j = 0; j < doas.size(); ++j) out[static_cast<std::size_t>(cols[j])] = doas[j];
  return out;
}

ChannelEstimate reconstruct_channel(const UserDoas& doas, const CVector& gains, const ArrayGeometry& geometry) {
  if (static_cast<Eigen::Index>(doas.size()) != gains.size()) {
    throw Error(ErrorKind::DimensionMismatch, "DOA and gain counts differ");
  }
  ChannelEstimate est;
  est.method = ChannelMethod::SensingAssisted;
  est.gains = gains;
  est.doas_used = doas;
  est.h_full = CMatrix::Zero(geometry.n_ports, gains.size());
  for (Eigen::Index u = 0; u < gains.size(); ++u) {
    if (const auto& theta = doas[static_cast<std::size_t>(u)]) {
      est.h_full.col(u) = gains[u] * steering_vector(geometry.positions, *theta);
    }
  }
  return est;
}

std::vector<std::vector<int>> tile_subsets(int n_ports, int block_size) {
  if (block_size < 1) throw Error(ErrorKind::InvalidGeometry, "block size must be >= 1");
  std::vector<std::vector<int>> subsets;
  for (int first = 1; first <= n_ports; first += block_size) {
    std::vector<int> block;
    for (int p = first; p < first + block_size && p <= n_ports; ++p) block.push_back(p);
    subsets.push_back(std::move(block));
  }
  return subsets;
}

int pilots_per_subset(int total_pilots, int n_ports, int block_size) {
  const int n_subsets = (n_ports + block_size - 1) / block_size;
  return total_pilots / n_subsets;
}

ChannelEstimate conventional_ls(const std::vector<CMatrix>& blocks, const CMatrix& pilots,
                                const std::vector<std::vector<int>>& subsets, int n_ports) {
  const Eigen::Index k = pilots.rows();
  if (pilots.cols() < k) {
    throw Error(ErrorKind::UnderdeterminedLs, "per-subset pilot count " + std::to_string(pilots.cols()) +
                                                  " < K = " + std::to_string(k));
  }
  if (blocks.size() != subsets.size()) {
    throw Error(ErrorKind::DimensionMismatch, "one pilot block per subset required");
  }

  std::vector<int> covered(static_cast<std::size_t>(n_ports), 0);
  ChannelEstimate est;
  est.method = ChannelMethod::ConventionalLs;
  est.h_full = CMatrix::Zero(n_ports, k);

  const CMatrix pseudo = pilots.adjoint() * (pilots * pilots.adjoint()).inverse();
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& ports = subsets[i];
    if (blocks[i].rows() != static_cast<Eigen::Index>(ports.size()) || blocks[i].cols() != pilots.cols()) {
      throw Error(ErrorKind::DimensionMismatch, "pilot block " + std::to_string(i) + " has wrong shape");
    }
    const CMatrix h_sub = blocks[i] * pseudo;
    for (std::size_t r = 0; r < ports.size(); ++r) {
      const int port = ports[r];
      if (port < 1 || port > n_ports) throw Error(ErrorKind::InvalidGeometry, "subset port out of range");
      ++covered[static_cast<std::size_t>(port - 1)];
      est.h_full.row(port - 1) = h_sub.row(static_cast<Eigen::Index>(r));
    }
  }
  if (std::any_of(covered.begin(), covered.end(), [](int c) { return c != 1; })) {
    throw Error(ErrorKind::InvalidGeometry, "subsets must cover every port exactly once");
  }
  return est;
}

double nmse(const CMatrix& h, const CMatrix& h_hat) {
  const double ref = h.squaredNorm();
  if (!(ref > 0.0)) throw Error(ErrorKind::ZeroChannel, "true channel has zero norm");
  if (h.rows() != h_hat.rows() || h.cols() != h_hat.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "channel shapes differ");
  }
  return (h - h_hat).squaredNorm() / ref;
}

double rmse_doa(std::span<const double> estimated, std::span<const double> truth, double miss_penalty_deg) {
  const auto k = static_cast<Eigen::Index>(truth.size());
  if (k == 0) return 0.0;
  const auto n = static_cast<Eigen::Index>(estimated.size());
  if (n > k) throw Error(ErrorKind::DimensionMismatch, "more estimates than true DOAs");

  // Every injection leaves exactly k - n true DOAs unmatched, so only the
  // matched squared errors decide the assignment.
  Eigen::MatrixXd cost(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      const double e = rad_to_deg(estimated[static_cast<std::size_t>(i)] - truth[static_cast<std::size_t>(j)]);
      cost(i, j) = e * e;
    }
  }
  const auto cols = best_injection(cost);
  double total = static_cast<double>(k - n) * miss_penalty_deg * miss_penalty_deg;
  for (Eigen::Index i = 0; i < n; ++i) total += cost(i, cols[static_cast<std::size_t>(i)]);
  return std::sqrt(total) / static_cast<double>(k);
}

TheoryPoint theoretical_nmse(int n_ports, int n_active, int n_sources, int n_pilots, double noise_power,
                             double mean_power) {
  TheoryPoint t;
  const double denom = static_cast<double>(n_active) * n_pilots * mean_power;
  t.e_conv = n_ports * noise_power / denom;
  t.e_prop = n_sources * noise_power / denom;
  t.eta = t.e_conv / t.e_prop;
  return t;
}

}  // namespace flexsense
