#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flexsense/array.hpp"
#include "flexsense/types.hpp"

namespace flexsense {

/// One DOA per user (pilot row), or nullopt when that user's path was not detected.
using UserDoas = std::vector<std::optional<double>>;

enum class ChannelMethod { SensingAssisted, ConventionalLs };

struct ChannelEstimate {
  CMatrix h_full;  // N x K
  CVector gains;   // empty for the conventional estimator
  UserDoas doas_used;
  ChannelMethod method = ChannelMethod::SensingAssisted;
};

struct MetricRecord {
  double nmse = 0.0;
  double rmse_deg = 0.0;
  double miss_rate = 0.0;
  double iterations = 0.0;  // mean Newton steps per detected source
  double snr_db = 0.0;
  long trial_id = 0;
  std::string estimator;
  double runtime_ms = 0.0;
};

struct TheoryPoint {
  double e_conv = 0.0;
  double e_prop = 0.0;
  double eta = 0.0;
};

UserDoas all_detected(std::span<const double> doas);

/// Least squares for the diagonal gain matrix in ||Y_p - A diag(p) Phi||_F^2.
///
/// The vectorised normal equations are G p = c with
///   G_kl = (a_k^H a_l) conj([Phi Phi^H]_kl),  c_k = a_k^H [Y_p Phi^H]_k,
/// restricted to users that have a DOA; the rest get a zero gain. With
/// orthogonal pilots G is diagonal. Throws Error(IllConditionedCalibration)
/// when cond(G) > 1e8.
CVector calibrate_gains(const CMatrix& pilot_block, const UserDoas& doas, const ArrayGeometry& geometry,
                        const CMatrix& pilots);

/// Pairs unlabeled DOA estimates with pilot rows by maximising the total
/// despread energy |a_j^H [Y_p Phi^H]_k|^2 / ||a_j||^2 over injective assignments.
UserDoas assign_doas_to_users(const CMatrix& pilot_block, std::span<const double> doas,
                              const ArrayGeometry& geometry, const CMatrix& pilots);

/// H = A(theta) diag(p) over all N ports.
ChannelEstimate reconstruct_channel(const UserDoas& doas, const CVector& gains, const ArrayGeometry& geometry);

/// Consecutive port blocks {1..M}, {M+1..2M}, ... covering all N ports.
std::vector<std::vector<int>> tile_subsets(int n_ports, int block_size);

/// T_p / ceil(N / M), the pilot share of one subset.
int pilots_per_subset(int total_pilots, int n_ports, int block_size);

/// Per-subset LS H_Omega = Y Phi^H (Phi Phi^H)^-1, rows scattered into N x K.
/// Throws Error(UnderdeterminedLs) when a block has fewer than K pilot columns.
ChannelEstimate conventional_ls(const std::vector<CMatrix>& blocks, const CMatrix& pilots,
                                const std::vector<std::vector<int>>& subsets, int n_ports);

/// ||H - Hhat||_F^2 / ||H||_F^2. Throws Error(ZeroChannel) for H = 0.
double nmse(const CMatrix& h, const CMatrix& h_hat);

/// Minimum-cost injective assignment of rows to columns (rows <= cols,
/// costs >= 0).
/// Returns the column for every row.
std::vector<int> best_injection(const Eigen::MatrixXd& cost);

/// (1/K) min over assignments of ||theta_hat - theta||_2, in degrees, with
/// every unmatched true DOA contributing `miss_penalty_deg`.
double rmse_doa(std::span<const double> estimated, std::span<const double> truth,
                double miss_penalty_deg = 180.0);

/// Closed-form pilot-overhead curves:
///   e_conv = N sigma^2 / (M T_p P),  e_prop = K sigma^2 / (M T_p P),  eta = N / K.
TheoryPoint theoretical_nmse(int n_ports, int n_active, int n_sources, int n_pilots, double noise_power,
                             double mean_power);

}  // namespace flexsense
