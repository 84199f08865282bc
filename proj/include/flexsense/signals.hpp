#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "flexsense/array.hpp"
#include "flexsense/types.hpp"

namespace flexsense {

using Rng = std::mt19937_64;

enum class Modulation { Qpsk, Gaussian };

/// Source `target` is an exact copy alpha * s_source of an earlier,
/// independent source. Indices are 0-based.
struct Coherence {
  int target = 0;
  int source = 0;
  cd alpha{1.0, 0.0};
};

struct SourceBlock {
  CMatrix symbols;  // K x T
  CVector gains;    // p_k
  RVector powers;   // |p_k|^2
};

struct SnapshotMatrix {
  CMatrix data;  // M x T
  double noise_power = 0.0;

  Eigen::Index n_sensors() const { return data.rows(); }
  Eigen::Index n_snapshots() const { return data.cols(); }
};

/// Unit-average-power QPSK alphabet {(+-1 +- j) / sqrt 2}.
const std::vector<cd>& qpsk_alphabet();

/// Throws Error(InvalidScenario) when a coherent row points at itself, at a
/// later row, or at a row that is itself coherent.
void validate_coherence(int n_sources, const std::vector<Coherence>& coherence);

CMatrix gen_sources(int n_sources, int n_snapshots, Modulation modulation,
                    const std::vector<Coherence>& coherence, Rng& rng);

/// Powers uniform on [1, gain_ratio_max] rescaled so their mean equals
/// noise_power * 10^(snr_db / 10); each gain gets an independent uniform phase.
CVector gen_gains(int n_sources, double snr_db, double noise_power, double gain_ratio_max, Rng& rng);

/// Circular complex Gaussian entries with total variance `noise_power`.
CMatrix complex_noise(Eigen::Index rows, Eigen::Index cols, double noise_power, Rng& rng);

/// Y = A_Omega(doas) diag(gains) S + N.
SnapshotMatrix synthesize_snapshots(const ArrayGeometry& geometry, const std::vector<double>& doas,
                                    const CVector& gains, const CMatrix& symbols,
                                    double noise_power, Rng& rng);

/// First K rows of the T_p-point DFT matrix: unit modulus, Phi Phi^H = T_p I.
CMatrix gen_pilot_matrix(int n_sources, int n_pilots);

/// R = A R_s A^H + noise_power I.
CMatrix exact_covariance(const CMatrix& steering, const CMatrix& source_covariance, double noise_power);

/// Rejection sampling of K angles in [lo, hi] with pairwise separation
/// >= min_separation. Returns them in draw order. Gives up after 10^4 tries.
std::vector<double> draw_separated_doas(int n_sources, double lo, double hi, double min_separation,
                                        Rng& rng);

/// Adds an independent U(-half_width, half_width) offset to every angle.
std::vector<double> perturb_doas(const std::vector<double>& base, double half_width, Rng& rng);

/// Independent stream for one (seed, snr index, trial index) work item.
Rng derive_stream(std::uint64_t seed, std::uint64_t snr_index, std::uint64_t trial_index);

}  // namespace flexsense
