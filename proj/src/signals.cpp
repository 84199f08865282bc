#include "flexsense/signals.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "flexsense/errors.hpp"

namespace flexsense {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr int kMaxDoaDraws = 10000;

}  // namespace

const std::vector<cd>& qpsk_alphabet() {
  static const std::vector<cd> alphabet = [] {
    const double h = std::sqrt(2.0) / 2.0;
    return std::vector<cd>{{h, h}, {h, -h}, {-h, h}, {-h, -h}};
  }();
  return alphabet;
}

void validate_coherence(int n_sources, const std::vector<Coherence>& coherence) {
  std::vector<bool> is_target(static_cast<std::size_t>(std::max(n_sources, 0)), false);
  for (const auto& c : coherence) {
    if (c.target < 0 || c.target >= n_sources || c.source < 0 || c.source >= n_sources) {
      throw Error(ErrorKind::InvalidScenario, "coherence index out of range");
    }
    if (c.source >= c.target) {
      throw Error(ErrorKind::InvalidScenario,
                  "coherent source " + std::to_string(c.target + 1) +
                      " must copy an earlier source, got " + std::to_string(c.source + 1));
    }
    if (is_target[static_cast<std::size_t>(c.target)]) {
      throw Error(ErrorKind::InvalidScenario,
                  "source " + std::to_string(c.target + 1) + " is made coherent twice");
    }
    is_target[static_cast<std::size_t>(c.target)] = true;
  }
  for (const auto& c : coherence) {
    if (is_target[static_cast<std::size_t>(c.source)]) {
      throw Error(ErrorKind::InvalidScenario,
                  "coherence chain: source " + std::to_string(c.source + 1) + " is itself coherent");
    }
  }
}

CMatrix gen_sources(int n_sources, int n_snapshots, Modulation modulation,
                    const std::vector<Coherence>& coherence, Rng& rng) {
  if (n_sources < 1 || n_snapshots < 1) {
    throw Error(ErrorKind::InvalidScenario, "need K >= 1 and T >= 1");
  }
  validate_coherence(n_sources, coherence);

  CMatrix s(n_sources, n_snapshots);
  if (modulation == Modulation::Qpsk) {
    const auto& alphabet = qpsk_alphabet();
    std::uniform_int_distribution<int> pick(0, 3);
    for (int k = 0; k < n_sources; ++k) {
      for (int t = 0; t < n_snapshots; ++t) s(k, t) = alphabet[static_cast<std::size_t>(pick(rng))];
    }
  } else {
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    for (int k = 0; k < n_sources; ++k) {
      for (int t = 0; t < n_snapshots; ++t) {
        const double re = normal(rng);
        s(k, t) = cd(re, normal(rng));
      }
    }
  }
  for (const auto& c : coherence) s.row(c.target) = c.alpha * s.row(c.source);
  return s;
}

CVector gen_gains(int n_sources, double snr_db, double noise_power, double gain_ratio_max, Rng& rng) {
  if (!(gain_ratio_max >= 1.0)) {
    throw Error(ErrorKind::InvalidScenario, "gain_ratio_max must be >= 1");
  }
  if (!(noise_power > 0.0)) {
    throw Error(ErrorKind::InvalidScenario, "noise_power must be > 0");
  }
  std::uniform_real_distribution<double> power(1.0, gain_ratio_max);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);

  RVector q(n_sources);
  for (int k = 0; k < n_sources; ++k) q[k] = gain_ratio_max > 1.0 ? power(rng) : 1.0;
  q *= noise_power * std::pow(10.0, snr_db / 10.0) / q.mean();

  CVector p(n_sources);
  for (int k = 0; k < n_sources; ++k) p[k] = std::polar(std::sqrt(q[k]), phase(rng));
  return p;
}

CMatrix complex_noise(Eigen::Index rows, Eigen::Index cols, double noise_power, Rng& rng) {
  CMatrix n(rows, cols);
  if (noise_power <= 0.0) {
    n.setZero();
    return n;
  }
  std::normal_distribution<double> normal(0.0, std::sqrt(noise_power / 2.0));
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double re = normal(rng);
      n(r, c) = cd(re, normal(rng));
    }
  }
  return n;
}

SnapshotMatrix synthesize_snapshots(const ArrayGeometry& geometry, const std::vector<double>& doas,
                                    const CVector& gains, const CMatrix& symbols,
                                    double noise_power, Rng& rng) {
  const auto k = static_cast<Eigen::Index>(doas.size());
  if (gains.size() != k || symbols.rows() != k) {
    throw Error(ErrorKind::DimensionMismatch,
                "doas (" + std::to_string(k) + "), gains (" + std::to_string(gains.size()) +
                    ") and symbol rows (" + std::to_string(symbols.rows()) + ") disagree");
  }
  const CMatrix a = steering_matrix(geometry.selected_positions, doas);
  SnapshotMatrix y;
  y.noise_power = noise_power;
  y.data = a * gains.asDiagonal() * symbols;
  y.data += complex_noise(y.data.rows(), y.data.cols(), noise_power, rng);
  return y;
}

CMatrix gen_pilot_matrix(int n_sources, int n_pilots) {
  if (n_pilots < n_sources) {
    throw Error(ErrorKind::InsufficientPilots,
                "T_p = " + std::to_string(n_pilots) + " < K = " + std::to_string(n_sources));
  }
  CMatrix phi(n_sources, n_pilots);
  for (int k = 0; k < n_sources; ++k) {
    for (int t = 0; t < n_pilots; ++t) {
      // k*t mod T_p keeps the phase argument small and the entries exact at 0, pi.
      const auto idx = static_cast<long long>(k) * t % n_pilots;
      phi(k, t) = std::polar(1.0, -2.0 * kPi * static_cast<double>(idx) / n_pilots);
    }
  }
  return phi;
}

CMatrix exact_covariance(const CMatrix& steering, const CMatrix& source_covariance, double noise_power) {
  if (steering.cols() != source_covariance.rows() || source_covariance.rows() != source_covariance.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "source covariance must be K x K");
  }
  CMatrix r = steering * source_covariance * steering.adjoint();
  r.diagonal().array() += noise_power;
  return (r + r.adjoint()) / 2.0;
}

std::vector<double> draw_separated_doas(int n_sources, double lo, double hi, double min_separation,
                                        Rng& rng) {
  std::uniform_real_distribution<double> angle(lo, hi);
  std::vector<double> doas(static_cast<std::size_t>(n_sources));
  for (int attempt = 0; attempt < kMaxDoaDraws; ++attempt) {
    for (auto& d : doas) d = angle(rng);
    bool ok = true;
    for (std::size_t i = 0; i < doas.size() && ok; ++i) {
      for (std::size_t j = i + 1; j < doas.size() && ok; ++j) {
        ok = std::abs(doas[i] - doas[j]) >= min_separation;
      }
    }
    if (ok) return doas;
  }
  throw Error(ErrorKind::InvalidScenario, "could not place " + std::to_string(n_sources) +
                                              " DOAs with the requested separation");
}

std::vector<double> perturb_doas(const std::vector<double>& base, double half_width, Rng& rng) {
  std::vector<double> out = base;
  if (half_width <= 0.0) return out;
  std::uniform_real_distribution<double> offset(-half_width, half_width);
  for (auto& d : out) d += offset(rng);
  return out;
}

Rng derive_stream(std::uint64_t seed, std::uint64_t snr_index, std::uint64_t trial_index) {
  const std::uint64_t h1 = splitmix64(seed ^ splitmix64(snr_index + 0x632be59bd9b4e019ULL));
  const std::uint64_t h2 = splitmix64(h1 ^ splitmix64(trial_index + 0x8cb92ba72f3d8dd7ULL));
  const std::uint64_t h3 = splitmix64(h2);
  std::seed_seq seq{static_cast<std::uint32_t>(h2), static_cast<std::uint32_t>(h2 >> 32),
                    static_cast<std::uint32_t>(h3), static_cast<std::uint32_t>(h3 >> 32)};
  return Rng(seq);
}

}  // namespace flexsense
