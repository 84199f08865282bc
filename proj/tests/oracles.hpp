// Independent reference computations used by the tests: finite differences,
// full enumeration of the QPSK alphabet, naive cumulants, brute-force search.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/QR>

#include "flexsense/array.hpp"
#include "flexsense/signals.hpp"
#include "flexsense/types.hpp"

namespace oracle {

using flexsense::cd;
using flexsense::CMatrix;
using flexsense::CVector;

inline double central_diff(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double second_diff(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

inline CVector central_diff(const std::function<CVector(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline CVector second_diff(const std::function<CVector(double)>& f, double x, double h) {
  return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

// Every combination of QPSK symbols over `k` independent rows, one column each.
// Uniform weights over these columns are the exact source distribution.
inline CMatrix qpsk_enumeration(int k) {
  const auto& alphabet = flexsense::qpsk_alphabet();
  Eigen::Index cols = 1;
  for (int i = 0; i < k; ++i) cols *= 4;
  CMatrix s(k, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    Eigen::Index code = c;
    for (int i = 0; i < k; ++i) {
      s(i, c) = alphabet[static_cast<std::size_t>(code % 4)];
      code /= 4;
    }
  }
  return s;
}

// Exact symbols for a source set with coherent copies: enumerate the
// independent rows, then fill each target as alpha * its parent.
inline CMatrix qpsk_enumeration(int k, const std::vector<flexsense::Coherence>& coherence) {
  std::vector<int> independent;
  for (int i = 0; i < k; ++i) {
    if (std::none_of(coherence.begin(), coherence.end(), [i](const auto& c) { return c.target == i; })) {
      independent.push_back(i);
    }
  }
  const CMatrix base = qpsk_enumeration(static_cast<int>(independent.size()));
  CMatrix s = CMatrix::Zero(k, base.cols());
  for (std::size_t i = 0; i < independent.size(); ++i) s.row(independent[i]) = base.row(static_cast<Eigen::Index>(i));
  for (const auto& c : coherence) s.row(c.target) = c.alpha * s.row(c.source);
  return s;
}

// Noiseless received block whose columns realise every QPSK symbol combination
// once, so sample statistics of it are the exact statistics.
inline CMatrix exact_snapshots(const flexsense::ArrayGeometry& g, const std::vector<double>& doas,
                               const CVector& gains, const std::vector<flexsense::Coherence>& coherence = {}) {
  const CMatrix s = qpsk_enumeration(static_cast<int>(doas.size()), coherence);
  return flexsense::steering_matrix(g.selected_positions, doas) * gains.asDiagonal() * s;
}

inline CMatrix random_orthonormal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  CMatrix x(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) x(r, c) = cd(n(rng), n(rng));
  Eigen::HouseholderQR<CMatrix> qr(x);
  return qr.householderQ() * CMatrix::Identity(rows, cols);
}

// Fourth-order cumulant of (y_a, y_b*, y_c*, y_d) straight from the
// definition, expectations as plain averages over the columns of y:
//   E[y_a y_b* y_c* y_d] - E[y_a y_b*] E[y_c* y_d] - E[y_a y_c*] E[y_b* y_d] - E[y_a y_d] E[y_b* y_c*]
// laid out at row a*M + b, column c*M + d.
inline CMatrix naive_cumulant(const CMatrix& y) {
  const Eigen::Index m = y.rows();
  const auto t = static_cast<double>(y.cols());
  auto mean = [&](auto&& f) {
    cd acc = 0.0;
    for (Eigen::Index n = 0; n < y.cols(); ++n) acc += f(n);
    return acc / t;
  };
  CMatrix c(m * m, m * m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b)
      for (Eigen::Index cc = 0; cc < m; ++cc)
        for (Eigen::Index d = 0; d < m; ++d) {
          const cd m4 = mean([&](Eigen::Index n) {
            return y(a, n) * std::conj(y(b, n)) * std::conj(y(cc, n)) * y(d, n);
          });
          const cd ab = mean([&](Eigen::Index n) { return y(a, n) * std::conj(y(b, n)); });
          const cd cd_ = mean([&](Eigen::Index n) { return std::conj(y(cc, n)) * y(d, n); });
          const cd ac = mean([&](Eigen::Index n) { return y(a, n) * std::conj(y(cc, n)); });
          const cd bd = mean([&](Eigen::Index n) { return std::conj(y(b, n)) * y(d, n); });
          const cd ad = mean([&](Eigen::Index n) { return y(a, n) * y(d, n); });
          const cd bc = mean([&](Eigen::Index n) { return std::conj(y(b, n)) * std::conj(y(cc, n)); });
          c(a * m + b, cc * m + d) = m4 - ab * cd_ - ac * bd - ad * bc;
        }
  return c;
}

// (A (x) A*) C_s (A (x) A*)^H for independent sources with kurtosis kappa and
// complex gains p: C_s is diagonal at the self-pair positions.
inline CMatrix factorized_c4(const CMatrix& a, const CVector& gains, double kappa) {
  const Eigen::Index m = a.rows();
  CMatrix c = CMatrix::Zero(m * m, m * m);
  for (Eigen::Index k = 0; k < a.cols(); ++k) {
    CVector b(m * m);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < m; ++j) b[i * m + j] = a(i, k) * std::conj(a(j, k));
    c += kappa * std::norm(gains[k]) * std::norm(gains[k]) * b * b.adjoint();
  }
  return c;
}

// Minimum of sum_i cost(i, perm(i)) over every injection, by enumerating
// permutations of the columns.
inline double brute_assignment(const Eigen::MatrixXd& cost) {
  std::vector<int> cols(static_cast<std::size_t>(cost.cols()));
  std::iota(cols.begin(), cols.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (Eigen::Index i = 0; i < cost.rows(); ++i) s += cost(i, cols[static_cast<std::size_t>(i)]);
    best = std::min(best, s);
  } while (std::next_permutation(cols.begin(), cols.end()));
  return best;
}

// Reference RMSE: try every ordering of the true angles against the
// estimates; the tail of each ordering is the unmatched set.
inline double brute_rmse_deg(const std::vector<double>& est_deg, const std::vector<double>& true_deg,
                             double penalty) {
  std::vector<double> t = true_deg;
  std::sort(t.begin(), t.end());
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double e = i < est_deg.size() ? est_deg[i] - t[i] : penalty;
      s += e * e;
    }
    best = std::min(best, s);
  } while (std::next_permutation(t.begin(), t.end()));
  return std::sqrt(best) / static_cast<double>(true_deg.size());
}

}  // namespace oracle
