#include <catch_amalgamated.hpp>

#include <random>

#include "flexsense/errors.hpp"
#include "flexsense/subspace_foc.hpp"
#include "oracles.hpp"

using namespace flexsense;

namespace {

const ArrayGeometry kUla = build_geometry(40, {1, 2, 3, 4});
const ArrayGeometry kMra = build_geometry(40, {1, 2, 5, 7});

std::vector<double> rad(std::initializer_list<double> deg) {
  std::vector<double> out;
  for (double d : deg) out.push_back(deg_to_rad(d));
  return out;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Io;
}

CVector unit_phase_gains(int k, double power, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ph(0.0, 2.0 * kPi);
  CVector p(k);
  for (int i = 0; i < k; ++i) p[i] = std::polar(std::sqrt(power * (1.0 + 0.3 * i)), ph(rng));
  return p;
}

}  // namespace

TEST_CASE("FOC matrix closed forms", "[foc]") {
  CHECK(foc_matrix(CMatrix::Zero(3, 10)).c4.norm() == 0.0);
  CHECK(foc_matrix(CMatrix::Zero(3, 10)).c4.rows() == 9);
  CHECK(foc_matrix(CMatrix::Zero(3, 10)).n_snapshots == 10);

  Rng rng(3);
  for (int t : {2, 3, 17, 400}) {
    const CMatrix s = gen_sources(1, t, Modulation::Qpsk, {}, rng);
    const CMatrix c4 = foc_matrix(s).c4;
    CHECK(std::abs(c4(0, 0) - cd(-1.0)) < 1e-15);
  }
  CHECK(kind_of([] { foc_matrix(CMatrix::Ones(2, 1)); }) == ErrorKind::EmptyInput);
}

TEST_CASE("FOC matrix of noise vanishes", "[foc]") {
  Rng rng(4);
  const CMatrix noise = complex_noise(4, 100000, 1.0, rng);
  const double noise_norm = foc_matrix(noise).c4.norm();
  CHECK(noise_norm / 16.0 < 0.05);

  // a QPSK source at the same power gives |kappa| ||b||^2 = 16
  const CMatrix s = gen_sources(1, 100000, Modulation::Qpsk, {}, rng);
  const CMatrix y = steering_matrix(kMra.selected_positions, {0.3}) * s;
  const double qpsk_norm = foc_matrix(y).c4.norm();
  CHECK(qpsk_norm == Catch::Approx(16.0).epsilon(1e-9));
  CHECK(noise_norm < 0.05 * qpsk_norm);
}

TEST_CASE("FOC matrix is Hermitian and order-free", "[foc]") {
  Rng rng(5);
  const CMatrix y = complex_noise(4, 300, 2.0, rng) +
                    steering_matrix(kMra.selected_positions, {0.2, -0.5}) * gen_sources(2, 300, Modulation::Qpsk, {}, rng);
  const CMatrix c4 = foc_matrix(y).c4;
  CHECK((c4 - c4.adjoint()).norm() <= 1e-10 * c4.norm());

  std::vector<Eigen::Index> perm(300);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  CMatrix shuffled(4, 300);
  for (Eigen::Index i = 0; i < 300; ++i) shuffled.col(i) = y.col(perm[static_cast<std::size_t>(i)]);
  CHECK((foc_matrix(shuffled).c4 - c4).norm() <= 1e-12 * c4.norm());
}

TEST_CASE("FOC matrix matches the naive cumulant and its factorization", "[foc]") {
  std::mt19937_64 rng(6);
  for (int k : {1, 2, 3}) {
    const auto doas = rad({-40.0, 12.0, 33.0});
    const std::vector<double> th(doas.begin(), doas.begin() + k);
    const CVector p = unit_phase_gains(k, 1.7, rng);
    const CMatrix y = oracle::exact_snapshots(kMra, th, p);

    const CMatrix c4 = foc_matrix(y).c4;
    const CMatrix naive = oracle::naive_cumulant(y);
    const CMatrix fact = oracle::factorized_c4(steering_matrix(kMra.selected_positions, th), p, -1.0);
    CHECK((c4 - naive).norm() <= 1e-10 * naive.norm());
    CHECK((c4 - fact).norm() <= 1e-10 * fact.norm());
    // enumeration reproduces the exact second-order statistics as well
    CHECK((sample_covariance(y) -
           exact_covariance(steering_matrix(kMra.selected_positions, th), p.cwiseAbs2().cast<cd>().asDiagonal(), 0.0))
              .norm() < 1e-12);
  }
}

TEST_CASE("source cumulant oracle", "[foc]") {
  CHECK(std::abs(oracle::naive_cumulant(oracle::qpsk_enumeration(1))(0, 0) - cd(-1.0)) < 1e-15);

  Rng rng(7);
  const CMatrix s2 = gen_sources(2, 100000, Modulation::Qpsk, {}, rng);
  const CMatrix cs = oracle::naive_cumulant(s2);
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j < 4; ++j) {
      const bool self = (i == j) && (i == 0 || i == 3);
      if (self) {
        CHECK(std::abs(cs(i, j) - cd(-1.0)) < 0.05);
      } else {
        CHECK(std::abs(cs(i, j)) < 0.05);
      }
    }
  // The estimator drops the E[y y] E[y* y*] pairing, which is zero for circular
  // data; on a finite sample it only survives as a product of two O(1/sqrt T) terms.
  CHECK((foc_matrix(s2).c4 - cs).norm() < 1e-4);

  const CMatrix g = gen_sources(1, 100000, Modulation::Gaussian, {}, rng);
  CHECK(std::abs(oracle::naive_cumulant(g)(0, 0)) < 0.05);
}

TEST_CASE("FOC noise subspace identifiability", "[foc]") {
  const int dof_mra = virtual_geometry(kMra).dof;
  const int dof_ula = virtual_geometry(kUla).dof;
  const FocMatrix c{CMatrix::Identity(16, 16), 10};
  CHECK(foc_noise_subspace(c, 6, dof_mra).noise_basis.cols() == 10);
  CHECK(foc_noise_subspace(c, 6, dof_ula).noise_basis.cols() == 10);
  CHECK(kind_of([&] { foc_noise_subspace(c, 7, dof_ula); }) == ErrorKind::FocUnidentifiable);
  CHECK(kind_of([&] { foc_noise_subspace(c, 13, dof_mra); }) == ErrorKind::FocUnidentifiable);

  const SubspaceBasis b = foc_noise_subspace(c, 3, dof_mra);
  CHECK(b.order == StatOrder::Foc);
  CHECK((b.noise_basis.adjoint() * b.noise_basis - CMatrix::Identity(13, 13)).norm() < 1e-10);
  CHECK(b.values.size() == 16);
}

TEST_CASE("FOC objective on exact statistics", "[foc]") {
  std::mt19937_64 rng(8);
  const VirtualGeometry vg = virtual_geometry(kMra);
  const auto six = rad({-55.0, -32.0, -10.0, 10.0, 32.0, 55.0});
  const CMatrix y = oracle::exact_snapshots(kMra, six, unit_phase_gains(6, 2.0, rng));
  const SubspaceBasis b = foc_noise_subspace(foc_matrix(y), 6, vg.dof);
  for (double th : six) CHECK(foc_objective(th, b, vg).value < 1e-8);
  CHECK(foc_objective(deg_to_rad(0.0), b, vg).value > 1e-3);

  // a constructed null
  const double th0 = 0.37;
  CVector u0 = virtual_steering_set(vg, th0).a;
  u0 /= u0.norm();
  const CMatrix proj = CMatrix::Identity(16, 16) - u0 * u0.adjoint();
  Eigen::SelfAdjointEigenSolver<CMatrix> evd(proj);
  SubspaceBasis nb;
  nb.order = StatOrder::Foc;
  nb.noise_basis = evd.eigenvectors().rightCols(15);
  CHECK(foc_objective(th0, nb, vg).value < 1e-20);
}

TEST_CASE("FOC derivatives match finite differences", "[foc]") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> angle(-1.3, 1.3);
  for (int rep = 0; rep < 60; ++rep) {
    const VirtualGeometry vg = virtual_geometry(rep % 2 ? kMra : kUla);
    SubspaceBasis b;
    b.order = StatOrder::Foc;
    b.noise_basis = oracle::random_orthonormal(16, 16 - 1 - rep % 6, rng);
    const double th = angle(rng);
    const std::function<double(double)> j = [&](double t) { return foc_objective(t, b, vg).value; };
    const std::function<double(double)> dj = [&](double t) { return foc_objective(t, b, vg).gradient; };
    const ObjectiveValue v = foc_objective(th, b, vg);
    const double fd = oracle::central_diff(j, th, 1e-6);
    const double fdd = oracle::central_diff(dj, th, 1e-6);
    CHECK(std::abs(v.gradient - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
    CHECK(std::abs(v.hessian - fdd) <= 1e-3 * std::max(1.0, std::abs(fdd)));
  }
}

TEST_CASE("FOC DOA estimation on exact statistics", "[foc]") {
  std::mt19937_64 rng(10);
  for (double deg : {-61.3, -7.77, 0.0, 24.9, 70.2}) {
    const std::vector<double> th{deg_to_rad(deg)};
    const SnapshotMatrix y{oracle::exact_snapshots(kMra, th, unit_phase_gains(1, 1.0, rng)), 0.0};
    const DoaEstimate est = estimate_doa_foc(y, 1, kMra, SearchMethod::Newton);
    REQUIRE(est.detected == 1);
    CHECK(est.method == "foc_newton");
    CHECK(std::abs(rad_to_deg(est.angles[0]) - deg) < 1e-6);
  }

  // more sources than ports
  const auto six = rad({-55.3, -31.8, -10.2, 9.9, 32.4, 55.1});
  const SnapshotMatrix y6{oracle::exact_snapshots(kMra, six, unit_phase_gains(6, 1.0, rng)), 0.0};
  const DoaEstimate nt = estimate_doa_foc(y6, 6, kMra, SearchMethod::Newton);
  const DoaEstimate gr = estimate_doa_foc(y6, 6, kMra, SearchMethod::Grid);
  REQUIRE(nt.detected == 6);
  REQUIRE(gr.detected == 6);
  CHECK(gr.method == "foc_music");
  for (int i = 0; i < 6; ++i) {
    CHECK(std::abs(nt.angles[i] - six[i]) < deg_to_rad(1e-6));
    CHECK(std::abs(gr.angles[i] - six[i]) <= deg_to_rad(0.05 + 1e-9));
    CHECK(std::abs(gr.angles[i] - nt.angles[i]) <= deg_to_rad(0.5));
  }

  CHECK(kind_of([&] { estimate_doa_foc(y6, 6, build_geometry(9, {1, 2, 5}), SearchMethod::Newton); }) ==
        ErrorKind::DimensionMismatch);
  const SnapshotMatrix y6u{oracle::exact_snapshots(kUla, six, unit_phase_gains(6, 1.0, rng)), 0.0};
  CHECK(kind_of([&] { estimate_doa_foc(y6u, 7, kUla, SearchMethod::Newton); }) == ErrorKind::FocUnidentifiable);
}

TEST_CASE("coherent pair: zero-lag FOC sees one combined response", "[foc]") {
  // s2 = 0.9 s1. The pair acts as one source with response g = p1 a1 + 0.9 p2 a2,
  // so the cumulant is rank one in (g (x) g*) for the pair, plus the third source.
  const auto doas = rad({-45.0, 0.0, 40.0});
  CVector p(3);
  p << cd(1.0, 0.2), cd(-0.4, 0.8), cd(0.7, -0.7);
  const std::vector<Coherence> coh{Coherence{1, 0, cd{0.9, 0.0}}};
  const CMatrix y = oracle::exact_snapshots(kMra, doas, p, coh);

  const CMatrix a = steering_matrix(kMra.selected_positions, doas);
  CMatrix eff(4, 2);
  eff.col(0) = p[0] * a.col(0) + 0.9 * p[1] * a.col(1);
  eff.col(1) = p[2] * a.col(2);
  const CMatrix c4 = foc_matrix(y).c4;
  const CMatrix expect = oracle::factorized_c4(eff, CVector::Ones(2), -1.0);
  CHECK((c4 - expect).norm() <= 1e-10 * expect.norm());
  CHECK((oracle::naive_cumulant(y) - expect).norm() <= 1e-10 * expect.norm());

  const VirtualGeometry vg = virtual_geometry(kMra);
  const SubspaceBasis b = foc_noise_subspace(foc_matrix(y), 3, vg.dof);
  CHECK(foc_objective(doas[2], b, vg).value < 1e-8);
}
