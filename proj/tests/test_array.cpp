#include <catch_amalgamated.hpp>

#include <random>

#include "flexsense/array.hpp"
#include "flexsense/errors.hpp"
#include "oracles.hpp"

using namespace flexsense;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<double> to_std(const RVector& v) { return {v.data(), v.data() + v.size()}; }

double max_abs(const CVector& v) { return v.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("build_geometry extracts the activated positions", "[array]") {
  CHECK(to_std(build_geometry(9, {1, 2, 3, 4}).selected_positions) == std::vector<double>{0, 1, 2, 3});
  CHECK(to_std(build_geometry(9, {1, 2, 5, 7}).selected_positions) == std::vector<double>{0, 1, 4, 6});
  CHECK(to_std(build_geometry(1, {1}).selected_positions) == std::vector<double>{0});

  const ArrayGeometry g = build_geometry(40, {7, 2, 1, 5}, 0.5);
  CHECK(g.omega == std::vector<int>{1, 2, 5, 7});
  CHECK(g.positions[0] == 0.0);
  CHECK(g.positions[39] == 19.5);
  CHECK(to_std(g.selected_positions) == std::vector<double>{0, 0.5, 2.0, 3.0});
  CHECK(g.n_active() == 4);
}

TEST_CASE("build_geometry rejects bad index sets", "[array]") {
  auto kind_of = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Io;
  };
  CHECK(kind_of([] { build_geometry(9, {1, 1, 2}); }) == ErrorKind::InvalidGeometry);
  CHECK(kind_of([] { build_geometry(9, {0, 1}); }) == ErrorKind::InvalidGeometry);
  CHECK(kind_of([] { build_geometry(9, {1, 10}); }) == ErrorKind::InvalidGeometry);
  CHECK(kind_of([] { build_geometry(9, {}); }) == ErrorKind::InvalidGeometry);
}

TEST_CASE("steering vector closed forms", "[array]") {
  RVector d(4);
  d << 0, 1, 2, 3;
  const SteeringSet s0 = steering_set(d, 0.0);
  CHECK(max_abs(s0.a - CVector::Ones(4)) < 1e-15);
  CVector da(4);
  da << 0.0, cd(0, kPi), cd(0, 2 * kPi), cd(0, 3 * kPi);
  CHECK(max_abs(s0.da - da) < 1e-14);

  const SteeringSet s30 = steering_set(d, deg_to_rad(30.0));
  CVector a30(4);
  a30 << 1.0, cd(0, 1), -1.0, cd(0, -1);
  CHECK(max_abs(s30.a - a30) < 1e-14);
}

TEST_CASE("steering derivatives match finite differences", "[array]") {
  RVector d(4);
  d << 0, 1, 4, 6;
  const double theta = deg_to_rad(17.3);
  const std::function<CVector(double)> a = [&](double t) { return steering_set(d, t).a; };
  const std::function<CVector(double)> da = [&](double t) { return steering_set(d, t).da; };
  const SteeringSet s = steering_set(d, theta);
  CHECK(max_abs(s.da - oracle::central_diff(a, theta, 1e-6)) < 1e-6);
  CHECK(max_abs(s.dda - oracle::central_diff(da, theta, 1e-6)) < 1e-5);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> angle(-1.4, 1.4);
  for (int i = 0; i < 50; ++i) {
    const double t = angle(rng);
    const SteeringSet si = steering_set(d, t);
    CHECK(max_abs(si.da - oracle::central_diff(a, t, 1e-6)) < 1e-5);
    CHECK(max_abs(si.dda - oracle::second_diff(a, t, 1e-4)) < 1e-3);
    CHECK(max_abs(si.a.cwiseAbs() - RVector::Ones(4).cast<cd>()) < 1e-14);
    // real positions: a(-theta) = conj(a(theta))
    CHECK(max_abs(steering_set(d, -t).a - si.a.conjugate()) < 1e-14);
  }
}

TEST_CASE("difference co-array and degrees of freedom", "[array]") {
  const VirtualGeometry ula = virtual_geometry(build_geometry(9, {1, 2, 3, 4}));
  CHECK(ula.diff_set == std::vector<double>{-3, -2, -1, 0, 1, 2, 3});
  CHECK(ula.dof == 6);

  const VirtualGeometry mra = virtual_geometry(build_geometry(9, {1, 2, 5, 7}));
  std::vector<double> full;
  for (int i = -6; i <= 6; ++i) full.push_back(i);
  CHECK(mra.diff_set == full);
  CHECK(mra.dof == 12);

  const VirtualGeometry two = virtual_geometry(build_geometry(2, {1, 2}));
  CHECK(to_std(two.virtual_positions) == std::vector<double>{0, -1, 1, 0});

  // dof of an M-port ULA is 2M - 2 and does not move with translation
  for (int m = 1; m <= 6; ++m) {
    std::vector<int> omega, shifted;
    for (int i = 1; i <= m; ++i) {
      omega.push_back(i);
      shifted.push_back(i + 3);
    }
    CHECK(virtual_geometry(build_geometry(12, omega)).dof == 2 * m - 2);
    CHECK(virtual_geometry(build_geometry(12, shifted)).dof == 2 * m - 2);
  }
}

TEST_CASE("co-array uniqueness on a non-integer spacing", "[array]") {
  // 0.1-spaced positions accumulate rounding in their differences.
  const VirtualGeometry vg = virtual_geometry(build_geometry(10, {1, 2, 3, 4}, 0.1));
  CHECK(vg.dof == 6);
  CHECK(unique_sorted({0.3, 0.1 + 0.2, 0.0, -0.0}).size() == 2);
}

TEST_CASE("sum co-array", "[array]") {
  CHECK(sum_coarray(build_geometry(9, {1, 2, 3, 4})) == std::vector<double>{0, 1, 2, 3, 4, 5, 6});
  CHECK(sum_coarray(build_geometry(9, {1, 2, 5, 7})) == std::vector<double>{0, 1, 2, 4, 5, 6, 7, 8, 10, 12});
  CHECK(sum_coarray(build_geometry(1, {1})) == std::vector<double>{0});
}

TEST_CASE("virtual steering vector", "[array]") {
  const VirtualGeometry mra = virtual_geometry(build_geometry(9, {1, 2, 5, 7}));
  CHECK(max_abs(virtual_steering_set(mra, 0.0).a - CVector::Ones(16)) < 1e-15);

  const VirtualGeometry two = virtual_geometry(build_geometry(2, {1, 2}));
  CVector expect(4);
  expect << 1.0, cd(0, -1), cd(0, 1), 1.0;
  CHECK(max_abs(virtual_steering_set(two, deg_to_rad(30.0)).a - expect) < 1e-14);

  const ArrayGeometry g = build_geometry(9, {1, 2, 5, 7});
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> angle(-1.5, 1.5);
  for (int i = 0; i < 50; ++i) {
    const double t = angle(rng);
    const CVector a = steering_vector(g.selected_positions, t);
    CVector kron(16);
    for (int m1 = 0; m1 < 4; ++m1)
      for (int m2 = 0; m2 < 4; ++m2) kron[m1 * 4 + m2] = a[m1] * std::conj(a[m2]);
    const SteeringSet v = virtual_steering_set(mra, t);
    CHECK(max_abs(v.a - kron) < 1e-12);
    const std::function<CVector(double)> b = [&](double x) { return virtual_steering_set(mra, x).a; };
    CHECK(max_abs(v.da - oracle::central_diff(b, t, 1e-6)) < 1e-5);
    CHECK(max_abs(v.dda - oracle::second_diff(b, t, 1e-4)) < 1e-3);
  }
}
