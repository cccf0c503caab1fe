#include "oracles.hpp"
#include "peierls/bloch.hpp"

#include <doctest.h>

using namespace peierls;

namespace {
VectorX vec1(Real x) { return VectorX::Constant(1, x); }
}  // namespace

TEST_CASE("free fiber matrix at k = 0") {
  const FiberMatrix fm = fiber_matrix(vec1(0), zero_potential(cubic_lattice(1)), 1);
  REQUIRE(fm.entries.rows() == 3);
  CHECK(std::abs(fm.entries(0, 0) - 0.5 * two_pi * two_pi) < 1e-12);
  CHECK(std::abs(fm.entries(1, 1)) < 1e-12);
  CHECK(std::abs(fm.entries(2, 2) - 0.5 * two_pi * two_pi) < 1e-12);
  CHECK((fm.entries - MatrixXc(fm.entries.diagonal().asDiagonal())).norm() < 1e-15);
}

TEST_CASE("first Fourier coefficient gives a tridiagonal fiber") {
  const FiberMatrix fm = fiber_matrix(vec1(0.3), mathieu_potential(0.7), 4);
  CHECK(hermiticity_defect(fm.entries) < 1e-12);
  for (Eigen::Index a = 0; a < fm.entries.rows(); ++a)
    for (Eigen::Index b = 0; b < fm.entries.cols(); ++b) {
      if (std::abs(a - b) == 1) CHECK(std::abs(fm.entries(a, b) - 0.7) < 1e-15);
      if (std::abs(a - b) > 1) CHECK(std::abs(fm.entries(a, b)) == 0.0);
    }
  for (Eigen::Index a = 0; a < fm.entries.rows(); ++a) {
    const Real g = two_pi * (static_cast<Real>(a) - 4);
    CHECK(std::abs(fm.entries(a, a) - 0.5 * (0.3 + g) * (0.3 + g)) < 1e-12);
  }
}

TEST_CASE("truncation below the potential support is an error") {
  FourierPotential p = mathieu_potential(1.0);
  p.coefficients[{2}] = 0.1;
  p.coefficients[{-2}] = 0.1;
  CHECK_THROWS_AS(fiber_matrix(vec1(0), p, 1), Error);
  CHECK_NOTHROW(fiber_matrix(vec1(0), p, 2));
  CHECK_THROWS_AS(fiber_matrix(vec1(0), p, 0), Error);
}

TEST_CASE("non-Hermitian coefficients are rejected") {
  FourierPotential p = mathieu_potential(1.0);
  p.coefficients[{1}] = Complex(1.0, 0.2);
  CHECK_THROWS_AS(p.check_hermitian(), Error);
}

TEST_CASE("Mathieu fiber agrees with the real-space difference oracle") {
  const FourierPotential p = mathieu_potential(1.0);
  auto v = [](Real x) { return 2.0 * std::cos(two_pi * x); };
  for (Real k : {0.0, 1.1, -2.5}) {
    Eigen::SelfAdjointEigenSolver<MatrixXc> es(fiber_matrix(vec1(k), p, 8).entries, Eigen::EigenvaluesOnly);
    const VectorX ref = oracle::fd_bloch_eigenvalues(v, k, 256, 3);
    CHECK((es.eigenvalues().head(3) - ref).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("free bands are exact and fold at the zone edge") {
  const KGrid g = make_kgrid(cubic_lattice(1), {64});
  const BandStructure bs = solve_bands(zero_potential(cubic_lattice(1)), g, 2, 3);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Real k = g.point(i)(0);
    CHECK(std::abs(bs.energies(0, static_cast<Eigen::Index>(i)) - 0.5 * k * k) < 1e-10);
  }
  // exact touching at +-pi
  const KGrid edge{cubic_lattice(1), {1}, MatrixX::Constant(1, 1, pi)};
  const BandStructure e = solve_bands(zero_potential(cubic_lattice(1)), edge, 2, 3);
  CHECK(std::abs(e.energies(0, 0) - e.energies(1, 0)) < 1e-10);
  CHECK(check_gap(bs, 0, 0).value < 0.5 * two_pi * 2 * two_pi / 64 + 1e-9);
  CHECK(check_gap(e, 0, 0).value == doctest::Approx(0).epsilon(1e-10));
  CHECK_FALSE(check_gap(e, 0, 0).satisfied);
}

TEST_CASE("Mathieu gap is positive and matches dense diagonalization") {
  const KGrid g = make_kgrid(cubic_lattice(1), {32});
  const FourierPotential p = mathieu_potential(1.0);
  const BandStructure bs = solve_bands(p, g, 8, 3);
  const GapReport gap = check_gap(bs, 0, 0);
  CHECK(gap.satisfied);
  Real ref = 1e300;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const VectorX e = oracle::fd_bloch_eigenvalues([](Real x) { return 2.0 * std::cos(two_pi * x); }, g.point(i)(0), 256, 2);
    ref = std::min(ref, e(1) - e(0));
  }
  CHECK(std::abs(gap.value - ref) < 1e-6);

  // the full stored window measures the distance to the first omitted band
  const GapReport all = check_gap(bs, 0, 2);
  Real expected = 1e300;
  for (Eigen::Index i = 0; i < bs.energies.cols(); ++i) expected = std::min(expected, bs.next_energy(i) - bs.energies(2, i));
  CHECK(all.value == doctest::Approx(expected));
}

TEST_CASE("bands are periodic and spectrally converged") {
  const FourierPotential p = mathieu_potential(1.0);
  const KGrid g = make_kgrid(cubic_lattice(1), {16});
  const BandStructure coarse = solve_bands(p, g, 8, 3);
  const BandStructure fine = solve_bands(p, g, 16, 3);
  CHECK((coarse.energies.row(0) - fine.energies.row(0)).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((coarse.energies - fine.energies).minCoeff() > -1e-10);
  KGrid shifted = g;
  shifted.points.array() += two_pi;
  const BandStructure s = solve_bands(p, shifted, 8, 3);
  CHECK((s.energies - coarse.energies).cwiseAbs().maxCoeff() < 1e-10);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const MatrixXc& v = coarse.states[i];
    CHECK((v.adjoint() * v - MatrixXc::Identity(3, 3)).norm() < 1e-12);
  }
}

TEST_CASE("tau equivariance") {
  const FourierPotential p = mathieu_potential(1.0);
  CHECK(tau_equivariance_check(p, vec1(0.4), {0}, 8) == 0.0);
  CHECK(tau_equivariance_check(zero_potential(cubic_lattice(1)), vec1(0.4), {3}, 8) < 1e-12);
  CHECK(tau_equivariance_check(p, vec1(0.4), {1}, 8) < 1e-10);
  CHECK(tau_equivariance_check(p, vec1(-1.7), {-1}, 8) < 1e-10);
  CHECK_THROWS_AS(tau_equivariance_check(p, vec1(0.4), {9}, 8), Error);

  const FourierPotential q = broken_inversion_potential(0.8, 0.3, 0.7);
  VectorX k(2);
  k << 0.2, -1.1;
  for (const DualIndex& m : {DualIndex{1, 0}, DualIndex{0, 1}, DualIndex{-1, 1}})
    CHECK(tau_equivariance_check(q, k, m, 4) < 1e-10);
}

TEST_CASE("eigenvectors transform by the index shift") {
  const FourierPotential p = mathieu_potential(1.0);
  auto basis = make_plane_wave_basis(p.lattice, 10);
  const Real k = 0.9;
  Eigen::SelfAdjointEigenSolver<MatrixXc> a(fiber_matrix(vec1(k), p, basis).entries);
  Eigen::SelfAdjointEigenSolver<MatrixXc> b(fiber_matrix(vec1(k - two_pi), p, basis).entries);
  CHECK(std::abs(a.eigenvalues()(0) - b.eigenvalues()(0)) < 1e-10);
  // u(k - g) = tau(g) u(k) up to a phase
  const VectorXc shifted = apply_tau(a.eigenvectors().col(0), *basis, {1});
  CHECK(std::abs(std::abs(b.eigenvectors().col(0).dot(shifted)) - 1) < 1e-10);
}
