#include "peierls/quantum.hpp"

#include <doctest.h>

#include <random>

using namespace peierls;

namespace {

WaveFunction random_wave(int cells, int points, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<Real> nd;
  WaveFunction psi = make_wave_function(cubic_lattice(1), cells, points, [&](Real) { return Complex(nd(gen), nd(gen)); });
  psi.samples.normalize();
  return psi;
}

}  // namespace

TEST_CASE("zak transform is unitary and tau-equivariant") {
  const WaveFunction psi = random_wave(9, 7, 3);
  const ZakField zf = zak_transform(psi);
  CHECK(std::abs(zf.norm() - 1) < 1e-12);
  const WaveFunction back = zak_inverse(zf);
  CHECK((back.samples - psi.samples).norm() < 1e-12);

  for (Real k : {0.3, -1.7, 2.9}) {
    const VectorXc u = zak_fiber(psi, k);
    const VectorXc shifted = zak_fiber(psi, k - two_pi);
    Real worst = 0;
    for (int j = 0; j < psi.points; ++j)
      worst = std::max(worst, std::abs(shifted(j) - std::exp(I * (two_pi * psi.position(j))) * u(j)));
    CHECK(worst < 1e-10);
  }
  CHECK_THROWS(zak_transform(random_wave(8, 7, 1)));
}

TEST_CASE("a Bloch wave lives on one fiber") {
  const int cells = 7, points = 6;
  const KGrid grid = make_kgrid(cubic_lattice(1), {cells});
  const Real k = grid.point(2)(0);
  WaveFunction psi = make_wave_function(cubic_lattice(1), cells, points,
                                        [&](Real x) { return std::exp(I * (k * x)) * (1.0 + 0.3 * std::cos(two_pi * x)); });
  psi.samples.normalize();
  const ZakField zf = zak_transform(psi);
  CHECK(std::abs(zf.samples.row(2).norm() - 1) < 1e-12);
  CHECK(zf.samples.norm() - zf.samples.row(2).norm() < 1e-12);
}

TEST_CASE("band projection") {
  const FourierPotential pot = mathieu_potential(1.5);
  const int cells = 5, points = 11;
  const BandStructure bands = solve_bands(pot, make_kgrid(pot.lattice, {cells}), 5, 3);
  const ZakField zf = zak_transform(random_wave(cells, points, 7));
  const ZakField p = band_project(zf, bands, 1);
  const ZakField pp = band_project(p, bands, 1);
  CHECK((p.samples - pp.samples).norm() < 1e-12);
  CHECK(band_project(p, bands, 1, true).norm() < 1e-12);
  const ZakField q = band_project(zf, bands, 1, true);
  CHECK(std::abs(p.norm() * p.norm() + q.norm() * q.norm() - 1) < 1e-12);

  // a Bloch function is left alone by its own projector
  ZakField bloch = zf;
  bloch.samples.setZero();
  bloch.samples.row(3) = cell_samples(bands, 3, points).col(1).transpose();
  CHECK((band_project(bloch, bands, 1).samples - bloch.samples).norm() < 1e-12);
  CHECK(band_project(bloch, bands, 0).norm() < 1e-12);
}

TEST_CASE("propagator") {
  std::mt19937 gen(5);
  std::normal_distribution<Real> nd;
  MatrixXc a(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) a(i, j) = Complex(nd(gen), nd(gen));
  const MatrixXc h = a + a.adjoint();
  const Propagator prop(h, 0.2);
  const MatrixXc u = prop.unitary(0.7);
  CHECK((u * u.adjoint() - MatrixXc::Identity(6, 6)).norm() < 1e-12);
  CHECK((prop.unitary(0) - MatrixXc::Identity(6, 6)).norm() < 1e-12);
  const VectorXc psi = a.col(0);
  CHECK((prop.evolve(prop.evolve(psi, 0.3), 0.4) - prop.evolve(psi, 0.7)).norm() < 1e-11);
  CHECK((prop.heisenberg(h, 1.3) - h).norm() < 1e-11);

  const PhaseSpaceGrid grid = make_phase_space_grid(1, 16, 0.5);
  const VectorXc chi = VectorXc::Constant(16, 0.25);
  const VectorXc out =
      propagate_reference(grid, [](const VectorX&, const VectorX&) { return 1.5; }, zero_field(1, 0.1), chi, 0.4);
  CHECK((out - std::exp(-I * 6.0) * chi).norm() < 1e-12);
}

TEST_CASE("torus quantization matches the kernel on the line") {
  const Real eps = 0.1;
  const PhaseFunction f = [](const VectorX& k, const VectorX& r) {
    return std::cos(k(0)) * (1 + 0.3 * std::sin(two_pi * r(0) / 4)) + 0.2 * std::cos(2 * k(0));
  };
  const int nt = 40;
  const MatrixXc torus = quantize_torus(f, nt, eps, 32);
  CHECK((torus - torus.adjoint()).norm() < 1e-12);

  const PhaseSpaceGrid grid = make_phase_space_grid(1, 33, 1.0);
  const QuantizedOperator op = quantize(
      grid, [&](const VectorX& r, const VectorX& xi) { return Complex(f(xi, r), 0); }, zero_field(1, eps),
      AliasingPolicy::Allow);
  auto wrap = [&](int a) { return ((static_cast<int>(std::lround(grid.position(a)(0))) % nt) + nt) % nt; };
  Real worst = 0;
  for (int a = 0; a < 33; ++a)
    for (int b = 0; b < 33; ++b) {
      const Complex t = std::abs(a - b) <= 3 ? torus(wrap(a), wrap(b)) : Complex(0);
      worst = std::max(worst, std::abs(op.matrix(a, b) - t));
    }
  CHECK(worst < 1e-12);
}

TEST_CASE("magnetic translations: generators and kernel agree on the sign") {
  const int p = 1, q = 5;
  const Real beta = two_pi * p / q;
  const auto [t1, t2] = rotation_generators(p, q, 0.3, 0.1);
  CHECK((t1 * t2 - std::exp(-I * beta) * t2 * t1).norm() < 1e-12);

  const Real eps = 0.1, lambda = 1.0, b = beta / (lambda * eps);
  const PhaseSpaceGrid grid = make_phase_space_grid(2, 10, 1.0);
  const EMFieldConfig field = constant_field(b, eps, lambda);
  const MatrixXc u1 =
      quantize(grid, [](const VectorX&, const VectorX& xi) { return std::exp(-I * xi(0)); }, field, AliasingPolicy::Allow)
          .matrix;
  const MatrixXc u2 =
      quantize(grid, [](const VectorX&, const VectorX& xi) { return std::exp(-I * xi(1)); }, field, AliasingPolicy::Allow)
          .matrix;
  CHECK(interior_norm(grid, u1 * u2 - std::exp(-I * beta) * u2 * u1) < 1e-10);
  CHECK(interior_norm(grid, u1 * u2 - u2 * u1) > 0.5);

  const MatrixXc h = quantize_rotation([](const VectorX& k) { return std::cos(k(0)) + std::cos(k(1)); }, p, q, 0.3, 0.1, 16);
  CHECK((h - 0.5 * (t1 + t1.adjoint() + t2 + t2.adjoint())).norm() < 1e-12);
}

TEST_CASE("rational approximation") {
  const auto r = rational_approximation(3.0 / 7.0, 20);
  REQUIRE(r.has_value());
  CHECK(r->first == 3);
  CHECK(r->second == 7);
  CHECK_FALSE(rational_approximation(std::sqrt(2.0) - 1, 20).has_value());
}

TEST_CASE("egorov error vanishes when nothing moves") {
  const PhaseFunction f = [](const VectorX& k, const VectorX& r) {
    return std::sin(k(0)) * std::cos(two_pi * r(0) / 4) + 0.3 * std::cos(2 * k(0));
  };
  const PhaseFunction h = [](const VectorX& k, const VectorX& r) {
    return std::cos(k(0)) + 0.5 * std::cos(two_pi * r(0) / 4);
  };
  CHECK(egorov_error_torus(f, h, 0.1, 4, 0.0) < 1e-12);
  // k-only symbols commute with a k-only Hamiltonian and the flow fixes k
  const PhaseFunction g = [](const VectorX& k, const VectorX&) { return std::sin(k(0)) + 0.2 * std::cos(3 * k(0)); };
  const PhaseFunction e = [](const VectorX& k, const VectorX&) { return std::cos(k(0)); };
  CHECK(egorov_error_torus(g, e, 0.1, 4, 1.0) < 1e-10);
  CHECK(egorov_error_torus(f, h, 0.1, 4, 0.5) > 1e-4);
}

TEST_CASE("free packet moves at the group velocity") {
  const Real eps = 0.1, k0 = 0.5, sigma = 1 / std::sqrt(eps);
  const int cells = 81, points = 6;
  const Real centre = 0.5 * cells;
  const Lattice lat = cubic_lattice(1);
  WaveFunction psi = make_wave_function(lat, cells, points, [&](Real x) {
    const Real y = x - centre;
    return std::exp(-y * y / (2 * sigma * sigma) + I * (k0 * y));
  });
  psi.samples.normalize();
  const Propagator prop(real_space_hamiltonian(zero_potential(lat), cells, points, eps, 0, centre).cast<Complex>(), eps);
  auto mean = [&](const VectorXc& v) {
    Real m = 0;
    for (int i = 0; i < v.size(); ++i) m += std::norm(v(i)) * psi.position(i);
    return eps * m;
  };
  const Real r0 = mean(psi.samples);
  for (Real t : {0.25, 0.5, 1.0}) CHECK(std::abs((mean(prop.evolve(psi.samples, t)) - r0) / t - k0) < 1e-6);
}

TEST_CASE("Bloch oscillation follows the corrected flow") {
  const SemiclassicalReport rep = semiclassical_limit_check(SemiclassicalSetup{}, 0.1);
  CHECK(rep.edge_weight < 1e-6);
  CHECK(rep.error < 0.02);
  CHECK(rep.averaged_error < 2e-3);
  CHECK(rep.leakage < 0.1);
}
