#include "peierls/lattice.hpp"

#include <doctest.h>

using namespace peierls;

TEST_CASE("dual basis pairs to 2 pi identity") {
  MatrixX b(2, 2);
  b << 1.0, 0.5, 0.0, std::sqrt(3.0) / 2;
  const Lattice lat = make_lattice(b);
  const MatrixX pairing = lat.basis.transpose() * lat.dual;
  CHECK((pairing - two_pi * MatrixX::Identity(2, 2)).norm() < 1e-12);
  CHECK(lat.bz_volume() * lat.cell_volume() == doctest::Approx(two_pi * two_pi));
}

TEST_CASE("triangular dual basis matches the closed form") {
  MatrixX b(2, 2);
  b << 1.0, 0.5, 0.0, std::sqrt(3.0) / 2;
  const Lattice lat = make_lattice(b);
  MatrixX expected(2, 2);
  // rows of b^{-1} times 2 pi
  expected << two_pi, 0.0, -two_pi / std::sqrt(3.0), 2 * two_pi / std::sqrt(3.0);
  CHECK((lat.dual - expected).norm() < 1e-12);
}

TEST_CASE("degenerate bases are rejected") {
  MatrixX b(2, 2);
  b << 1.0, 2.0, 0.5, 1.0;
  CHECK_THROWS_AS(make_lattice(b), Error);
  MatrixX r(2, 3);
  r.setRandom();
  CHECK_THROWS_AS(make_lattice(r), Error);
}

TEST_CASE("wrap_to_bz is idempotent and lattice invariant") {
  MatrixX b(2, 2);
  b << 1.0, 0.3, 0.2, 1.1;
  const Lattice lat = make_lattice(b);
  std::srand(7);
  for (int trial = 0; trial < 200; ++trial) {
    const VectorX k = 20 * VectorX::Random(2);
    const VectorX w = wrap_to_bz(k, lat);
    CHECK((wrap_to_bz(w, lat) - w).norm() < 1e-12);
    const VectorX alpha = lat.dual_coefficients(w);
    CHECK(alpha.maxCoeff() < 0.5);
    CHECK(alpha.minCoeff() >= -0.5);
    const VectorX shifted = k + 3 * lat.dual.col(0) - 2 * lat.dual.col(1);
    CHECK((wrap_to_bz(shifted, lat) - w).norm() < 1e-10);
  }
}

TEST_CASE("half-open convention at the zone edge") {
  const Lattice lat = cubic_lattice(1);
  VectorX k(1);
  k << pi;
  CHECK(wrap_to_bz(k, lat)(0) == doctest::Approx(-pi));
  k << -pi;
  CHECK(wrap_to_bz(k, lat)(0) == doctest::Approx(-pi));
}

TEST_CASE("k-grid points are cell centered and neighbors record crossings") {
  const KGrid g = make_kgrid(cubic_lattice(2), {4, 3});
  CHECK(g.size() == 12);
  CHECK(g.point(0)(0) == doctest::Approx(-two_pi * 3 / 8));
  CHECK(g.point(0)(1) == doctest::Approx(-two_pi / 3));
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(g.flat_index(g.multi_index(i)) == i);
    for (int axis = 0; axis < 2; ++axis)
      for (int step : {-1, 1}) {
        int shift = 0;
        const std::size_t nb = g.neighbor(i, axis, step, &shift);
        const VectorX lhs = g.point(i) + step * g.step(axis);
        const VectorX rhs = g.point(nb) + shift * g.lattice.dual.col(axis);
        CHECK((lhs - rhs).norm() < 1e-12);
      }
  }
  CHECK_THROWS_AS(make_kgrid(cubic_lattice(2), {4}), Error);
  CHECK_THROWS_AS(make_kgrid(cubic_lattice(1), {0}), Error);
}
