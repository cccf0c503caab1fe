#pragma once

#include "peierls/common.hpp"

#include <array>
#include <cmath>

namespace peierls {

/// Bravais lattice in d <= 3 dimensions. Columns of `basis` are e_j, columns of `dual` are e*_j
/// with e_j . e*_k = 2 pi delta_jk.
template <typename Scalar>
struct BasicLattice {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  int dim = 0;
  Matrix basis;
  Matrix dual;

  /// Coefficients alpha with k = sum_j alpha_j e*_j.
  Vector dual_coefficients(const Vector& k) const { return basis.transpose() * k / Scalar(two_pi); }
  /// Coefficients alpha with x = sum_j alpha_j e_j.
  Vector direct_coefficients(const Vector& x) const { return dual.transpose() * x / Scalar(two_pi); }

  /// Volume of the Brillouin zone.
  Scalar bz_volume() const { return std::abs(dual.determinant()); }
  Scalar cell_volume() const { return std::abs(basis.determinant()); }
};

using Lattice = BasicLattice<Real>;

/// Dual basis satisfying e_j . e*_k = 2 pi delta_jk. Throws on a singular basis.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> dual_basis(
    const Eigen::MatrixBase<Derived>& basis) {
  using Scalar = typename Derived::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (basis.rows() != basis.cols() || basis.rows() < 1 || basis.rows() > 3)
    throw Error(ErrorKind::DegenerateLattice, "lattice basis must be a square d x d matrix with d in {1,2,3}");
  const Matrix gram = basis.transpose() * basis;
  if (!(gram.determinant() > Scalar(1e-12)))
    throw Error(ErrorKind::DegenerateLattice, "lattice basis vectors are linearly dependent");
  // e_j^T e*_k = 2 pi delta  =>  basis^T dual = 2 pi I
  return Scalar(two_pi) * basis.transpose().fullPivLu().solve(Matrix::Identity(basis.rows(), basis.cols()));
}

template <typename Derived>
BasicLattice<typename Derived::Scalar> make_lattice(const Eigen::MatrixBase<Derived>& basis) {
  BasicLattice<typename Derived::Scalar> lat;
  lat.dim = static_cast<int>(basis.rows());
  lat.basis = basis;
  lat.dual = dual_basis(basis);
  return lat;
}

/// Square (hypercubic) lattice with unit spacing.
inline Lattice cubic_lattice(int dim) { return make_lattice(MatrixX::Identity(dim, dim)); }

/// Reduces a coefficient to the half-open interval [-1/2, 1/2).
template <typename Scalar>
Scalar wrap_coefficient(Scalar a) {
  Scalar r = a - std::floor(a + Scalar(0.5));
  if (r >= Scalar(0.5) - Scalar(1e-12)) r -= 1;
  return r;
}

/// Representative of k modulo the dual lattice inside the centered cell alpha_j in [-1/2, 1/2).
template <typename Scalar>
typename BasicLattice<Scalar>::Vector wrap_to_bz(const typename BasicLattice<Scalar>::Vector& k,
                                                 const BasicLattice<Scalar>& lat) {
  typename BasicLattice<Scalar>::Vector alpha = lat.dual_coefficients(k);
  for (Eigen::Index j = 0; j < alpha.size(); ++j) alpha(j) = wrap_coefficient(alpha(j));
  return lat.dual * alpha;
}

inline VectorX wrap_to_bz(const VectorX& k, const Lattice& lat) { return wrap_to_bz<Real>(k, lat); }

/// Uniform grid in the centered Brillouin zone. Point i has multi-index (i_0, i_1, ...) with i_0
/// running fastest and coefficients alpha_j = -1/2 + (2 i_j + 1) / (2 n_j).
struct KGrid {
  Lattice lattice;
  std::vector<int> shape;
  MatrixX points;  // d x count

  int dim() const { return lattice.dim; }
  std::size_t size() const { return static_cast<std::size_t>(points.cols()); }
  VectorX point(std::size_t i) const { return points.col(static_cast<Eigen::Index>(i)); }

  std::vector<int> multi_index(std::size_t flat) const;
  std::size_t flat_index(const std::vector<int>& multi) const;

  /// Neighbor along `axis` displaced by `step` (+1 or -1), periodic. `shift` receives the integer
  /// number of dual basis vectors crossed: point(i) + step*dk = point(neighbor) + shift*e*_axis.
  std::size_t neighbor(std::size_t i, int axis, int step, int* shift = nullptr) const;

  /// Spacing of the grid along `axis` as a Cartesian vector, e*_axis / n_axis.
  VectorX step(int axis) const { return lattice.dual.col(axis) / shape[static_cast<std::size_t>(axis)]; }
};

KGrid make_kgrid(const Lattice& lat, const std::vector<int>& shape);

}  // namespace peierls
