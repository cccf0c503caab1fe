#pragma once

#include "peierls/lattice.hpp"

#include <map>
#include <memory>
#include <optional>

namespace peierls {

/// Integer coordinates of a dual lattice vector, gamma* = sum_j m_j e*_j.
using DualIndex = std::vector<int>;

/// Periodic potential V(y) = sum V(gamma*) exp(i gamma* . y), stored by dual-lattice coefficient.
struct FourierPotential {
  Lattice lattice;
  std::map<DualIndex, Complex> coefficients;

  /// Largest |m_j| over the support.
  int support_radius() const;
  /// Throws unless V(-g) = conj V(g) to `tol`.
  void check_hermitian(Real tol = 1e-12) const;
  Complex coefficient(const DualIndex& m) const;
  /// V evaluated at a real-space point.
  Real evaluate(const VectorX& y) const;
};

FourierPotential zero_potential(const Lattice& lat);
/// 1D V(y) = 2 v cos(2 pi y) on the unit lattice: V(+-2 pi) = v.
FourierPotential mathieu_potential(Real v);
/// 2D square lattice, V(y) = 2 v (cos 2 pi y1 + cos 2 pi y2).
FourierPotential mathieu2d_potential(Real v);
/// 2D square lattice without inversion symmetry:
/// 2 v (cos 2 pi y1 + cos 2 pi y2) + 2 w cos(2 pi (y1 + y2) + theta).
FourierPotential broken_inversion_potential(Real v, Real w, Real theta);

/// Plane waves gamma* with |m_j| <= cutoff in every direction.
struct PlaneWaveBasis {
  Lattice lattice;
  int cutoff = 0;
  std::vector<DualIndex> indices;
  std::map<DualIndex, int> lookup;
  MatrixX vectors;  // d x size, Cartesian gamma*

  int size() const { return static_cast<int>(indices.size()); }
  std::optional<int> find(const DualIndex& m) const;
};

std::shared_ptr<const PlaneWaveBasis> make_plane_wave_basis(const Lattice& lat, int cutoff);

struct FiberMatrix {
  VectorX k;
  int cutoff = 0;
  std::shared_ptr<const PlaneWaveBasis> basis;
  MatrixXc entries;
};

/// H(k)_{g,g'} = |k+g|^2/2 delta_{g,g'} + V(g-g').
FiberMatrix fiber_matrix(const VectorX& k, const FourierPotential& potential, int cutoff);
FiberMatrix fiber_matrix(const VectorX& k, const FourierPotential& potential,
                         std::shared_ptr<const PlaneWaveBasis> basis);

/// Coefficients of tau(gamma*) u, (tau c)_g = c_{g - gamma*}; entries shifted outside the basis are dropped.
VectorXc apply_tau(const VectorXc& coefficients, const PlaneWaveBasis& basis, const DualIndex& shift);

struct BandStructure {
  KGrid kgrid;
  FourierPotential potential;
  int cutoff = 0;
  std::shared_ptr<const PlaneWaveBasis> basis;
  MatrixX energies;              // bands x k-points, ascending in band index
  VectorX next_energy;           // first band above those stored, NaN if the basis has none
  std::vector<MatrixXc> states;  // per k: basis size x bands, orthonormal columns
  int relevant_index = 0;

  int band_count() const { return static_cast<int>(energies.rows()); }
};

BandStructure solve_bands(const FourierPotential& potential, const KGrid& kgrid, int cutoff, int n_bands);

struct GapReport {
  Real value = 0;
  bool satisfied = false;
};

/// Infimum over the grid of the distance between bands [first, last] and all other stored bands
/// (including the first omitted band when available).
GapReport check_gap(const BandStructure& bands, int first, int last, Real tolerance = 1e-9);

/// Operator norm of H(k - gamma*) - tau(gamma*) H(k) tau(gamma*)^-1 on the block where both sides
/// are represented in the truncated basis.
Real tau_equivariance_check(const FourierPotential& potential, const VectorX& k, const DualIndex& shift,
                            int cutoff);

/// Degeneracy threshold used across band selection.
inline constexpr Real degeneracy_tolerance = 1e-9;

}  // namespace peierls
