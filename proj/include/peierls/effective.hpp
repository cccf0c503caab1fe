#pragma once

#include "peierls/geometry.hpp"
#include "peierls/weyl.hpp"

namespace peierls {

/// Trigonometric interpolant of grid samples over the Brillouin zone, exactly periodic under the
/// dual lattice. Even grids split the Nyquist term symmetrically so real data stays real.
class TrigInterp {
 public:
  TrigInterp() = default;
  TrigInterp(const KGrid& kgrid, const VectorX& values);

  Real operator()(const VectorX& k) const;
  VectorX gradient(const VectorX& k) const;

 private:
  Lattice lattice_;
  std::vector<int> shape_;
  std::vector<std::vector<int>> freqs_;
  std::vector<std::vector<Real>> weights_;
  VectorXc coeffs_;

  Complex evaluate(const VectorX& k, int derivative_axis) const;
};

/// Smooth single-band data as functions of Cartesian k.
struct BandModel {
  Lattice lattice;
  std::function<Real(const VectorX&)> energy;
  std::function<VectorX(const VectorX&)> energy_gradient;
  std::function<VectorX(const VectorX&)> connection;
  /// (l, j) -> d A_j / d k_l
  std::function<MatrixX(const VectorX&)> connection_jacobian;
  std::function<MatrixX(const VectorX&)> rw_tensor;

  int dim() const { return lattice.dim; }
  /// Omega_lj = d_l A_j - d_j A_l.
  MatrixX curvature(const VectorX& k) const;
};

/// Interpolates energy, connection and Rammal-Wilkinson tensor of a gauge-fixed band.
BandModel band_model(const GeometricTensors& geom, const VectorX& energies);
/// Refuses bands that touch a neighbour anywhere on the grid.
BandModel band_model(const BandStructure& bands, int band);

using PhaseFunction = std::function<Real(const VectorX& k, const VectorX& r)>;

/// E_b(k) + phi(r).
PhaseFunction peierls_h0(const BandModel& band, const EMFieldConfig& field);
/// -F_l A_l - lambda B_lj M_lj with F_l = -d_l phi + lambda B_lj d_j E_b (full double sum).
PhaseFunction peierls_h1(const BandModel& band, const EMFieldConfig& field);
/// h0 + eps h1 with eps taken from the field.
PhaseFunction peierls_heff(const BandModel& band, const EMFieldConfig& field);
/// E_b(k) + phi(r) - eps lambda B_lj(r) M_lj(k), a function of the effective variables.
PhaseFunction semiclassical_h(const BandModel& band, const EMFieldConfig& field);

struct PhasePoint {
  VectorX k;
  VectorX r;
};

/// k_eff = k + eps lambda B(r) A(k), r_eff = r + eps A(k).
PhasePoint t_eff(const PhasePoint& x, const BandModel& band, const EMFieldConfig& field);
/// Fixed-point inverse of t_eff to residual 1e-12; throws Convergence after 50 iterations.
PhasePoint t_eff_inverse(const PhasePoint& y, const BandModel& band, const EMFieldConfig& field);

/// Samples of f o T_eff on the phase-space grid (r = eps x, xi = k). Rejects f that is not
/// periodic in k.
GridSymbol effective_observable(const PhaseSpaceGrid& grid, const PhaseFunction& f, const BandModel& band,
                                const EMFieldConfig& field, std::string id = {});

}  // namespace peierls
