#pragma once

#include "peierls/bloch.hpp"

namespace peierls {

/// Eigen-decomposed Hermitian family over a k-grid. `glue(u, m)` returns the state at the unwrapped
/// point k + sum_j m_j e*_j given the state u stored at k; an empty glue means periodic fibers.
struct BlochFamily {
  KGrid kgrid;
  MatrixX energies;             // bands x k-points
  VectorX next_energy;          // optional, energy of the first band above those stored
  std::vector<MatrixXc> states; // per k: fiber dimension x bands
  std::function<MatrixXc(const VectorX&)> hamiltonian;
  std::function<VectorXc(const VectorXc&, const DualIndex&)> glue;

  int band_count() const { return static_cast<int>(energies.rows()); }
  VectorXc unwrap(const VectorXc& u, const DualIndex& m) const;
};

/// Plane-wave family with tau-gluing u(k + g) = tau(-g) u(k).
BlochFamily make_family(const BandStructure& bands);
/// Full diagonalization of a small matrix-valued map on the grid.
BlochFamily make_family(const KGrid& kgrid, std::function<MatrixXc(const VectorX&)> hamiltonian,
                        std::function<VectorXc(const VectorXc&, const DualIndex&)> glue = {});

/// Single-band frame after parallel-transport gauge fixing.
struct GaugeFrame {
  KGrid kgrid;
  int band = 0;
  std::vector<VectorXc> vectors;
  VectorX energies;
  std::function<MatrixXc(const VectorX&)> hamiltonian;
  std::function<VectorXc(const VectorXc&, const DualIndex&)> glue;

  /// Frame vector at point(i) + step * grid step along axis, continued across the zone boundary.
  VectorXc neighbor_state(std::size_t i, int axis, int step) const;
  /// Overlap <u(k_i), u(k_i + step along axis)>.
  Complex link(std::size_t i, int axis) const;
};

/// Aligns phases along grid lines (axis 0 first, then successive axes), spreading each closing
/// Wilson-loop phase uniformly over its line. The seed point has its first significant coefficient
/// real and positive.
GaugeFrame fix_gauge(const BlochFamily& family, int band);

struct ConnectionField {
  MatrixX values;        // d x k-points, Cartesian components
  Real imaginary_residue = 0;
};

ConnectionField berry_connection(const GaugeFrame& frame);

/// Gauge-invariant Berry phase of the closed line through point `start` along `axis`,
/// minus the argument of the product of link overlaps. Result in (-pi, pi].
Real wilson_loop_phase(const GaugeFrame& frame, int axis, std::size_t start = 0);
/// Same loop integrated from the finite-difference connection.
Real connection_loop_integral(const GaugeFrame& frame, const ConnectionField& a, int axis, std::size_t start = 0);

struct CurvatureField {
  /// Per base point, d x d antisymmetric; entry (l, j) belongs to the plaquette spanned by grid steps
  /// along l and j starting at the base point.
  std::vector<MatrixX> values;
  /// Plaquette phase arguments F_lj.
  std::vector<MatrixX> flux;
  std::optional<Real> chern;  // d = 2 only
};

/// Link-variable curvature. Throws GridRefinement when a plaquette phase is within `branch_margin`
/// of pi.
CurvatureField berry_curvature(const GaugeFrame& frame, Real branch_margin = 1e-3);

struct RammalWilkinsonField {
  std::vector<MatrixX> values;  // per k, d x d Cartesian
  Real imaginary_residue = 0;
};

/// Uses locally aligned differences, so it is well defined even where no smooth periodic frame exists.
RammalWilkinsonField rammal_wilkinson(const GaugeFrame& frame);

/// Grid derivatives (u(k+dk_a) - u(k-dk_a)) / 2 of the frame along each grid axis, unscaled.
/// With `local_alignment` the two neighbors are first phase-aligned to u(k), which makes
/// gauge-invariant quadratic forms independent of the global frame.
std::vector<VectorXc> frame_differences(const GaugeFrame& frame, std::size_t i, bool local_alignment = false);

/// Matrix S^{-T} converting per-grid-step derivatives to Cartesian gradients.
MatrixX grid_to_cartesian(const KGrid& kgrid);

struct GeometricTensors {
  KGrid kgrid;
  int band = 0;
  ConnectionField connection;
  CurvatureField curvature;
  RammalWilkinsonField rw_tensor;
};

GeometricTensors band_geometry(const BlochFamily& family, int band);

}  // namespace peierls
