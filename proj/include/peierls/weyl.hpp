#pragma once

#include "peierls/common.hpp"

#include <string>

namespace peierls {

/// Uniform position grid x_a = origin + a h (n points per axis, axis 0 fastest) together with the
/// derived symbol grids: midpoints origin + t h/2 (2n-1 per axis) and momenta -pi/h + j pi/(n h)
/// (2n per axis).
struct PhaseSpaceGrid {
  int dim = 1;
  int n = 0;
  Real h = 1;
  VectorX origin;

  int positions() const { return ipow(n, dim); }
  int midpoints() const { return ipow(2 * n - 1, dim); }
  int momenta() const { return ipow(2 * n, dim); }

  VectorX position(int a) const;
  VectorX midpoint(int t) const;
  VectorX momentum(int j) const;
  std::vector<int> unflatten(int flat, int extent) const;
  int flatten(const std::vector<int>& multi, int extent) const;

  /// Positions (or midpoints) whose every coordinate lies in the central half of the box.
  bool interior_position(int a) const;
  bool interior_midpoint(int t) const;
  /// Momenta with every component inside the inner half band |xi_l| < pi / (2h).
  bool inner_momentum(int j) const;

  static int ipow(int b, int e) {
    int r = 1;
    while (e-- > 0) r *= b;
    return r;
  }
};

/// Box centred at the origin.
PhaseSpaceGrid make_phase_space_grid(int dim, int n, Real h);

enum class GaugeTag { Zero, Linear, General };

/// External fields as functions of the macroscopic coordinate r = eps x.
struct EMFieldConfig {
  int dim = 1;
  std::function<MatrixX(const VectorX&)> B;
  std::function<Real(const VectorX&)> phi;
  std::function<VectorX(const VectorX&)> A;
  GaugeTag gauge = GaugeTag::Zero;
  bool constant_B = true;
  Real lambda = 1;
  Real eps = 0.1;

  /// Antisymmetry of B and, for constant B with a linear gauge, dA = B at random points.
  void validate(unsigned seed = 1) const;
  /// Line integral of A(eps .) along the segment from x to y (microscopic coordinates).
  Real line_integral(const VectorX& x, const VectorX& y) const;
  MatrixX field(const VectorX& r) const;
};

EMFieldConfig zero_field(int dim, Real eps, Real lambda = 1);
enum class ConstantGauge { Symmetric, Landau };
/// 2D constant field B_12 = b; symmetric A = b/2 (-r2, r1) or Landau A = (0, b r1).
EMFieldConfig constant_field(Real b, Real eps, Real lambda, ConstantGauge gauge = ConstantGauge::Symmetric);

using SymbolFunction = std::function<Complex(const VectorX& r, const VectorX& xi)>;

/// Samples f(eps c, xi) on midpoints c and momenta xi of a phase-space grid.
struct GridSymbol {
  PhaseSpaceGrid grid;
  Real eps = 0.1;
  MatrixXc samples;  // midpoints x momenta
  bool scalar = true;
  std::string id;
  /// Midpoints where the sample values are trustworthy (set by dequantize and stencils).
  std::vector<char> valid;

  Complex at(int t, int j) const { return samples(t, j); }
};

GridSymbol sample_symbol(const PhaseSpaceGrid& grid, Real eps, const SymbolFunction& f, std::string id = {});

struct QuantizedOperator {
  PhaseSpaceGrid grid;
  MatrixXc matrix;
  std::string symbol_id;
  GaugeTag gauge = GaugeTag::Zero;
  Real eps = 0;
  Real lambda = 0;
};

enum class AliasingPolicy {
  Check,  // require the symbol to vanish outside the inner half band
  Allow,  // polynomial or otherwise unbounded-in-xi symbols, only valid on band-limited states
};

/// Magnetic Weyl quantization,
/// K(x_a, x_b) = (2n)^-d sum_j exp(i xi_j (x_a - x_b)) exp(-i lambda Gamma^A[x_a, x_b]) f(eps (x_a + x_b)/2, xi_j).
QuantizedOperator quantize(const GridSymbol& f, const EMFieldConfig& field, AliasingPolicy policy = AliasingPolicy::Check);
/// Same kernel with the symbol evaluated on the fly (no stored samples; suited to 2D grids).
QuantizedOperator quantize(const PhaseSpaceGrid& grid, const SymbolFunction& f, const EMFieldConfig& field,
                           AliasingPolicy policy = AliasingPolicy::Check, std::string id = {});

/// Inverse of quantize on the inner half band; midpoints too close to the box edge are flagged
/// invalid.
GridSymbol dequantize(const QuantizedOperator& op, const EMFieldConfig& field);

GridSymbol exact_product(const GridSymbol& f, const GridSymbol& g, const EMFieldConfig& field);

/// {f, g}_{lambda B} = sum_l (d_xi f d_r g - d_r f d_xi g) - lambda sum_lj B_lj d_xi_l f d_xi_j g,
/// fourth-order centred differences; stencil-boundary samples are flagged invalid.
GridSymbol magnetic_poisson(const GridSymbol& f, const GridSymbol& g, const EMFieldConfig& field);

/// order 0: f g; order 1: f g - (i eps / 2) {f, g}_{lambda B}.
GridSymbol expanded_product(const GridSymbol& f, const GridSymbol& g, const EMFieldConfig& field, int order);

/// Largest deviation over valid midpoints and inner momenta.
Real symbol_distance(const GridSymbol& a, const GridSymbol& b);

/// Operator-norm deviation, on the central window, between Op^{A + d chi}(f) and
/// exp(i lambda chi(Q) / eps) Op^A(f) exp(-i lambda chi(Q) / eps).
Real gauge_covariance_check(const GridSymbol& f, const EMFieldConfig& field, const std::function<Real(const VectorX&)>& chi,
                            const std::function<VectorX(const VectorX&)>& grad_chi);

/// Operator norm of the central window of a matrix on the position grid.
Real interior_norm(const PhaseSpaceGrid& grid, const MatrixXc& m);

struct CommutationReport {
  Real position_position = 0;
  Real position_momentum = 0;
  Real momentum_momentum = 0;
  int probes = 0;
};

/// Checks [Q_l, Q_j] = 0, -i [Q_l, P_j] = eps delta_lj and -i [P_l, P_j] = eps lambda B_lj(Q) on
/// Gaussian probe states near the box centre; residuals are measured on the central window.
CommutationReport commutation_check(const PhaseSpaceGrid& grid, const EMFieldConfig& field, int probes = 6,
                                    unsigned seed = 11);

}  // namespace peierls
