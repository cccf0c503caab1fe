#pragma once

#include "peierls/flow.hpp"

namespace peierls {

/// Samples of a wave function on a one-dimensional periodic box of `cells` unit cells with
/// `points` samples per cell; x_i = i a / points. Discrete l2 normalization.
struct WaveFunction {
  Lattice lattice;
  int cells = 0;
  int points = 0;
  VectorXc samples;

  Real spacing() const { return lattice.basis(0, 0) / points; }
  Real position(int i) const { return i * spacing(); }
  Real norm() const { return samples.norm(); }
};

WaveFunction make_wave_function(const Lattice& lattice, int cells, int points, const std::function<Complex(Real)>& f);

/// u(k_q, y_j) = cells^-1/2 sum_c exp(-i k_q (y_j + c a)) psi(y_j + c a) on the k-grid with one point per
/// cell. Rows are k-points, columns cell samples.
struct ZakField {
  KGrid kgrid;
  int points = 0;
  MatrixXc samples;

  Real norm() const { return samples.norm(); }
};

/// Requires an odd number of cells so the transform grid coincides with make_kgrid.
ZakField zak_transform(const WaveFunction& psi);
WaveFunction zak_inverse(const ZakField& zf);
/// The same sum at an arbitrary k (not restricted to the transform grid).
VectorXc zak_fiber(const WaveFunction& psi, Real k);

/// Cell-grid samples of the Bloch functions u_b(k_i, y_j) for every band stored, unit discrete norm.
MatrixXc cell_samples(const BandStructure& bands, std::size_t k_index, int points);

/// Fiberwise projection onto one band, or onto its complement.
ZakField band_project(const ZakField& zf, const BandStructure& bands, int band, bool complement = false);

/// e^{-i (t / eps) H} through a cached eigendecomposition of a Hermitian matrix.
class Propagator {
 public:
  Propagator(const MatrixXc& h, Real eps);
  VectorXc evolve(const VectorXc& psi, Real t) const;
  /// e^{+i (t/eps) H} A e^{-i (t/eps) H}.
  MatrixXc heisenberg(const MatrixXc& a, Real t) const;
  MatrixXc unitary(Real t) const;

 private:
  VectorX values_;
  MatrixXc vectors_;
  Real eps_ = 1;
};

/// psi(t) under Op^A(h) on the phase-space grid; symbols are evaluated as h(xi, r).
VectorXc propagate_reference(const PhaseSpaceGrid& grid, const PhaseFunction& h, const EMFieldConfig& field,
                             const VectorXc& psi, Real t);

/// Weyl quantization of a k-periodic symbol on the lattice torus Z / nZ, n = period / eps, with
/// r = eps x: M_ab = c_{a-b}(eps (a+b)/2), c_d(r) = (2 pi)^-1 int f(k, r) e^{i k d} dk from
/// `k_samples` equispaced samples.
MatrixXc quantize_torus(const PhaseFunction& f, int n, Real eps, int k_samples);

struct EgorovSettings {
  int k_samples = 32;  // 0: largest even value below the torus size (1D only)
  Real dt = 0.01;
};

/// ||e^{i(t/eps)H} Op(f) e^{-i(t/eps)H} - Op(f o Phi_t)|| on the one-dimensional lattice torus of
/// r-period `period`, B = 0, Phi_t the flow of h.
Real egorov_error_torus(const PhaseFunction& f, const PhaseFunction& h, Real eps, Real period, Real t,
                        const EgorovSettings& settings = {});

/// Rational approximation p/q of x with q <= max_q, exact to 1e-12, else nullopt.
std::optional<std::pair<int, int>> rational_approximation(Real x, int max_q);

/// Magnetic translations T_1, T_2 on C^q at quasi-momenta theta with
/// T_1 T_2 = e^{-i beta} T_2 T_1, beta = 2 pi p / q.
std::pair<MatrixXc, MatrixXc> rotation_generators(int p, int q, Real theta1, Real theta2);

/// Op(f) = sum_s c_s e^{i beta s1 s2 / 2} T_1^s1 T_2^s2 for f(k) = sum_s c_s e^{-i s.k}, a k-only symbol
/// in the constant-field lattice algebra.
MatrixXc quantize_rotation(const std::function<Real(const VectorX&)>& f, int p, int q, Real theta1, Real theta2,
                           int k_samples);

/// Egorov error for k-only symbols in a constant field B_12 = b: the flux per cell lambda eps b must
/// be 2 pi p / q with q <= 400. Supremum over a `theta_points`^2 grid of quasi-momenta.
Real egorov_error_constant_field(const std::function<Real(const VectorX&)>& f,
                                 const std::function<Real(const VectorX&)>& energy, Real b, Real lambda, Real eps,
                                 Real t, int theta_points = 3, const EgorovSettings& settings = {64, 0.01});

/// -1/2 d^2/dx^2 + V(x) + force eps (x - centre) on the periodic box of `cells` cells, eighth-order
/// central differences.
MatrixX real_space_hamiltonian(const FourierPotential& pot, int cells, int points, Real eps, Real force, Real centre);

/// Real-space comparison of a band wave packet with the semiclassical flow in a constant force,
/// one dimension.
struct SemiclassicalSetup {
  FourierPotential potential = mathieu_potential(4.0);
  int band = 0;
  int cutoff = 5;
  int points = 12;  // at least 2 cutoff + 1
  Real force = 4;   // phi(r) = force * r
  Real k0 = 0;
  Real t_final = 3;
  int samples = 6;  // comparison times in (0, t_final]
  Real width = 1;   // packet width in cells is width / sqrt(eps)
};

struct SemiclassicalReport {
  Real eps = 0;
  int cells = 0;
  Real error = 0;           // sup over sample times of |Delta<r> - Delta r_flow(k0, r0)|
  Real averaged_error = 0;  // same against the flow averaged over the packet's quasi-momentum weights
  Real leakage = 0;      // weight outside the band after projection
  Real edge_weight = 0;  // largest weight outside the interior window
  Real norm_defect = 0;
  std::vector<Real> times;
  std::vector<Real> mean_shift;  // <r>(t) - <r>(0)
};

/// Throws BoxSize when more than 1e-6 of the weight reaches the outer tenth on either side of the box.
SemiclassicalReport semiclassical_limit_check(const SemiclassicalSetup& setup, Real eps);

}  // namespace peierls
