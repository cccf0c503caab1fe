#pragma once

#include "peierls/effective.hpp"

namespace peierls {

/// Time derivative of a phase-space point, stored as (k_dot, r_dot).
using VectorField = std::function<PhasePoint(const PhasePoint&)>;

/// r_dot = grad_k h, k_dot = -grad_r h + lambda B(r) grad_k h.
PhasePoint vector_field_magnetic(const PhasePoint& x, const PhaseFunction& h, const EMFieldConfig& field);

/// Solves [[lambda B(r), -I], [I, eps Omega(k)]] (r_dot, k_dot) = (grad_r h, grad_k h). `det` receives
/// the determinant of the structure matrix; throws Geometry when |det| < 1e-10.
PhasePoint vector_field_corrected(const PhasePoint& x, const PhaseFunction& h, const EMFieldConfig& field,
                                  const BandModel& band, Real* det = nullptr);

/// Poisson tensor of the corrected structure, the inverse of the matrix above, ordered (r, k), so that
/// z_dot = P grad h and {z_a, z_b} = P_ab.
MatrixX poisson_tensor(const PhasePoint& x, const EMFieldConfig& field, const BandModel& band);

VectorField magnetic_flow(const PhaseFunction& h, const EMFieldConfig& field);
VectorField corrected_flow(const PhaseFunction& h, const EMFieldConfig& field, const BandModel& band);

struct Trajectory {
  std::vector<Real> times;
  std::vector<PhasePoint> states;
  std::vector<Real> energy;
  Real energy_drift = 0;
  /// Final-state difference against a run at half the step, when requested.
  Real halving_difference = 0;
};

/// Classical RK4 with fixed dt; samples every step. With `halving_budget` > 0 the run is repeated at
/// dt/2 and StepSize is thrown if the final states differ by more than the budget.
Trajectory integrate(const PhasePoint& x0, const VectorField& v, const PhaseFunction& energy, Real t_final, Real dt,
                     Real halving_budget = 0);

struct FlowComparison {
  std::vector<Real> eps;
  std::vector<Real> distance;
  Real slope = 0;
};

/// For each eps: sup over the sampled times of |Phi_t^macro(x0) - T_eff(Phi_t^eff(T_eff^-1(x0)))|,
/// where Phi^eff is the magnetic flow of h0 + eps h1 and Phi^macro the corrected flow of h_sc.
FlowComparison compare_flows(const PhasePoint& x0, const BandModel& band, const EMFieldConfig& field,
                             const std::vector<Real>& eps, Real t_final, Real dt);

}  // namespace peierls
