#include "peierls/flow.hpp"

namespace peierls {

namespace {

void gradients(const PhaseFunction& h, const PhasePoint& x, VectorX& gk, VectorX& gr) {
  gk = numerical_gradient([&](const VectorX& k) { return h(k, x.r); }, x.k);
  gr = numerical_gradient([&](const VectorX& r) { return h(x.k, r); }, x.r);
}

PhasePoint axpy(const PhasePoint& x, Real a, const PhasePoint& v) { return {x.k + a * v.k, x.r + a * v.r}; }

Real distance(const PhasePoint& a, const PhasePoint& b) {
  return std::max((a.k - b.k).cwiseAbs().maxCoeff(), (a.r - b.r).cwiseAbs().maxCoeff());
}

}  // namespace

PhasePoint vector_field_magnetic(const PhasePoint& x, const PhaseFunction& h, const EMFieldConfig& field) {
  VectorX gk, gr;
  gradients(h, x, gk, gr);
  PhasePoint v{-gr, gk};
  if (field.lambda != 0) v.k += field.lambda * field.field(x.r) * gk;
  return v;
}

namespace {

MatrixX structure_matrix(const PhasePoint& x, const EMFieldConfig& field, const BandModel& band) {
  const int d = static_cast<int>(x.k.size());
  MatrixX s = MatrixX::Zero(2 * d, 2 * d);
  s.topLeftCorner(d, d) = field.lambda * field.field(x.r);
  s.topRightCorner(d, d) = -MatrixX::Identity(d, d);
  s.bottomLeftCorner(d, d) = MatrixX::Identity(d, d);
  if (field.eps != 0) s.bottomRightCorner(d, d) = field.eps * band.curvature(x.k);
  return s;
}

}  // namespace

MatrixX poisson_tensor(const PhasePoint& x, const EMFieldConfig& field, const BandModel& band) {
  const Eigen::PartialPivLU<MatrixX> lu(structure_matrix(x, field, band));
  if (std::abs(lu.determinant()) < 1e-10) throw Error(ErrorKind::Geometry, "degenerate structure matrix");
  return lu.inverse();
}

PhasePoint vector_field_corrected(const PhasePoint& x, const PhaseFunction& h, const EMFieldConfig& field,
                                  const BandModel& band, Real* det) {
  const int d = static_cast<int>(x.k.size());
  VectorX gk, gr;
  gradients(h, x, gk, gr);
  const Eigen::PartialPivLU<MatrixX> lu(structure_matrix(x, field, band));
  const Real dt = lu.determinant();
  if (det) *det = dt;
  if (std::abs(dt) < 1e-10) throw Error(ErrorKind::Geometry, "degenerate structure matrix");
  VectorX rhs(2 * d);
  rhs << gr, gk;
  const VectorX sol = lu.solve(rhs);
  return {sol.tail(d), sol.head(d)};
}

VectorField magnetic_flow(const PhaseFunction& h, const EMFieldConfig& field) {
  return [h, field](const PhasePoint& x) { return vector_field_magnetic(x, h, field); };
}

VectorField corrected_flow(const PhaseFunction& h, const EMFieldConfig& field, const BandModel& band) {
  return [h, field, band](const PhasePoint& x) { return vector_field_corrected(x, h, field, band); };
}

namespace {

Trajectory run(const PhasePoint& x0, const VectorField& v, const PhaseFunction& energy, Real t_final, Real dt) {
  if (!(dt > 0) || !(t_final >= 0)) throw Error(ErrorKind::StepSize, "time step must be positive");
  const long steps = std::max<long>(1, std::lround(t_final / dt));
  const Real h = t_final / static_cast<Real>(steps);
  Trajectory tr;
  tr.times.reserve(static_cast<std::size_t>(steps + 1));
  tr.states.reserve(static_cast<std::size_t>(steps + 1));
  PhasePoint x = x0;
  auto record = [&](Real t) {
    tr.times.push_back(t);
    tr.states.push_back(x);
    if (energy) tr.energy.push_back(energy(x.k, x.r));
  };
  record(0);
  if (t_final == 0) return tr;
  for (long s = 0; s < steps; ++s) {
    const PhasePoint k1 = v(x);
    const PhasePoint k2 = v(axpy(x, 0.5 * h, k1));
    const PhasePoint k3 = v(axpy(x, 0.5 * h, k2));
    const PhasePoint k4 = v(axpy(x, h, k3));
    x.k += h / 6 * (k1.k + 2 * k2.k + 2 * k3.k + k4.k);
    x.r += h / 6 * (k1.r + 2 * k2.r + 2 * k3.r + k4.r);
    if (!x.k.allFinite() || !x.r.allFinite()) throw Error(ErrorKind::StepSize, "trajectory diverged");
    record(static_cast<Real>(s + 1) * h);
  }
  for (Real e : tr.energy) tr.energy_drift = std::max(tr.energy_drift, std::abs(e - tr.energy.front()));
  return tr;
}

}  // namespace

Trajectory integrate(const PhasePoint& x0, const VectorField& v, const PhaseFunction& energy, Real t_final, Real dt,
                     Real halving_budget) {
  Trajectory tr = run(x0, v, energy, t_final, dt);
  if (halving_budget > 0) {
    const Trajectory fine = run(x0, v, {}, t_final, dt / 2);
    tr.halving_difference = distance(tr.states.back(), fine.states.back());
    if (tr.halving_difference > halving_budget)
      throw Error(ErrorKind::StepSize, "step-halving check failed: " + std::to_string(tr.halving_difference));
  }
  return tr;
}

FlowComparison compare_flows(const PhasePoint& x0, const BandModel& band, const EMFieldConfig& field,
                             const std::vector<Real>& eps, Real t_final, Real dt) {
  FlowComparison out;
  out.eps = eps;
  out.distance.resize(eps.size());
  parallel_for(eps.size(), [&](std::size_t i) {
    EMFieldConfig f = field;
    f.eps = eps[i];
    const Trajectory macro = integrate(x0, corrected_flow(semiclassical_h(band, f), f, band), {}, t_final, dt);
    const PhasePoint y0 = t_eff_inverse(x0, band, f);
    const Trajectory eff = integrate(y0, magnetic_flow(peierls_heff(band, f), f), {}, t_final, dt);
    Real dist = 0;
    for (std::size_t s = 0; s < macro.states.size(); ++s)
      dist = std::max(dist, distance(macro.states[s], t_eff(eff.states[s], band, f)));
    out.distance[i] = dist;
  });
  bool positive = out.eps.size() >= 2;
  for (std::size_t i = 0; i < eps.size(); ++i) positive = positive && eps[i] > 0 && out.distance[i] > 0;
  out.slope = positive ? loglog_slope(out.eps, out.distance) : 0;
  return out;
}

}  // namespace peierls
