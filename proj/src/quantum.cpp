#include "peierls/quantum.hpp"

#include <array>
#include <numeric>

namespace peierls {

WaveFunction make_wave_function(const Lattice& lattice, int cells, int points, const std::function<Complex(Real)>& f) {
  if (lattice.dim != 1) throw Error(ErrorKind::Geometry, "wave functions are one-dimensional");
  if (cells < 1 || points < 1) throw Error(ErrorKind::BoxSize, "box needs at least one cell and one point");
  WaveFunction psi{lattice, cells, points, VectorXc(cells * points)};
  for (int i = 0; i < cells * points; ++i) psi.samples(i) = f(psi.position(i));
  return psi;
}

ZakField zak_transform(const WaveFunction& psi) {
  if (psi.cells % 2 == 0) throw Error(ErrorKind::BoxSize, "Zak transform needs an odd number of cells");
  if (psi.samples.size() != psi.cells * psi.points) throw Error(ErrorKind::BoxSize, "box is not commensurate");
  ZakField zf{make_kgrid(psi.lattice, {psi.cells}), psi.points, MatrixXc(psi.cells, psi.points)};
  const Real a = psi.lattice.basis(0, 0);
  const Real scale = 1 / std::sqrt(static_cast<Real>(psi.cells));
  for (int q = 0; q < psi.cells; ++q) {
    const Real k = zf.kgrid.point(static_cast<std::size_t>(q))(0);
    for (int j = 0; j < psi.points; ++j) {
      Complex s = 0;
      for (int c = 0; c < psi.cells; ++c) {
        const int i = j + c * psi.points;
        s += std::exp(-I * (k * (psi.position(j) + c * a))) * psi.samples(i);
      }
      zf.samples(q, j) = scale * s;
    }
  }
  return zf;
}

WaveFunction zak_inverse(const ZakField& zf) {
  const int cells = static_cast<int>(zf.kgrid.size());
  WaveFunction psi{zf.kgrid.lattice, cells, zf.points, VectorXc(cells * zf.points)};
  const Real a = psi.lattice.basis(0, 0);
  const Real scale = 1 / std::sqrt(static_cast<Real>(cells));
  for (int c = 0; c < cells; ++c)
    for (int j = 0; j < zf.points; ++j) {
      Complex s = 0;
      for (int q = 0; q < cells; ++q) {
        const Real k = zf.kgrid.point(static_cast<std::size_t>(q))(0);
        s += std::exp(I * (k * (psi.position(j) + c * a))) * zf.samples(q, j);
      }
      psi.samples(j + c * zf.points) = scale * s;
    }
  return psi;
}

VectorXc zak_fiber(const WaveFunction& psi, Real k) {
  const Real a = psi.lattice.basis(0, 0);
  VectorXc u(psi.points);
  for (int j = 0; j < psi.points; ++j) {
    Complex s = 0;
    for (int c = 0; c < psi.cells; ++c) s += std::exp(-I * (k * (psi.position(j) + c * a))) * psi.samples(j + c * psi.points);
    u(j) = s / std::sqrt(static_cast<Real>(psi.cells));
  }
  return u;
}

MatrixXc cell_samples(const BandStructure& bands, std::size_t k_index, int points) {
  const PlaneWaveBasis& basis = *bands.basis;
  if (basis.lattice.dim != 1) throw Error(ErrorKind::Geometry, "cell sampling is one-dimensional");
  if (points < 2 * basis.cutoff + 1) throw Error(ErrorKind::Truncation, "too few cell points for the plane-wave cutoff");
  const Real a = basis.lattice.basis(0, 0);
  MatrixXc waves(points, basis.size());
  for (int j = 0; j < points; ++j)
    for (int g = 0; g < basis.size(); ++g) waves(j, g) = std::exp(I * (basis.vectors(0, g) * j * a / points));
  return waves * bands.states[k_index] / std::sqrt(static_cast<Real>(points));
}

ZakField band_project(const ZakField& zf, const BandStructure& bands, int band, bool complement) {
  if (bands.kgrid.size() != zf.kgrid.size() || bands.kgrid.lattice.basis != zf.kgrid.lattice.basis)
    throw Error(ErrorKind::GridMismatch, "band data and Zak field use different k-grids");
  if (band < 0 || band >= bands.band_count()) throw Error(ErrorKind::GridMismatch, "band index out of range");
  ZakField out = zf;
  for (std::size_t q = 0; q < zf.kgrid.size(); ++q) {
    const VectorXc u = cell_samples(bands, q, zf.points).col(band);
    const VectorXc v = zf.samples.row(static_cast<Eigen::Index>(q)).transpose();
    const VectorXc p = u * u.dot(v);
    out.samples.row(static_cast<Eigen::Index>(q)) = (complement ? VectorXc(v - p) : p).transpose();
  }
  return out;
}

Propagator::Propagator(const MatrixXc& h, Real eps) : eps_(eps) {
  if (!(eps > 0)) throw Error(ErrorKind::Config, "eps must be positive");
  const Real scale = std::max<Real>(1, h.cwiseAbs().maxCoeff());
  if (hermiticity_defect(h) > 1e-10 * scale) throw Error(ErrorKind::Aliasing, "Hamiltonian matrix is not Hermitian");
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(h);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::Eigensolver, "propagator diagonalization failed");
  values_ = es.eigenvalues();
  vectors_ = es.eigenvectors();
}

VectorXc Propagator::evolve(const VectorXc& psi, Real t) const {
  const VectorXc phase = (-I * (t / eps_) * values_.cast<Complex>()).array().exp();
  return vectors_ * (phase.asDiagonal() * (vectors_.adjoint() * psi));
}

MatrixXc Propagator::unitary(Real t) const {
  const VectorXc phase = (-I * (t / eps_) * values_.cast<Complex>()).array().exp();
  return vectors_ * phase.asDiagonal() * vectors_.adjoint();
}

MatrixXc Propagator::heisenberg(const MatrixXc& a, Real t) const {
  const VectorXc phase = (-I * (t / eps_) * values_.cast<Complex>()).array().exp();
  const MatrixXc inner = vectors_.adjoint() * a * vectors_;
  return vectors_ * (phase.conjugate().asDiagonal() * inner * phase.asDiagonal()) * vectors_.adjoint();
}

VectorXc propagate_reference(const PhaseSpaceGrid& grid, const PhaseFunction& h, const EMFieldConfig& field,
                             const VectorXc& psi, Real t) {
  const QuantizedOperator op = quantize(
      grid, [&](const VectorX& r, const VectorX& xi) { return Complex(h(xi, r)); }, field, AliasingPolicy::Allow);
  return Propagator(op.matrix, field.eps).evolve(psi, t);
}

namespace {

// Trigonometric weights for offsets -K/2..K/2, Nyquist split in half.
std::vector<std::pair<int, Real>> offsets(int k_samples) {
  std::vector<std::pair<int, Real>> out;
  const int half = k_samples / 2;
  for (int d = -half; d <= half; ++d) {
    const bool nyquist = k_samples % 2 == 0 && std::abs(d) == half;
    if (k_samples % 2 == 1 && std::abs(d) > (k_samples - 1) / 2) continue;
    out.emplace_back(d, nyquist ? 0.5 : 1.0);
  }
  return out;
}

Real k_sample(int j, int k_samples) { return -pi + two_pi * j / k_samples; }

// samples: (2n midpoints) x (K momenta)
MatrixXc torus_from_samples(const MatrixX& samples, int n) {
  const int k_samples = static_cast<int>(samples.cols());
  if (n <= k_samples) throw Error(ErrorKind::GridMismatch, "torus too small for the momentum resolution");
  const auto offs = offsets(k_samples);
  MatrixXc coef(2 * n, static_cast<Eigen::Index>(offs.size()));
  for (int t = 0; t < 2 * n; ++t)
    for (std::size_t o = 0; o < offs.size(); ++o) {
      Complex s = 0;
      for (int j = 0; j < k_samples; ++j) s += samples(t, j) * std::exp(I * (k_sample(j, k_samples) * offs[o].first));
      coef(t, static_cast<Eigen::Index>(o)) = offs[o].second * s / static_cast<Real>(k_samples);
    }
  MatrixXc m = MatrixXc::Zero(n, n);
  for (int a = 0; a < n; ++a)
    for (std::size_t o = 0; o < offs.size(); ++o) {
      const int d = offs[o].first;
      const int b = ((a - d) % n + n) % n;
      const int t = ((2 * a - d) % (2 * n) + 2 * n) % (2 * n);
      m(a, b) += coef(t, static_cast<Eigen::Index>(o));
    }
  return m;
}

}  // namespace

MatrixXc quantize_torus(const PhaseFunction& f, int n, Real eps, int k_samples) {
  MatrixX samples(2 * n, k_samples);
  VectorX k(1), r(1);
  for (int t = 0; t < 2 * n; ++t) {
    r(0) = eps * 0.5 * t;
    for (int j = 0; j < k_samples; ++j) {
      k(0) = k_sample(j, k_samples);
      samples(t, j) = f(k, r);
    }
  }
  return torus_from_samples(samples, n);
}

Real egorov_error_torus(const PhaseFunction& f, const PhaseFunction& h, Real eps, Real period, Real t,
                        const EgorovSettings& settings) {
  const int n = static_cast<int>(std::lround(period / eps));
  if (std::abs(n * eps - period) > 1e-9 * period) throw Error(ErrorKind::BoxSize, "period / eps must be an integer");
  const int kn = settings.k_samples > 0 ? settings.k_samples : 2 * ((n - 1) / 2);
  const EMFieldConfig field = zero_field(1, eps);
  const VectorField v = magnetic_flow(h, field);
  // integrator budget: step halving on one representative trajectory
  integrate({VectorX::Constant(1, 0.3), VectorX::Constant(1, 0.1 * period)}, v, {}, t, settings.dt, 1e-2 * eps * eps);
  MatrixX flowed(2 * n, kn);
  parallel_for(static_cast<std::size_t>(2 * n), [&](std::size_t ti) {
    const int tt = static_cast<int>(ti);
    for (int j = 0; j < kn; ++j) {
      const PhasePoint x0{VectorX::Constant(1, k_sample(j, kn)), VectorX::Constant(1, eps * 0.5 * tt)};
      const PhasePoint x = t > 0 ? integrate(x0, v, {}, t, settings.dt).states.back() : x0;
      flowed(tt, j) = f(x.k, x.r);
    }
  });
  const MatrixXc hm = quantize_torus(h, n, eps, kn);
  const MatrixXc fm = quantize_torus(f, n, eps, kn);
  const MatrixXc gm = torus_from_samples(flowed, n);
  return operator_norm(Propagator(hm, eps).heisenberg(fm, t) - gm);
}

std::optional<std::pair<int, int>> rational_approximation(Real x, int max_q) {
  for (int q = 1; q <= max_q; ++q) {
    const long p = std::lround(x * q);
    if (std::abs(x - static_cast<Real>(p) / q) < 1e-12) return std::make_pair(static_cast<int>(p), q);
  }
  return std::nullopt;
}

std::pair<MatrixXc, MatrixXc> rotation_generators(int p, int q, Real theta1, Real theta2) {
  const Real beta = two_pi * p / q;
  MatrixXc t1 = MatrixXc::Zero(q, q), t2 = MatrixXc::Zero(q, q);
  for (int n = 0; n < q; ++n) {
    t1((n + 1) % q, n) = std::exp(I * theta1);
    t2(n, n) = std::exp(I * (theta2 + beta * n));
  }
  return {t1, t2};
}

namespace {

struct RotationSymbol {
  std::vector<std::array<int, 2>> s;
  std::vector<Complex> c;
};

// c_s = K^-2 sum_j f(k_j) e^{i s.k_j}, separable transform
RotationSymbol rotation_coefficients(const MatrixX& samples) {
  const int kn = static_cast<int>(samples.rows());
  const auto offs = offsets(kn);
  const int no = static_cast<int>(offs.size());
  MatrixXc e(no, kn);
  for (int o = 0; o < no; ++o)
    for (int j = 0; j < kn; ++j) e(o, j) = std::exp(I * (offs[static_cast<std::size_t>(o)].first * k_sample(j, kn)));
  const MatrixXc c = e * samples.cast<Complex>() * e.transpose() / static_cast<Real>(kn * kn);
  RotationSymbol out;
  for (int o1 = 0; o1 < no; ++o1)
    for (int o2 = 0; o2 < no; ++o2) {
      out.s.push_back({offs[static_cast<std::size_t>(o1)].first, offs[static_cast<std::size_t>(o2)].first});
      out.c.push_back(offs[static_cast<std::size_t>(o1)].second * offs[static_cast<std::size_t>(o2)].second * c(o1, o2));
    }
  return out;
}

MatrixXc rotation_matrix(const RotationSymbol& sym, int p, int q, Real theta1, Real theta2) {
  const Real beta = two_pi * p / q;
  MatrixXc m = MatrixXc::Zero(q, q);
  for (std::size_t i = 0; i < sym.s.size(); ++i) {
    const int s1 = sym.s[i][0], s2 = sym.s[i][1];
    const Complex pre = sym.c[i] * std::exp(I * (0.5 * beta * s1 * s2 + s1 * theta1));
    for (int n = 0; n < q; ++n) m(((n + s1) % q + q) % q, n) += pre * std::exp(I * (s2 * (theta2 + beta * n)));
  }
  return m;
}

MatrixX sample_k2(const std::function<Real(const VectorX&)>& f, int kn) {
  MatrixX s(kn, kn);
  VectorX k(2);
  for (int j1 = 0; j1 < kn; ++j1)
    for (int j2 = 0; j2 < kn; ++j2) {
      k << k_sample(j1, kn), k_sample(j2, kn);
      s(j1, j2) = f(k);
    }
  return s;
}

}  // namespace

MatrixXc quantize_rotation(const std::function<Real(const VectorX&)>& f, int p, int q, Real theta1, Real theta2,
                           int k_samples) {
  return rotation_matrix(rotation_coefficients(sample_k2(f, k_samples)), p, q, theta1, theta2);
}

Real egorov_error_constant_field(const std::function<Real(const VectorX&)>& f,
                                 const std::function<Real(const VectorX&)>& energy, Real b, Real lambda, Real eps,
                                 Real t, int theta_points, const EgorovSettings& settings) {
  const Real flux = lambda * eps * b / two_pi;
  const auto pq = rational_approximation(flux - std::floor(flux), 400);
  if (!pq) throw Error(ErrorKind::Config, "flux per cell is not a rational multiple of 2 pi with q <= 400");
  const auto [p, q] = *pq;
  const int kn = settings.k_samples;
  const EMFieldConfig field = constant_field(b, eps, lambda);
  const PhaseFunction h = [&energy](const VectorX& k, const VectorX&) { return energy(k); };
  const VectorField v = magnetic_flow(h, field);
  integrate({(VectorX(2) << 0.4, -0.7).finished(), VectorX::Zero(2)}, v, {}, t, settings.dt, 1e-2 * eps * eps);
  MatrixX flowed(kn, kn);
  parallel_for(static_cast<std::size_t>(kn), [&](std::size_t j1) {
    for (int j2 = 0; j2 < kn; ++j2) {
      const PhasePoint x0{(VectorX(2) << k_sample(static_cast<int>(j1), kn), k_sample(j2, kn)).finished(), VectorX::Zero(2)};
      const PhasePoint x = t > 0 ? integrate(x0, v, {}, t, settings.dt).states.back() : x0;
      flowed(static_cast<Eigen::Index>(j1), j2) = f(x.k);
    }
  });
  const RotationSymbol hs = rotation_coefficients(sample_k2(energy, kn));
  const RotationSymbol fs = rotation_coefficients(sample_k2(f, kn));
  const RotationSymbol gs = rotation_coefficients(flowed);
  std::vector<Real> err(static_cast<std::size_t>(theta_points * theta_points));
  parallel_for(err.size(), [&](std::size_t i) {
    const Real th1 = two_pi / q * static_cast<Real>(i % static_cast<std::size_t>(theta_points)) / theta_points;
    const Real th2 = two_pi / q * static_cast<Real>(i / static_cast<std::size_t>(theta_points)) / theta_points;
    const MatrixXc hm = rotation_matrix(hs, p, q, th1, th2);
    const MatrixXc fm = rotation_matrix(fs, p, q, th1, th2);
    const MatrixXc gm = rotation_matrix(gs, p, q, th1, th2);
    err[i] = operator_norm(Propagator(hm, eps).heisenberg(fm, t) - gm);
  });
  return *std::max_element(err.begin(), err.end());
}

MatrixX real_space_hamiltonian(const FourierPotential& pot, int cells, int points, Real eps, Real force, Real centre) {
  static constexpr std::array<Real, 5> c{-205.0 / 72, 8.0 / 5, -1.0 / 5, 8.0 / 315, -1.0 / 560};
  const int n = cells * points;
  const Real a = pot.lattice.basis(0, 0);
  const Real h = a / points;
  MatrixX m = MatrixX::Zero(n, n);
  VectorX x(1);
  for (int i = 0; i < n; ++i) {
    x(0) = i * h;
    m(i, i) = -0.5 * c[0] / (h * h) + pot.evaluate(x) + force * eps * (i * h - centre);
    for (int off = 1; off <= 4; ++off) {
      const Real v = -0.5 * c[static_cast<std::size_t>(off)] / (h * h);
      m(i, (i + off) % n) += v;
      m(i, (i - off + n) % n) += v;
    }
  }
  return m;
}

SemiclassicalReport semiclassical_limit_check(const SemiclassicalSetup& setup, Real eps) {
  const FourierPotential& pot = setup.potential;
  if (pot.lattice.dim != 1) throw Error(ErrorKind::Geometry, "semiclassical check is one-dimensional");
  const Real a = pot.lattice.basis(0, 0);
  // band model for the flow and an excursion estimate
  const BandStructure coarse = solve_bands(pot, make_kgrid(pot.lattice, {63}), setup.cutoff, setup.band + 2);
  const BandModel model = band_model(coarse, setup.band);
  const VectorX e = coarse.energies.row(setup.band).transpose();
  Real speed = 0;
  for (Eigen::Index i = 0; i < e.size(); ++i)
    speed = std::max(speed, std::abs(e((i + 1) % e.size()) - e(i)) / coarse.kgrid.step(0).norm());
  Real reach = setup.t_final * speed;
  if (setup.force != 0) reach = std::min(reach, (e.maxCoeff() - e.minCoeff()) / std::abs(setup.force));
  const Real excursion = reach / eps;  // microscopic
  const Real sigma = setup.width * a / std::sqrt(eps);
  int cells = 2 * static_cast<int>(std::ceil((excursion + 6 * sigma) / (0.8 * a))) + 1;
  const int m = setup.points;
  const Real centre = 0.5 * cells * a;

  SemiclassicalReport rep;
  rep.eps = eps;
  rep.cells = cells;
  const BandStructure bands = solve_bands(pot, make_kgrid(pot.lattice, {cells}), setup.cutoff, setup.band + 2);
  const Real k0 = setup.k0;
  WaveFunction psi = make_wave_function(pot.lattice, cells, m, [&](Real x) {
    const Real y = x - centre;
    return std::exp(-y * y / (2 * sigma * sigma) + I * (k0 * y));
  });
  psi.samples.normalize();
  const ZakField fibers = band_project(zak_transform(psi), bands, setup.band);
  const WaveFunction projected = zak_inverse(fibers);
  rep.leakage = 1 - projected.samples.squaredNorm();
  VectorXc psi0 = projected.samples.normalized();

  const MatrixX h = real_space_hamiltonian(pot, cells, m, eps, setup.force, centre);
  Eigen::SelfAdjointEigenSolver<MatrixX> es(h);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::Eigensolver, "real-space diagonalization failed");
  const VectorXc coeff = es.eigenvectors().transpose().cast<Complex>() * psi0;

  const int n = cells * m;
  VectorX pos(n);
  for (int i = 0; i < n; ++i) pos(i) = psi.position(i) - centre;
  const Real inner = 0.8 * 0.5 * cells * a;
  auto measure = [&](const VectorXc& state, Real& mean) {
    const VectorX w = state.cwiseAbs2();
    mean = eps * w.dot(pos);
    Real edge = 0;
    for (int i = 0; i < n; ++i)
      if (std::abs(pos(i)) > inner) edge += w(i);
    rep.edge_weight = std::max(rep.edge_weight, edge);
    rep.norm_defect = std::max(rep.norm_defect, std::abs(w.sum() - 1));
  };
  Real r0 = 0;
  measure(psi0, r0);

  EMFieldConfig field = zero_field(1, eps, 0);
  field.phi = [f = setup.force](const VectorX& r) { return f * r(0); };
  const int steps_per_sample = 200;
  const Trajectory tr = integrate({VectorX::Constant(1, k0), VectorX::Constant(1, r0)},
                                  corrected_flow(semiclassical_h(model, field), field, model), {}, setup.t_final,
                                  setup.t_final / (setup.samples * steps_per_sample), 1e-3 * eps * eps);
  // displacement of the flow started from every quasi-momentum of the Zak grid
  const VectorX weight = fibers.samples.rowwise().squaredNorm() / fibers.samples.squaredNorm();
  MatrixX shift(cells, setup.samples);
  parallel_for(static_cast<std::size_t>(cells), [&](std::size_t q) {
    const Trajectory tq = integrate({bands.kgrid.point(q), VectorX::Constant(1, r0)},
                                    corrected_flow(semiclassical_h(model, field), field, model), {}, setup.t_final,
                                    setup.t_final / (setup.samples * steps_per_sample));
    for (int s = 1; s <= setup.samples; ++s)
      shift(static_cast<Eigen::Index>(q), s - 1) = tq.states[static_cast<std::size_t>(s * steps_per_sample)].r(0) - r0;
  });
  for (int s = 1; s <= setup.samples; ++s) {
    const Real t = setup.t_final * s / setup.samples;
    const VectorXc phase = (-I * (t / eps) * es.eigenvalues().cast<Complex>()).array().exp();
    const VectorXc state = es.eigenvectors().cast<Complex>() * phase.cwiseProduct(coeff);
    Real mean = 0;
    measure(state, mean);
    const Real flow = tr.states[static_cast<std::size_t>(s * steps_per_sample)].r(0) - r0;
    rep.times.push_back(t);
    rep.mean_shift.push_back(mean - r0);
    rep.error = std::max(rep.error, std::abs((mean - r0) - flow));
    rep.averaged_error = std::max(rep.averaged_error, std::abs((mean - r0) - weight.dot(shift.col(s - 1))));
  }
  if (rep.edge_weight > 1e-6) throw Error(ErrorKind::BoxSize, "wave packet reached the edge of the box");
  return rep;
}

}  // namespace peierls
