#include "peierls/geometry.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace peierls {

namespace {

std::string describe_point(const KGrid& grid, std::size_t i) {
  std::ostringstream os;
  os << "k-point " << i << " (";
  const VectorX k = grid.point(i);
  for (Eigen::Index j = 0; j < k.size(); ++j) os << (j ? ", " : "") << k(j);
  os << ")";
  return os.str();
}

// Flat indices along the grid line through `start` in direction `axis`, ordered by position.
std::vector<std::size_t> grid_line(const KGrid& grid, std::size_t start, int axis) {
  auto m = grid.multi_index(start);
  const int n = grid.shape[static_cast<std::size_t>(axis)];
  std::vector<std::size_t> line(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) {
    m[static_cast<std::size_t>(axis)] = t;
    line[static_cast<std::size_t>(t)] = grid.flat_index(m);
  }
  return line;
}

}  // namespace

VectorXc BlochFamily::unwrap(const VectorXc& u, const DualIndex& m) const {
  if (!glue || std::all_of(m.begin(), m.end(), [](int v) { return v == 0; })) return u;
  return glue(u, m);
}

BlochFamily make_family(const BandStructure& bands) {
  BlochFamily f;
  f.kgrid = bands.kgrid;
  f.energies = bands.energies;
  f.next_energy = bands.next_energy;
  f.states = bands.states;
  auto basis = bands.basis;
  FourierPotential potential = bands.potential;
  f.hamiltonian = [potential, basis](const VectorX& k) { return fiber_matrix(k, potential, basis).entries; };
  f.glue = [basis](const VectorXc& u, const DualIndex& m) {
    DualIndex shift(m.size());
    for (std::size_t j = 0; j < m.size(); ++j) shift[j] = -m[j];
    return apply_tau(u, *basis, shift);
  };
  return f;
}

BlochFamily make_family(const KGrid& kgrid, std::function<MatrixXc(const VectorX&)> hamiltonian,
                        std::function<VectorXc(const VectorXc&, const DualIndex&)> glue) {
  BlochFamily f;
  f.kgrid = kgrid;
  f.hamiltonian = std::move(hamiltonian);
  f.glue = std::move(glue);
  f.states.resize(kgrid.size());
  std::vector<VectorX> evals(kgrid.size());
  parallel_for(kgrid.size(), [&](std::size_t i) {
    Eigen::SelfAdjointEigenSolver<MatrixXc> es(f.hamiltonian(kgrid.point(i)));
    evals[i] = es.eigenvalues();
    f.states[i] = es.eigenvectors();
  });
  f.energies.resize(evals.front().size(), static_cast<Eigen::Index>(kgrid.size()));
  for (std::size_t i = 0; i < kgrid.size(); ++i) f.energies.col(static_cast<Eigen::Index>(i)) = evals[i];
  return f;
}

VectorXc GaugeFrame::neighbor_state(std::size_t i, int axis, int step) const {
  int shift = 0;
  const std::size_t nb = kgrid.neighbor(i, axis, step, &shift);
  if (shift == 0 || !glue) return vectors[nb];
  DualIndex m(static_cast<std::size_t>(kgrid.dim()), 0);
  m[static_cast<std::size_t>(axis)] = shift;
  return glue(vectors[nb], m);
}

Complex GaugeFrame::link(std::size_t i, int axis) const {
  return vectors[i].dot(neighbor_state(i, axis, +1));
}

GaugeFrame fix_gauge(const BlochFamily& family, int band) {
  const KGrid& grid = family.kgrid;
  if (band < 0 || band >= family.band_count())
    throw Error(ErrorKind::GaugeFixing, "band index outside the computed band range");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    Real gap = std::numeric_limits<Real>::infinity();
    if (band > 0) gap = std::min(gap, family.energies(band, c) - family.energies(band - 1, c));
    if (band + 1 < family.band_count())
      gap = std::min(gap, family.energies(band + 1, c) - family.energies(band, c));
    else if (family.next_energy.size() > c && !std::isnan(family.next_energy(c)))
      gap = std::min(gap, family.next_energy(c) - family.energies(band, c));
    if (!(gap > degeneracy_tolerance))
      throw Error(ErrorKind::GaugeFixing, "band " + std::to_string(band) + " is degenerate at " + describe_point(grid, i));
  }

  GaugeFrame frame;
  frame.kgrid = grid;
  frame.band = band;
  frame.hamiltonian = family.hamiltonian;
  frame.glue = family.glue;
  frame.energies = family.energies.row(band).transpose();
  frame.vectors.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) frame.vectors[i] = family.states[i].col(band);

  // seed convention
  {
    VectorXc& u = frame.vectors[0];
    const Real scale = u.cwiseAbs().maxCoeff();
    for (Eigen::Index j = 0; j < u.size(); ++j) {
      if (std::abs(u(j)) >= 1e-3 * scale) {
        u *= std::conj(u(j)) / std::abs(u(j));
        break;
      }
    }
  }

  const int d = grid.dim();
  for (int axis = 0; axis < d; ++axis) {
    const int n = grid.shape[static_cast<std::size_t>(axis)];
    Real previous_phi = 0;
    bool have_previous = false;
    for (std::size_t s = 0; s < grid.size(); ++s) {
      const auto m = grid.multi_index(s);
      bool seed = m[static_cast<std::size_t>(axis)] == 0;
      for (int j = axis + 1; j < d && seed; ++j) seed = m[static_cast<std::size_t>(j)] == 0;
      if (!seed) continue;
      const auto line = grid_line(grid, s, axis);
      for (int t = 1; t < n; ++t) {
        const Complex ov = frame.vectors[line[t - 1]].dot(frame.vectors[line[t]]);
        if (std::abs(ov) < 1e-12)
          throw Error(ErrorKind::GaugeFixing, "vanishing overlap during transport at " + describe_point(grid, line[t]));
        frame.vectors[line[t]] *= std::conj(ov) / std::abs(ov);
      }
      if (n == 1) continue;
      const Complex closing = frame.link(line[static_cast<std::size_t>(n - 1)], axis);
      if (std::abs(closing) < 1e-12)
        throw Error(ErrorKind::GaugeFixing, "vanishing overlap across the zone boundary at " + describe_point(grid, s));
      Real phi = std::arg(closing);
      // keep closing phases continuous from line to line
      if (have_previous) phi += two_pi * std::round((previous_phi - phi) / two_pi);
      previous_phi = phi;
      have_previous = true;
      for (int t = 1; t < n; ++t) frame.vectors[line[t]] *= std::exp(I * (phi * t / n));
    }
  }
  return frame;
}

MatrixX grid_to_cartesian(const KGrid& kgrid) {
  MatrixX s(kgrid.dim(), kgrid.dim());
  for (int a = 0; a < kgrid.dim(); ++a) s.col(a) = kgrid.step(a);
  return s.transpose().inverse();
}

std::vector<VectorXc> frame_differences(const GaugeFrame& frame, std::size_t i, bool local_alignment) {
  std::vector<VectorXc> out;
  const VectorXc& u = frame.vectors[i];
  for (int a = 0; a < frame.kgrid.dim(); ++a) {
    VectorXc plus = frame.neighbor_state(i, a, +1);
    VectorXc minus = frame.neighbor_state(i, a, -1);
    const Complex op = u.dot(plus), om = u.dot(minus);
    if (local_alignment) {
      if (std::abs(op) < 0.2 || std::abs(om) < 0.2)
        throw Error(ErrorKind::GridRefinement, "small overlap between neighboring states; refine the k-grid");
      plus *= std::conj(op) / std::abs(op);
      minus *= std::conj(om) / std::abs(om);
    } else if (op.real() <= 0 || om.real() <= 0) {
      throw Error(ErrorKind::GridRefinement, "non-positive frame overlap; refine the k-grid");
    }
    out.push_back(0.5 * (plus - minus));
  }
  return out;
}

ConnectionField berry_connection(const GaugeFrame& frame) {
  const int d = frame.kgrid.dim();
  const MatrixX t = grid_to_cartesian(frame.kgrid);
  ConnectionField a;
  a.values.resize(d, static_cast<Eigen::Index>(frame.kgrid.size()));
  std::vector<Real> residue(frame.kgrid.size(), 0);
  parallel_for(frame.kgrid.size(), [&](std::size_t i) {
    const auto diffs = frame_differences(frame, i);
    VectorXc grid_a(d);
    for (int l = 0; l < d; ++l) grid_a(l) = I * frame.vectors[i].dot(diffs[static_cast<std::size_t>(l)]);
    const VectorXc cart = t.cast<Complex>() * grid_a;
    a.values.col(static_cast<Eigen::Index>(i)) = cart.real();
    residue[i] = cart.imag().cwiseAbs().maxCoeff();
  });
  a.imaginary_residue = *std::max_element(residue.begin(), residue.end());
  return a;
}

Real wilson_loop_phase(const GaugeFrame& frame, int axis, std::size_t start) {
  Complex w = 1;
  for (std::size_t i : grid_line(frame.kgrid, start, axis)) {
    const Complex l = frame.link(i, axis);
    w *= l / std::abs(l);
  }
  return -std::arg(w);
}

Real connection_loop_integral(const GaugeFrame& frame, const ConnectionField& a, int axis, std::size_t start) {
  const VectorX dk = frame.kgrid.step(axis);
  Real sum = 0;
  for (std::size_t i : grid_line(frame.kgrid, start, axis)) sum += a.values.col(static_cast<Eigen::Index>(i)).dot(dk);
  return sum;
}

CurvatureField berry_curvature(const GaugeFrame& frame, Real branch_margin) {
  const KGrid& grid = frame.kgrid;
  const int d = grid.dim();
  const MatrixX t = grid_to_cartesian(grid);
  CurvatureField c;
  c.values.assign(grid.size(), MatrixX::Zero(d, d));
  c.flux.assign(grid.size(), MatrixX::Zero(d, d));
  std::vector<std::string> failures(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    MatrixX omega_grid = MatrixX::Zero(d, d);
    for (int l = 0; l < d; ++l) {
      for (int j = l + 1; j < d; ++j) {
        int sl = 0, sj = 0, sjl = 0;
        const std::size_t il = grid.neighbor(i, l, +1, &sl);
        const std::size_t ij = grid.neighbor(i, j, +1, &sj);
        const std::size_t ilj = grid.neighbor(il, j, +1, &sjl);
        auto corner = [&](std::size_t idx, int ml, int mj) -> VectorXc {
          if ((ml == 0 && mj == 0) || !frame.glue) return frame.vectors[idx];
          DualIndex m(static_cast<std::size_t>(d), 0);
          m[static_cast<std::size_t>(l)] = ml;
          m[static_cast<std::size_t>(j)] = mj;
          return frame.glue(frame.vectors[idx], m);
        };
        const VectorXc& u0 = frame.vectors[i];
        const VectorXc u1 = corner(il, sl, 0);
        const VectorXc u2 = corner(ilj, sl, sjl);
        const VectorXc u3 = corner(ij, 0, sj);
        const Complex loop = u0.dot(u1) * u1.dot(u2) * u2.dot(u3) * u3.dot(u0);
        const Real f = std::arg(loop);
        if (std::abs(f) >= pi - branch_margin) {
          failures[i] = "plaquette phase near the branch cut at " + describe_point(grid, i) + "; refine the k-grid";
          return;
        }
        c.flux[i](l, j) = f;
        c.flux[i](j, l) = -f;
        omega_grid(l, j) = -f;
        omega_grid(j, l) = f;
      }
    }
    c.values[i] = t * omega_grid * t.transpose();
  });
  for (const auto& msg : failures)
    if (!msg.empty()) throw Error(ErrorKind::GridRefinement, msg);
  if (d == 2) {
    Real total = 0;
    for (const auto& f : c.flux) total += f(0, 1);
    c.chern = -total / two_pi;
  }
  return c;
}

RammalWilkinsonField rammal_wilkinson(const GaugeFrame& frame) {
  if (!frame.hamiltonian) throw Error(ErrorKind::Geometry, "Rammal-Wilkinson tensor needs fiber Hamiltonians");
  const KGrid& grid = frame.kgrid;
  const int d = grid.dim();
  const MatrixX t = grid_to_cartesian(grid);
  RammalWilkinsonField m;
  m.values.assign(grid.size(), MatrixX::Zero(d, d));
  std::vector<Real> residue(grid.size(), 0);
  parallel_for(grid.size(), [&](std::size_t i) {
    const auto diffs = frame_differences(frame, i, true);
    MatrixXc h = frame.hamiltonian(grid.point(i));
    h.diagonal().array() -= frame.energies(static_cast<Eigen::Index>(i));
    MatrixXc z(d, d);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) z(a, b) = 0.5 * I * diffs[a].dot(h * diffs[b]);
    const MatrixXc cart = t.cast<Complex>() * z * t.transpose().cast<Complex>();
    m.values[i] = cart.real();
    residue[i] = cart.imag().cwiseAbs().maxCoeff();
  });
  m.imaginary_residue = *std::max_element(residue.begin(), residue.end());
  return m;
}

GeometricTensors band_geometry(const BlochFamily& family, int band) {
  const GaugeFrame frame = fix_gauge(family, band);
  GeometricTensors g;
  g.kgrid = family.kgrid;
  g.band = band;
  g.connection = berry_connection(frame);
  g.curvature = berry_curvature(frame);
  if (family.hamiltonian) g.rw_tensor = rammal_wilkinson(frame);
  return g;
}

}  // namespace peierls
