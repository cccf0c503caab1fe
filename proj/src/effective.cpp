#include "peierls/effective.hpp"

#include <array>
#include <random>

namespace peierls {

TrigInterp::TrigInterp(const KGrid& kgrid, const VectorX& values) : lattice_(kgrid.lattice), shape_(kgrid.shape) {
  const int d = kgrid.dim();
  if (values.size() != static_cast<Eigen::Index>(kgrid.size()))
    throw Error(ErrorKind::GridMismatch, "interpolation data does not match the k-grid");
  freqs_.resize(static_cast<std::size_t>(d));
  weights_.resize(static_cast<std::size_t>(d));
  std::size_t count = 1;
  for (int a = 0; a < d; ++a) {
    const int n = shape_[static_cast<std::size_t>(a)];
    const int half = n / 2;
    for (int p = -half; p <= half; ++p) {
      if (n % 2 == 1 || std::abs(p) < half || n == 1) {
        freqs_[static_cast<std::size_t>(a)].push_back(p);
        weights_[static_cast<std::size_t>(a)].push_back(1.0);
      } else {
        freqs_[static_cast<std::size_t>(a)].push_back(p);
        weights_[static_cast<std::size_t>(a)].push_back(0.5);
      }
    }
    count *= freqs_[static_cast<std::size_t>(a)].size();
  }
  coeffs_ = VectorXc::Zero(static_cast<Eigen::Index>(count));
  // direct transform axis by axis on the shifted grid alpha_m = -1/2 + (2m+1)/(2n)
  std::vector<std::vector<Complex>> stage(1, std::vector<Complex>(values.data(), values.data() + values.size()));
  std::vector<Complex> data(values.data(), values.data() + values.size());
  std::vector<int> extent(shape_);
  for (int a = 0; a < d; ++a) {
    const int n = shape_[static_cast<std::size_t>(a)];
    const auto& fr = freqs_[static_cast<std::size_t>(a)];
    const int m_out = static_cast<int>(fr.size());
    std::size_t inner = 1, outer = 1;
    for (int b = 0; b < a; ++b) inner *= static_cast<std::size_t>(extent[static_cast<std::size_t>(b)]);
    for (int b = a + 1; b < d; ++b) outer *= static_cast<std::size_t>(extent[static_cast<std::size_t>(b)]);
    std::vector<Complex> next(inner * static_cast<std::size_t>(m_out) * outer);
    MatrixXc kernel(m_out, n);
    for (int p = 0; p < m_out; ++p)
      for (int m = 0; m < n; ++m) {
        const Real alpha = -0.5 + (2.0 * m + 1) / (2.0 * n);
        kernel(p, m) = weights_[static_cast<std::size_t>(a)][static_cast<std::size_t>(p)] *
                       std::exp(-I * (two_pi * fr[static_cast<std::size_t>(p)] * alpha)) / static_cast<Real>(n);
      }
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t i = 0; i < inner; ++i)
        for (int p = 0; p < m_out; ++p) {
          Complex s = 0;
          for (int m = 0; m < n; ++m) s += kernel(p, m) * data[i + inner * (static_cast<std::size_t>(m) + static_cast<std::size_t>(n) * o)];
          next[i + inner * (static_cast<std::size_t>(p) + static_cast<std::size_t>(m_out) * o)] = s;
        }
    data.swap(next);
    extent[static_cast<std::size_t>(a)] = m_out;
  }
  for (std::size_t i = 0; i < count; ++i) coeffs_(static_cast<Eigen::Index>(i)) = data[i];
}

Complex TrigInterp::evaluate(const VectorX& k, int derivative_axis) const {
  const int d = lattice_.dim;
  const VectorX alpha = lattice_.dual_coefficients(k);
  thread_local std::array<std::vector<Complex>, 3> w;
  for (int a = 0; a < d; ++a) {
    const auto& fr = freqs_[static_cast<std::size_t>(a)];
    auto& wa = w[static_cast<std::size_t>(a)];
    wa.resize(fr.size());
    // consecutive frequencies, so powers of one phase
    const Complex base = std::exp(I * (two_pi * alpha(a)));
    Complex ph = std::exp(I * (two_pi * fr.front() * alpha(a)));
    for (std::size_t p = 0; p < fr.size(); ++p, ph *= base) {
      wa[p] = ph;
      if (a == derivative_axis) wa[p] *= I * (two_pi * fr[p]);
    }
  }
  const Complex* c = coeffs_.data();
  const std::size_t m0 = w[0].size();
  if (d == 1) {
    Complex s = 0;
    for (std::size_t p = 0; p < m0; ++p) s += w[0][p] * c[p];
    return s;
  }
  const std::size_t m1 = w[1].size();
  const std::size_t m2 = d == 3 ? w[2].size() : 1;
  Complex total = 0;
  for (std::size_t p2 = 0; p2 < m2; ++p2) {
    Complex plane = 0;
    for (std::size_t p1 = 0; p1 < m1; ++p1) {
      Complex line = 0;
      const Complex* row = c + m0 * (p1 + m1 * p2);
      for (std::size_t p0 = 0; p0 < m0; ++p0) line += w[0][p0] * row[p0];
      plane += w[1][p1] * line;
    }
    total += (d == 3 ? w[2][p2] : Complex(1)) * plane;
  }
  return total;
}

Real TrigInterp::operator()(const VectorX& k) const { return evaluate(k, -1).real(); }

VectorX TrigInterp::gradient(const VectorX& k) const {
  const int d = lattice_.dim;
  VectorX ga(d);
  for (int a = 0; a < d; ++a) ga(a) = evaluate(k, a).real();
  // alpha = basis^T k / 2 pi
  return lattice_.basis * ga / two_pi;
}

MatrixX BandModel::curvature(const VectorX& k) const {
  const MatrixX j = connection_jacobian(k);
  return j - j.transpose();
}

BandModel band_model(const GeometricTensors& geom, const VectorX& energies) {
  const KGrid& kg = geom.kgrid;
  const int d = kg.dim();
  auto e = std::make_shared<TrigInterp>(kg, energies);
  auto a = std::make_shared<std::vector<TrigInterp>>();
  for (int l = 0; l < d; ++l) a->emplace_back(kg, geom.connection.values.row(l).transpose());
  auto m = std::make_shared<std::vector<TrigInterp>>();
  for (int l = 0; l < d; ++l)
    for (int j = 0; j < d; ++j) {
      VectorX v(static_cast<Eigen::Index>(kg.size()));
      for (std::size_t i = 0; i < kg.size(); ++i) v(static_cast<Eigen::Index>(i)) = geom.rw_tensor.values[i](l, j);
      m->emplace_back(kg, v);
    }
  BandModel b;
  b.lattice = kg.lattice;
  b.energy = [e](const VectorX& k) { return (*e)(k); };
  b.energy_gradient = [e](const VectorX& k) { return e->gradient(k); };
  b.connection = [a, d](const VectorX& k) {
    VectorX v(d);
    for (int l = 0; l < d; ++l) v(l) = (*a)[static_cast<std::size_t>(l)](k);
    return v;
  };
  b.connection_jacobian = [a, d](const VectorX& k) {
    MatrixX jac(d, d);
    for (int j = 0; j < d; ++j) jac.col(j) = (*a)[static_cast<std::size_t>(j)].gradient(k);
    return jac;
  };
  b.rw_tensor = [m, d](const VectorX& k) {
    MatrixX v(d, d);
    for (int l = 0; l < d; ++l)
      for (int j = 0; j < d; ++j) v(l, j) = (*m)[static_cast<std::size_t>(l * d + j)](k);
    return v;
  };
  return b;
}

BandModel band_model(const BandStructure& bands, int band) {
  if (band < 0 || band >= bands.band_count()) throw Error(ErrorKind::Degeneracy, "band index out of range");
  if (!check_gap(bands, band, band, degeneracy_tolerance).satisfied)
    throw Error(ErrorKind::Degeneracy, "effective model needs an isolated non-degenerate band");
  const BlochFamily family = make_family(bands);
  const GeometricTensors geom = band_geometry(family, band);
  return band_model(geom, bands.energies.row(band).transpose());
}

namespace {

Real phi_at(const EMFieldConfig& field, const VectorX& r) { return field.phi ? field.phi(r) : 0.0; }

VectorX phi_gradient(const EMFieldConfig& field, const VectorX& r) {
  if (!field.phi) return VectorX::Zero(r.size());
  return numerical_gradient([&](const VectorX& x) { return field.phi(x); }, r);
}

Real contract(const MatrixX& b, const MatrixX& m) { return (b.array() * m.array()).sum(); }

}  // namespace

PhaseFunction peierls_h0(const BandModel& band, const EMFieldConfig& field) {
  return [band, field](const VectorX& k, const VectorX& r) { return band.energy(k) + phi_at(field, r); };
}

PhaseFunction peierls_h1(const BandModel& band, const EMFieldConfig& field) {
  if (!band.connection || !band.rw_tensor) throw Error(ErrorKind::Geometry, "first-order term needs A and M");
  return [band, field](const VectorX& k, const VectorX& r) {
    const MatrixX b = field.field(r);
    const VectorX force = -phi_gradient(field, r) + field.lambda * b * band.energy_gradient(k);
    Real v = -force.dot(band.connection(k));
    if (field.lambda != 0) v -= field.lambda * contract(b, band.rw_tensor(k));
    return v;
  };
}

PhaseFunction peierls_heff(const BandModel& band, const EMFieldConfig& field) {
  const PhaseFunction h0 = peierls_h0(band, field), h1 = peierls_h1(band, field);
  const Real eps = field.eps;
  return [h0, h1, eps](const VectorX& k, const VectorX& r) { return h0(k, r) + eps * h1(k, r); };
}

PhaseFunction semiclassical_h(const BandModel& band, const EMFieldConfig& field) {
  return [band, field](const VectorX& k, const VectorX& r) {
    Real v = band.energy(k) + phi_at(field, r);
    if (field.lambda != 0 && field.eps != 0) v -= field.eps * field.lambda * contract(field.field(r), band.rw_tensor(k));
    return v;
  };
}

PhasePoint t_eff(const PhasePoint& x, const BandModel& band, const EMFieldConfig& field) {
  if (!x.k.allFinite() || !x.r.allFinite()) throw Error(ErrorKind::Config, "non-finite phase-space point");
  if (field.eps == 0) return x;
  const VectorX a = band.connection(x.k);
  return {x.k + field.eps * field.lambda * field.field(x.r) * a, x.r + field.eps * a};
}

PhasePoint t_eff_inverse(const PhasePoint& y, const BandModel& band, const EMFieldConfig& field) {
  if (field.eps == 0) return y;
  PhasePoint x = y;
  for (int it = 0; it < 50; ++it) {
    const VectorX a = band.connection(x.k);
    PhasePoint next{y.k - field.eps * field.lambda * field.field(x.r) * a, y.r - field.eps * a};
    const Real change = std::max((next.k - x.k).cwiseAbs().maxCoeff(), (next.r - x.r).cwiseAbs().maxCoeff());
    x = std::move(next);
    if (change < 1e-13) {
      const PhasePoint back = t_eff(x, band, field);
      const Real res = std::max((back.k - y.k).cwiseAbs().maxCoeff(), (back.r - y.r).cwiseAbs().maxCoeff());
      if (res < 1e-12) return x;
    }
  }
  throw Error(ErrorKind::Convergence, "effective-variable inverse did not converge; eps too large");
}

GridSymbol effective_observable(const PhaseSpaceGrid& grid, const PhaseFunction& f, const BandModel& band,
                                const EMFieldConfig& field, std::string id) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<Real> u(-2, 2);
  const int d = band.dim();
  for (int trial = 0; trial < 6; ++trial) {
    VectorX k(d), r(d);
    for (int l = 0; l < d; ++l) k(l) = u(rng), r(l) = u(rng);
    const Real ref = f(k, r);
    for (int j = 0; j < d; ++j)
      if (std::abs(f(k + band.lattice.dual.col(j), r) - ref) > 1e-10 * std::max<Real>(1, std::abs(ref)))
        throw Error(ErrorKind::Config, "observable is not periodic in k");
  }
  return sample_symbol(
      grid, field.eps,
      [&](const VectorX& r, const VectorX& xi) {
        const PhasePoint y = t_eff({xi, r}, band, field);
        return Complex(f(y.k, y.r));
      },
      std::move(id));
}

}  // namespace peierls
