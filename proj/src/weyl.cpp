#include "peierls/weyl.hpp"

#include <unsupported/Eigen/FFT>

#include <array>
#include <cmath>
#include <random>

namespace peierls {

namespace {

// d-dimensional FFT over a cube of side `len`, axis 0 fastest. Inverse includes 1/len^d.
void fft_cube(std::vector<Complex>& data, int dim, int len, bool inverse) {
  Eigen::FFT<Real> fft;
  std::vector<Complex> in(static_cast<std::size_t>(len)), out;
  int stride = 1;
  for (int axis = 0; axis < dim; ++axis) {
    const int total = static_cast<int>(data.size());
    for (int base = 0; base < total; ++base) {
      if ((base / stride) % len != 0) continue;
      for (int i = 0; i < len; ++i) in[static_cast<std::size_t>(i)] = data[static_cast<std::size_t>(base + i * stride)];
      if (inverse)
        fft.inv(out, in);
      else
        fft.fwd(out, in);
      for (int i = 0; i < len; ++i) data[static_cast<std::size_t>(base + i * stride)] = out[static_cast<std::size_t>(i)];
    }
    stride *= len;
  }
}

constexpr std::array<Real, 8> gl_nodes{-0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
                                       0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
constexpr std::array<Real, 8> gl_weights{0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
                                         0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

// Pairs (a, b) of position indices whose per-axis sums equal the midpoint multi-index t.
template <typename Visit>
void for_each_pair(const PhaseSpaceGrid& g, const std::vector<int>& t, Visit&& visit) {
  const int d = g.dim;
  std::vector<int> lo(static_cast<std::size_t>(d)), hi(static_cast<std::size_t>(d)), a(static_cast<std::size_t>(d)),
      b(static_cast<std::size_t>(d)), s(static_cast<std::size_t>(d));
  for (int l = 0; l < d; ++l) {
    lo[l] = std::max(0, t[l] - (g.n - 1));
    hi[l] = std::min(t[l], g.n - 1);
  }
  a = lo;
  while (true) {
    for (int l = 0; l < d; ++l) {
      b[l] = t[l] - a[l];
      s[l] = a[l] - b[l];
    }
    visit(g.flatten(a, g.n), g.flatten(b, g.n), s);
    int l = 0;
    while (l < d && ++a[l] > hi[l]) {
      a[l] = lo[l];
      ++l;
    }
    if (l == d) break;
  }
}

int wrap_index(const PhaseSpaceGrid& g, const std::vector<int>& s) {
  std::vector<int> w(s.size());
  const int len = 2 * g.n;
  for (std::size_t l = 0; l < s.size(); ++l) w[l] = ((s[l] % len) + len) % len;
  return g.flatten(w, len);
}

int parity_sign(const std::vector<int>& s) {
  int sum = 0;
  for (int v : s) sum += v;
  return (sum % 2 == 0) ? 1 : -1;
}

Complex magnetic_phase(const EMFieldConfig& field, const VectorX& x, const VectorX& y) {
  if (field.gauge == GaugeTag::Zero || field.lambda == 0) return 1;
  return std::exp(-I * field.lambda * field.line_integral(x, y));
}

void check_band(const PhaseSpaceGrid& g, const std::vector<Complex>& row, Real& outer, Real& total) {
  for (int j = 0; j < g.momenta(); ++j) {
    const Real v = std::abs(row[static_cast<std::size_t>(j)]);
    total = std::max(total, v);
    if (!g.inner_momentum(j)) outer = std::max(outer, v);
  }
}

template <typename Sampler>
QuantizedOperator quantize_impl(const PhaseSpaceGrid& g, Sampler&& sample, const EMFieldConfig& field,
                                AliasingPolicy policy, std::string id) {
  if (field.dim != g.dim) throw Error(ErrorKind::FieldConfig, "field and grid dimensions differ");
  const int np = g.positions();
  QuantizedOperator op{g, MatrixXc::Zero(np, np), std::move(id), field.gauge, field.eps, field.lambda};
  const int nm = g.midpoints();
  std::vector<Real> outer(static_cast<std::size_t>(nm), 0), total(static_cast<std::size_t>(nm), 0);
  parallel_for(static_cast<std::size_t>(nm), [&](std::size_t ti) {
    const int t = static_cast<int>(ti);
    std::vector<Complex> row(static_cast<std::size_t>(g.momenta()));
    sample(t, row);
    check_band(g, row, outer[ti], total[ti]);
    fft_cube(row, g.dim, 2 * g.n, true);
    for_each_pair(g, g.unflatten(t, 2 * g.n - 1), [&](int a, int b, const std::vector<int>& s) {
      Complex v = static_cast<Real>(parity_sign(s)) * row[static_cast<std::size_t>(wrap_index(g, s))];
      v *= magnetic_phase(field, g.position(a), g.position(b));
      op.matrix(a, b) = v;
    });
  });
  if (policy == AliasingPolicy::Check) {
    const Real big = *std::max_element(total.begin(), total.end());
    const Real leak = *std::max_element(outer.begin(), outer.end());
    if (leak > 1e-8 * big)
      throw Error(ErrorKind::Aliasing, "symbol is not band-limited to the inner half of the momentum grid (leak " +
                                           std::to_string(leak / big) + ")");
  }
  return op;
}

}  // namespace

VectorX PhaseSpaceGrid::position(int a) const {
  const auto m = unflatten(a, n);
  VectorX x(dim);
  for (int l = 0; l < dim; ++l) x(l) = origin(l) + m[static_cast<std::size_t>(l)] * h;
  return x;
}

VectorX PhaseSpaceGrid::midpoint(int t) const {
  const auto m = unflatten(t, 2 * n - 1);
  VectorX x(dim);
  for (int l = 0; l < dim; ++l) x(l) = origin(l) + m[static_cast<std::size_t>(l)] * 0.5 * h;
  return x;
}

VectorX PhaseSpaceGrid::momentum(int j) const {
  const auto m = unflatten(j, 2 * n);
  VectorX xi(dim);
  for (int l = 0; l < dim; ++l) xi(l) = -pi / h + m[static_cast<std::size_t>(l)] * pi / (n * h);
  return xi;
}

std::vector<int> PhaseSpaceGrid::unflatten(int flat, int extent) const {
  std::vector<int> m(static_cast<std::size_t>(dim));
  for (int l = 0; l < dim; ++l) {
    m[static_cast<std::size_t>(l)] = flat % extent;
    flat /= extent;
  }
  return m;
}

int PhaseSpaceGrid::flatten(const std::vector<int>& multi, int extent) const {
  int flat = 0;
  for (int l = dim - 1; l >= 0; --l) flat = flat * extent + multi[static_cast<std::size_t>(l)];
  return flat;
}

bool PhaseSpaceGrid::interior_position(int a) const {
  for (int v : unflatten(a, n))
    if (4 * v < n - 1 || 4 * v > 3 * (n - 1)) return false;
  return true;
}

bool PhaseSpaceGrid::interior_midpoint(int t) const {
  for (int v : unflatten(t, 2 * n - 1))
    if (2 * v < n - 1 || 2 * v > 3 * (n - 1)) return false;
  return true;
}

bool PhaseSpaceGrid::inner_momentum(int j) const {
  for (int v : unflatten(j, 2 * n))
    if (2 * std::abs(v - n) >= n) return false;
  return true;
}

PhaseSpaceGrid make_phase_space_grid(int dim, int n, Real h) {
  if (dim < 1 || dim > 2) throw Error(ErrorKind::Config, "phase-space grids are supported in 1 or 2 dimensions");
  if (n < 4 || !(h > 0)) throw Error(ErrorKind::Config, "phase-space grid needs n >= 4 and h > 0");
  return {dim, n, h, VectorX::Constant(dim, -0.5 * (n - 1) * h)};
}

void EMFieldConfig::validate(unsigned seed) const {
  if (!(eps > 0)) throw Error(ErrorKind::FieldConfig, "eps must be positive");
  if (lambda < 0 || lambda > 1) throw Error(ErrorKind::FieldConfig, "lambda must lie in [0, 1]");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Real> u(-3, 3);
  for (int trial = 0; trial < 8; ++trial) {
    VectorX r(dim);
    for (int l = 0; l < dim; ++l) r(l) = u(rng);
    const MatrixX b = field(r);
    if ((b + b.transpose()).cwiseAbs().maxCoeff() > 1e-12)
      throw Error(ErrorKind::FieldConfig, "magnetic field matrix is not antisymmetric");
    if (constant_B && gauge == GaugeTag::Linear && A) {
      const Real step = 1e-3;
      MatrixX da(dim, dim);
      for (int l = 0; l < dim; ++l) {
        VectorX e = VectorX::Zero(dim);
        e(l) = step;
        da.row(l) = ((A(r + e) - A(r - e)) / (2 * step)).transpose();
      }
      const MatrixX curl = da - da.transpose();  // (l, j) -> d_l A_j - d_j A_l
      if ((curl - b).cwiseAbs().maxCoeff() > 1e-10)
        throw Error(ErrorKind::FieldConfig, "vector potential does not reproduce B (dA != B)");
    }
  }
}

Real EMFieldConfig::line_integral(const VectorX& x, const VectorX& y) const {
  if (gauge == GaugeTag::Zero || !A) return 0;
  const VectorX d = y - x;
  if (gauge == GaugeTag::Linear) return A(eps * 0.5 * (x + y)).dot(d);
  Real sum = 0;
  for (std::size_t q = 0; q < gl_nodes.size(); ++q) {
    const Real s = 0.5 * (gl_nodes[q] + 1);
    sum += 0.5 * gl_weights[q] * A(eps * (x + s * d)).dot(d);
  }
  return sum;
}

MatrixX EMFieldConfig::field(const VectorX& r) const { return B ? B(r) : MatrixX::Zero(dim, dim); }

EMFieldConfig zero_field(int dim, Real eps, Real lambda) {
  EMFieldConfig f;
  f.dim = dim;
  f.eps = eps;
  f.lambda = lambda;
  f.B = [dim](const VectorX&) { return MatrixX::Zero(dim, dim); };
  f.phi = [](const VectorX&) { return 0.0; };
  f.A = [dim](const VectorX&) { return VectorX::Zero(dim); };
  f.gauge = GaugeTag::Zero;
  return f;
}

EMFieldConfig constant_field(Real b, Real eps, Real lambda, ConstantGauge gauge) {
  EMFieldConfig f = zero_field(2, eps, lambda);
  f.B = [b](const VectorX&) {
    MatrixX m(2, 2);
    m << 0, b, -b, 0;
    return m;
  };
  if (gauge == ConstantGauge::Symmetric)
    f.A = [b](const VectorX& r) { return VectorX((VectorX(2) << -0.5 * b * r(1), 0.5 * b * r(0)).finished()); };
  else
    f.A = [b](const VectorX& r) { return VectorX((VectorX(2) << 0.0, b * r(0)).finished()); };
  f.gauge = GaugeTag::Linear;
  return f;
}

GridSymbol sample_symbol(const PhaseSpaceGrid& grid, Real eps, const SymbolFunction& f, std::string id) {
  GridSymbol s{grid, eps, MatrixXc(grid.midpoints(), grid.momenta()), true, std::move(id),
               std::vector<char>(static_cast<std::size_t>(grid.midpoints()), 1)};
  std::vector<VectorX> xi(static_cast<std::size_t>(grid.momenta()));
  for (int j = 0; j < grid.momenta(); ++j) xi[static_cast<std::size_t>(j)] = grid.momentum(j);
  parallel_for(static_cast<std::size_t>(grid.midpoints()), [&](std::size_t t) {
    const VectorX r = eps * grid.midpoint(static_cast<int>(t));
    for (int j = 0; j < grid.momenta(); ++j) s.samples(static_cast<Eigen::Index>(t), j) = f(r, xi[static_cast<std::size_t>(j)]);
  });
  return s;
}

QuantizedOperator quantize(const GridSymbol& f, const EMFieldConfig& field, AliasingPolicy policy) {
  if (std::abs(f.eps - field.eps) > 1e-15) throw Error(ErrorKind::GridMismatch, "symbol sampled at a different eps");
  const PhaseSpaceGrid& g = f.grid;
  return quantize_impl(
      g,
      [&](int t, std::vector<Complex>& row) {
        for (int j = 0; j < g.momenta(); ++j) row[static_cast<std::size_t>(j)] = f.samples(t, j);
      },
      field, policy, f.id);
}

QuantizedOperator quantize(const PhaseSpaceGrid& grid, const SymbolFunction& f, const EMFieldConfig& field,
                           AliasingPolicy policy, std::string id) {
  return quantize_impl(
      grid,
      [&](int t, std::vector<Complex>& row) {
        const VectorX r = field.eps * grid.midpoint(t);
        for (int j = 0; j < grid.momenta(); ++j) row[static_cast<std::size_t>(j)] = f(r, grid.momentum(j));
      },
      field, policy, std::move(id));
}

GridSymbol dequantize(const QuantizedOperator& op, const EMFieldConfig& field) {
  const PhaseSpaceGrid& g = op.grid;
  if (op.matrix.rows() != g.positions() || op.matrix.cols() != g.positions())
    throw Error(ErrorKind::GridMismatch, "operator is not square on the position grid");
  GridSymbol s{g, field.eps, MatrixXc::Zero(g.midpoints(), g.momenta()), true, op.symbol_id,
               std::vector<char>(static_cast<std::size_t>(g.midpoints()), 0)};
  const Real scale = static_cast<Real>(1 << g.dim);
  parallel_for(static_cast<std::size_t>(g.midpoints()), [&](std::size_t ti) {
    const int t = static_cast<int>(ti);
    std::vector<Complex> row(static_cast<std::size_t>(g.momenta()), Complex{});
    for_each_pair(g, g.unflatten(t, 2 * g.n - 1), [&](int a, int b, const std::vector<int>& sv) {
      const Complex v = op.matrix(a, b) / magnetic_phase(field, g.position(a), g.position(b));
      row[static_cast<std::size_t>(wrap_index(g, sv))] = static_cast<Real>(parity_sign(sv)) * v;
    });
    fft_cube(row, g.dim, 2 * g.n, false);
    for (int j = 0; j < g.momenta(); ++j)
      if (g.inner_momentum(j)) s.samples(t, j) = scale * row[static_cast<std::size_t>(j)];
    s.valid[ti] = g.interior_midpoint(t) ? 1 : 0;
  });
  return s;
}

GridSymbol exact_product(const GridSymbol& f, const GridSymbol& g, const EMFieldConfig& field) {
  const QuantizedOperator qf = quantize(f, field);
  const QuantizedOperator qg = quantize(g, field);
  QuantizedOperator prod = qf;
  prod.matrix = qf.matrix * qg.matrix;
  prod.symbol_id = f.id + "*" + g.id;
  return dequantize(prod, field);
}

namespace {

// Fourth-order centred derivative along a midpoint axis (which = 0) or momentum axis (which = 1).
// Returns false where the stencil leaves the grid.
MatrixXc derivative(const GridSymbol& f, int axis, int which, std::vector<char>& ok) {
  const PhaseSpaceGrid& g = f.grid;
  const int ext_t = 2 * g.n - 1, ext_j = 2 * g.n;
  const Real step = which == 0 ? f.eps * 0.5 * g.h : pi / (g.n * g.h);
  MatrixXc out = MatrixXc::Zero(f.samples.rows(), f.samples.cols());
  for (int t = 0; t < g.midpoints(); ++t) {
    auto mt = g.unflatten(t, ext_t);
    for (int j = 0; j < g.momenta(); ++j) {
      auto mj = g.unflatten(j, ext_j);
      auto& m = which == 0 ? mt : mj;
      const int ext = which == 0 ? ext_t : ext_j;
      const int centre = m[static_cast<std::size_t>(axis)];
      if (centre < 2 || centre > ext - 3) {
        if (which == 0) ok[static_cast<std::size_t>(t)] = 0;
        continue;
      }
      auto value = [&](int off) {
        m[static_cast<std::size_t>(axis)] = centre + off;
        const Complex v = which == 0 ? f.samples(g.flatten(mt, ext_t), j) : f.samples(t, g.flatten(mj, ext_j));
        m[static_cast<std::size_t>(axis)] = centre;
        return v;
      };
      if (which == 0)
        for (int off = -2; off <= 2; ++off) {
          m[static_cast<std::size_t>(axis)] = centre + off;
          if (!f.valid[static_cast<std::size_t>(g.flatten(mt, ext_t))]) ok[static_cast<std::size_t>(t)] = 0;
          m[static_cast<std::size_t>(axis)] = centre;
        }
      out(t, j) = (-value(2) + 8.0 * value(1) - 8.0 * value(-1) + value(-2)) / (12 * step);
    }
  }
  return out;
}

}  // namespace

GridSymbol magnetic_poisson(const GridSymbol& f, const GridSymbol& g, const EMFieldConfig& field) {
  const PhaseSpaceGrid& grid = f.grid;
  const int d = grid.dim;
  GridSymbol out{grid, f.eps, MatrixXc::Zero(f.samples.rows(), f.samples.cols()), true, "{" + f.id + "," + g.id + "}",
                 std::vector<char>(static_cast<std::size_t>(grid.midpoints()), 1)};
  for (std::size_t t = 0; t < out.valid.size(); ++t) out.valid[t] = (f.valid[t] && g.valid[t]) ? 1 : 0;
  std::vector<MatrixXc> fr, fx, gr, gx;
  for (int l = 0; l < d; ++l) {
    fr.push_back(derivative(f, l, 0, out.valid));
    fx.push_back(derivative(f, l, 1, out.valid));
    gr.push_back(derivative(g, l, 0, out.valid));
    gx.push_back(derivative(g, l, 1, out.valid));
  }
  for (int l = 0; l < d; ++l) out.samples += fx[l].cwiseProduct(gr[l]) - fr[l].cwiseProduct(gx[l]);
  if (field.lambda != 0 && d > 1) {
    for (int t = 0; t < grid.midpoints(); ++t) {
      const MatrixX b = field.field(f.eps * grid.midpoint(t));
      for (int l = 0; l < d; ++l)
        for (int j = 0; j < d; ++j)
          if (b(l, j) != 0) out.samples.row(t) -= field.lambda * b(l, j) * fx[l].row(t).cwiseProduct(gx[j].row(t));
    }
  }
  return out;
}

GridSymbol expanded_product(const GridSymbol& f, const GridSymbol& g, const EMFieldConfig& field, int order) {
  if (order != 0 && order != 1) throw Error(ErrorKind::Config, "expansion order must be 0 or 1");
  GridSymbol out = f;
  out.id = f.id + "." + g.id;
  out.samples = f.samples.cwiseProduct(g.samples);
  for (std::size_t t = 0; t < out.valid.size(); ++t) out.valid[t] = (f.valid[t] && g.valid[t]) ? 1 : 0;
  if (order == 1) {
    const GridSymbol br = magnetic_poisson(f, g, field);
    out.samples -= 0.5 * I * f.eps * br.samples;
    out.valid = br.valid;
  }
  return out;
}

Real symbol_distance(const GridSymbol& a, const GridSymbol& b) {
  if (a.samples.rows() != b.samples.rows() || a.samples.cols() != b.samples.cols())
    throw Error(ErrorKind::GridMismatch, "symbols live on different grids");
  const PhaseSpaceGrid& g = a.grid;
  Real worst = 0;
  for (int t = 0; t < g.midpoints(); ++t) {
    if (!a.valid[static_cast<std::size_t>(t)] || !b.valid[static_cast<std::size_t>(t)]) continue;
    for (int j = 0; j < g.momenta(); ++j)
      if (g.inner_momentum(j)) worst = std::max(worst, std::abs(a.samples(t, j) - b.samples(t, j)));
  }
  return worst;
}

Real interior_norm(const PhaseSpaceGrid& grid, const MatrixXc& m) {
  std::vector<int> idx;
  for (int a = 0; a < grid.positions(); ++a)
    if (grid.interior_position(a)) idx.push_back(a);
  MatrixXc w(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t r = 0; r < idx.size(); ++r)
    for (std::size_t c = 0; c < idx.size(); ++c) w(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m(idx[r], idx[c]);
  return operator_norm(w);
}

Real gauge_covariance_check(const GridSymbol& f, const EMFieldConfig& field, const std::function<Real(const VectorX&)>& chi,
                            const std::function<VectorX(const VectorX&)>& grad_chi) {
  EMFieldConfig shifted = field;
  auto base = field.A;
  const int dim = field.dim;
  shifted.A = [base, grad_chi, dim](const VectorX& r) {
    VectorX a = base ? base(r) : VectorX::Zero(dim);
    return VectorX(a + grad_chi(r));
  };
  shifted.gauge = GaugeTag::General;
  const QuantizedOperator lhs = quantize(f, shifted);
  const QuantizedOperator rhs = quantize(f, field);
  const PhaseSpaceGrid& g = f.grid;
  VectorXc u(g.positions());
  for (int a = 0; a < g.positions(); ++a) u(a) = std::exp(I * field.lambda * chi(field.eps * g.position(a)) / field.eps);
  const MatrixXc conj = u.asDiagonal() * rhs.matrix * u.conjugate().asDiagonal();
  return interior_norm(g, lhs.matrix - conj);
}

CommutationReport commutation_check(const PhaseSpaceGrid& grid, const EMFieldConfig& field, int probes, unsigned seed) {
  const int d = grid.dim;
  std::vector<MatrixXc> q, p;
  for (int l = 0; l < d; ++l) {
    q.push_back(quantize(grid, [l](const VectorX& r, const VectorX&) { return Complex(r(l)); }, field, AliasingPolicy::Allow, "r").matrix);
    p.push_back(quantize(grid, [l](const VectorX&, const VectorX& xi) { return Complex(xi(l)); }, field, AliasingPolicy::Allow, "xi").matrix);
  }
  std::vector<int> interior;
  for (int a = 0; a < grid.positions(); ++a)
    if (grid.interior_position(a)) interior.push_back(a);
  auto window_norm = [&](const VectorXc& v) {
    Real s = 0;
    for (int a : interior) s += std::norm(v(a));
    return std::sqrt(s);
  };

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Real> shift(-grid.h, grid.h), kick(-0.3 / grid.h, 0.3 / grid.h);
  const Real sigma = 0.075 * grid.n * grid.h;
  CommutationReport rep;
  rep.probes = probes;
  for (int trial = 0; trial < probes; ++trial) {
    VectorX centre(d), k0(d);
    for (int l = 0; l < d; ++l) {
      centre(l) = shift(rng);
      k0(l) = kick(rng);
    }
    VectorXc psi(grid.positions());
    for (int a = 0; a < grid.positions(); ++a) {
      const VectorX x = grid.position(a);
      psi(a) = std::exp(-(x - centre).squaredNorm() / (2 * sigma * sigma) + I * k0.dot(x));
    }
    psi.normalize();
    VectorXc bq(grid.positions());
    for (int l = 0; l < d; ++l) {
      for (int j = 0; j < d; ++j) {
        const VectorXc qq = q[l] * (q[j] * psi) - q[j] * (q[l] * psi);
        rep.position_position = std::max(rep.position_position, window_norm(qq));
        VectorXc qp = -I * (q[l] * (p[j] * psi) - p[j] * (q[l] * psi));
        if (l == j) qp -= field.eps * psi;
        rep.position_momentum = std::max(rep.position_momentum, window_norm(qp));
        VectorXc pp = -I * (p[l] * (p[j] * psi) - p[j] * (p[l] * psi));
        for (int a = 0; a < grid.positions(); ++a)
          pp(a) -= field.eps * field.lambda * field.field(field.eps * grid.position(a))(l, j) * psi(a);
        rep.momentum_momentum = std::max(rep.momentum_momentum, window_norm(pp));
      }
    }
  }
  return rep;
}

}  // namespace peierls
