#include "peierls/bloch.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace peierls {

namespace {

DualIndex negate(DualIndex m) {
  for (int& v : m) v = -v;
  return m;
}

DualIndex difference(const DualIndex& a, const DualIndex& b) {
  DualIndex r(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) r[j] = a[j] - b[j];
  return r;
}

int max_abs(const DualIndex& m) {
  int r = 0;
  for (int v : m) r = std::max(r, std::abs(v));
  return r;
}

}  // namespace

int FourierPotential::support_radius() const {
  int r = 0;
  for (const auto& [m, v] : coefficients)
    if (std::abs(v) > 0) r = std::max(r, max_abs(m));
  return r;
}

void FourierPotential::check_hermitian(Real tol) const {
  for (const auto& [m, v] : coefficients) {
    if (std::abs(coefficient(negate(m)) - std::conj(v)) > tol)
      throw Error(ErrorKind::Config, "potential coefficients violate V(-g) = conj V(g)");
  }
}

Complex FourierPotential::coefficient(const DualIndex& m) const {
  auto it = coefficients.find(m);
  return it == coefficients.end() ? Complex{} : it->second;
}

Real FourierPotential::evaluate(const VectorX& y) const {
  Complex v{};
  for (const auto& [m, c] : coefficients) {
    VectorX alpha = Eigen::Map<const Eigen::VectorXi>(m.data(), static_cast<Eigen::Index>(m.size())).cast<Real>();
    v += c * std::exp(I * (lattice.dual * alpha).dot(y));
  }
  return v.real();
}

FourierPotential zero_potential(const Lattice& lat) { return {lat, {}}; }

FourierPotential mathieu_potential(Real v) {
  return {cubic_lattice(1), {{{1}, v}, {{-1}, v}}};
}

FourierPotential mathieu2d_potential(Real v) {
  return {cubic_lattice(2), {{{1, 0}, v}, {{-1, 0}, v}, {{0, 1}, v}, {{0, -1}, v}}};
}

FourierPotential broken_inversion_potential(Real v, Real w, Real theta) {
  FourierPotential p = mathieu2d_potential(v);
  p.coefficients[{1, 1}] = w * std::exp(I * theta);
  p.coefficients[{-1, -1}] = w * std::exp(-I * theta);
  return p;
}

std::optional<int> PlaneWaveBasis::find(const DualIndex& m) const {
  auto it = lookup.find(m);
  if (it == lookup.end()) return std::nullopt;
  return it->second;
}

std::shared_ptr<const PlaneWaveBasis> make_plane_wave_basis(const Lattice& lat, int cutoff) {
  if (cutoff < 1) throw Error(ErrorKind::Truncation, "plane-wave cutoff must be >= 1");
  auto basis = std::make_shared<PlaneWaveBasis>();
  basis->lattice = lat;
  basis->cutoff = cutoff;
  const int width = 2 * cutoff + 1;
  int count = 1;
  for (int j = 0; j < lat.dim; ++j) count *= width;
  basis->vectors.resize(lat.dim, count);
  for (int flat = 0; flat < count; ++flat) {
    DualIndex m(static_cast<std::size_t>(lat.dim));
    int rest = flat;
    // last axis fastest so that 1D ordering is -cutoff .. cutoff
    for (int j = lat.dim - 1; j >= 0; --j) {
      m[static_cast<std::size_t>(j)] = rest % width - cutoff;
      rest /= width;
    }
    basis->lookup[m] = flat;
    VectorX alpha = Eigen::Map<const Eigen::VectorXi>(m.data(), lat.dim).cast<Real>();
    basis->vectors.col(flat) = lat.dual * alpha;
    basis->indices.push_back(std::move(m));
  }
  return basis;
}

FiberMatrix fiber_matrix(const VectorX& k, const FourierPotential& potential, int cutoff) {
  return fiber_matrix(k, potential, make_plane_wave_basis(potential.lattice, cutoff));
}

FiberMatrix fiber_matrix(const VectorX& k, const FourierPotential& potential,
                         std::shared_ptr<const PlaneWaveBasis> basis) {
  if (!k.allFinite()) throw Error(ErrorKind::Geometry, "fiber matrix requested at non-finite k");
  if (potential.support_radius() > basis->cutoff) {
    std::ostringstream os;
    os << "plane-wave cutoff " << basis->cutoff << " cannot represent potential support of radius "
       << potential.support_radius();
    throw Error(ErrorKind::Truncation, os.str());
  }
  const int n = basis->size();
  FiberMatrix fm{k, basis->cutoff, basis, MatrixXc::Zero(n, n)};
  for (int a = 0; a < n; ++a) {
    fm.entries(a, a) = 0.5 * (k + basis->vectors.col(a)).squaredNorm();
  }
  for (const auto& [m, v] : potential.coefficients) {
    if (v == Complex{}) continue;
    for (int b = 0; b < n; ++b) {
      DualIndex target = basis->indices[static_cast<std::size_t>(b)];
      for (std::size_t j = 0; j < target.size(); ++j) target[j] += m[j];
      if (auto a = basis->find(target)) fm.entries(*a, b) += v;
    }
  }
  return fm;
}

VectorXc apply_tau(const VectorXc& c, const PlaneWaveBasis& basis, const DualIndex& shift) {
  VectorXc out = VectorXc::Zero(c.size());
  for (int a = 0; a < basis.size(); ++a) {
    if (auto src = basis.find(difference(basis.indices[static_cast<std::size_t>(a)], shift))) out(a) = c(*src);
  }
  return out;
}

BandStructure solve_bands(const FourierPotential& potential, const KGrid& kgrid, int cutoff, int n_bands) {
  potential.check_hermitian();
  auto basis = make_plane_wave_basis(potential.lattice, cutoff);
  if (n_bands < 1 || n_bands > basis->size())
    throw Error(ErrorKind::Eigensolver, "requested band count exceeds plane-wave basis size");
  BandStructure bs;
  bs.kgrid = kgrid;
  bs.potential = potential;
  bs.cutoff = cutoff;
  bs.basis = basis;
  const auto nk = static_cast<Eigen::Index>(kgrid.size());
  bs.energies.resize(n_bands, nk);
  bs.next_energy = VectorX::Constant(nk, std::numeric_limits<Real>::quiet_NaN());
  bs.states.resize(kgrid.size());
  std::vector<std::string> failures(kgrid.size());
  parallel_for(kgrid.size(), [&](std::size_t i) {
    const FiberMatrix fm = fiber_matrix(kgrid.point(i), potential, basis);
    Eigen::SelfAdjointEigenSolver<MatrixXc> es(fm.entries);
    if (es.info() != Eigen::Success) {
      failures[i] = "eigensolver failed";
      return;
    }
    const auto col = static_cast<Eigen::Index>(i);
    bs.energies.col(col) = es.eigenvalues().head(n_bands);
    if (n_bands < basis->size()) bs.next_energy(col) = es.eigenvalues()(n_bands);
    bs.states[i] = es.eigenvectors().leftCols(n_bands);
  });
  for (std::size_t i = 0; i < failures.size(); ++i)
    if (!failures[i].empty()) throw Error(ErrorKind::Eigensolver, failures[i] + " at k-point " + std::to_string(i));
  return bs;
}

GapReport check_gap(const BandStructure& bands, int first, int last, Real tolerance) {
  if (first < 0 || last < first || last >= bands.band_count())
    throw Error(ErrorKind::Config, "band index set must be a contiguous range of stored bands");
  Real gap = std::numeric_limits<Real>::infinity();
  for (Eigen::Index i = 0; i < bands.energies.cols(); ++i) {
    if (first > 0) gap = std::min(gap, bands.energies(first, i) - bands.energies(first - 1, i));
    if (last + 1 < bands.band_count())
      gap = std::min(gap, bands.energies(last + 1, i) - bands.energies(last, i));
    else if (!std::isnan(bands.next_energy(i)))
      gap = std::min(gap, bands.next_energy(i) - bands.energies(last, i));
  }
  if (!std::isfinite(gap)) gap = 0;
  gap = std::max<Real>(gap, 0);
  return {gap, gap > tolerance};
}

Real tau_equivariance_check(const FourierPotential& potential, const VectorX& k, const DualIndex& shift,
                            int cutoff) {
  if (max_abs(shift) > cutoff)
    throw Error(ErrorKind::CutoffMargin, "dual-lattice shift exceeds the plane-wave cutoff margin");
  auto basis = make_plane_wave_basis(potential.lattice, cutoff);
  VectorX alpha = Eigen::Map<const Eigen::VectorXi>(shift.data(), potential.lattice.dim).cast<Real>();
  const VectorX g = potential.lattice.dual * alpha;
  const MatrixXc shifted = fiber_matrix(k - g, potential, basis).entries;
  const MatrixXc base = fiber_matrix(k, potential, basis).entries;
  // rows/cols g whose preimage g - gamma* lies in the basis
  std::vector<int> rows, src;
  for (int a = 0; a < basis->size(); ++a) {
    if (auto s = basis->find(difference(basis->indices[static_cast<std::size_t>(a)], shift))) {
      rows.push_back(a);
      src.push_back(*s);
    }
  }
  const auto m = static_cast<Eigen::Index>(rows.size());
  MatrixXc diff(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b)
      diff(a, b) = shifted(rows[a], rows[b]) - base(src[a], src[b]);
  return operator_norm(diff);
}

}  // namespace peierls
