#include "peierls/hofstadter.hpp"

#include <iostream>
#include <numeric>

namespace peierls {

FluxRational make_flux(int p, int q) {
  if (q == 0) throw Error(ErrorKind::Config, "flux denominator is zero");
  if (q < 0) {
    p = -p;
    q = -q;
  }
  const int g = std::gcd(p, q);
  if (g > 1) {
    std::cerr << "warning: flux " << p << "/" << q << " reduced to " << p / g << "/" << q / g << "\n";
    p /= g;
    q /= g;
  }
  return {p, q};
}

MatrixXc harper_bloch_matrix(const FluxRational& flux, Real theta1, Real theta2) {
  const int q = flux.q;
  MatrixXc h = MatrixXc::Zero(q, q);
  for (int n = 0; n < q; ++n) h(n, n) = std::cos(two_pi * flux.p * n / q + theta2);
  if (q == 1) {
    h(0, 0) += std::cos(theta1);
    return h;
  }
  for (int n = 0; n + 1 < q; ++n) {
    h(n, n + 1) += 0.5;
    h(n + 1, n) += 0.5;
  }
  const Complex corner = 0.5 * std::exp(I * (q * theta1));
  h(q - 1, 0) += corner;
  h(0, q - 1) += std::conj(corner);
  return h;
}

FluxSpectrum spectrum_at_flux(const FluxRational& flux, int theta_points) {
  if (theta_points < 1) throw Error(ErrorKind::Config, "theta grid needs at least one point");
  const int q = flux.q;
  const Real step = two_pi / q / theta_points;
  const std::size_t n = static_cast<std::size_t>(theta_points) * static_cast<std::size_t>(theta_points);
  std::vector<VectorX> evals(n);
  parallel_for(n, [&](std::size_t i) {
    const Real t1 = step * static_cast<Real>(i % static_cast<std::size_t>(theta_points));
    const Real t2 = step * static_cast<Real>(i / static_cast<std::size_t>(theta_points));
    Eigen::SelfAdjointEigenSolver<MatrixXc> es(harper_bloch_matrix(flux, t1, t2), Eigen::EigenvaluesOnly);
    evals[i] = es.eigenvalues();
  });
  FluxSpectrum out;
  out.flux = flux;
  out.bands.resize(static_cast<std::size_t>(q));
  for (int b = 0; b < q; ++b) {
    Real lo = evals[0](b), hi = evals[0](b);
    for (const auto& e : evals) {
      lo = std::min(lo, e(b));
      hi = std::max(hi, e(b));
    }
    out.bands[static_cast<std::size_t>(b)] = {lo, hi};
  }
  return out;
}

namespace {

// Harper matrix in the gauge with hopping (1/2)e^{+-i theta1} on every bond of the q-ring. There a
// shift of theta1 by 2 pi / q is the diagonal phase e^{-2 pi i n / q} and a shift of theta2 by 2 pi / q
// is the cyclic index shift by p^-1 mod q, so the family lives on the torus [0, 2 pi / q)^2.
MatrixXc uniform_harper_matrix(const FluxRational& flux, Real theta1, Real theta2) {
  const int q = flux.q;
  MatrixXc h = MatrixXc::Zero(q, q);
  const Complex hop = 0.5 * std::exp(I * theta1);
  for (int n = 0; n < q; ++n) {
    h(n, n) += std::cos(two_pi * flux.p * n / q + theta2);
    h(n, (n + 1) % q) += hop;
    h(n, (n + q - 1) % q) += std::conj(hop);
  }
  return h;
}

// `offset` shifts the grid by that fraction of a grid step along both axes.
BlochFamily harper_family(const FluxRational& flux, int points, Real offset) {
  const int q = flux.q;
  int inverse = 0;
  while ((flux.p * inverse) % q != 1 % q) ++inverse;
  const KGrid grid = make_kgrid(make_lattice(MatrixX(q * MatrixX::Identity(2, 2))), {points, points});
  const Real d = offset * two_pi / q / points;
  auto glue = [q, inverse](const VectorXc& u, const DualIndex& m) {
    VectorXc w(q);
    const long shift = static_cast<long>(m[1]) * inverse;
    for (int n = 0; n < q; ++n) {
      const long src = ((n + shift) % q + q) % q;
      w(n) = u(src) * std::exp(-I * (two_pi * m[0] * n / q));
    }
    return w;
  };
  return make_family(grid, [flux, d](const VectorX& k) { return uniform_harper_matrix(flux, k(0) + d, k(1) + d); }, glue);
}

bool gapped(const BlochFamily& family, const FluxSpectrum& spec, int band, Real gap_tol) {
  const int q = family.band_count();
  const auto& iv = spec.bands;
  const auto b = static_cast<std::size_t>(band);
  if (band > 0 && iv[b].lower - iv[b - 1].upper < gap_tol) return false;
  if (band + 1 < q && iv[b + 1].lower - iv[b].upper < gap_tol) return false;
  for (Eigen::Index i = 0; i < family.energies.cols(); ++i) {
    if (band > 0 && family.energies(band, i) - family.energies(band - 1, i) < gap_tol) return false;
    if (band + 1 < q && family.energies(band + 1, i) - family.energies(band, i) < gap_tol) return false;
  }
  return true;
}

// nullopt when a plaquette phase sits on the branch cut, which only a finer grid resolves.
// The curvature repeats q times across the full magnetic zone [0, 2 pi / q) x [0, 2 pi).
std::optional<long> plaquette_chern(const BlochFamily& family, int band, int q) {
  Real c = 0;
  try {
    c = q * *berry_curvature(fix_gauge(family, band)).chern;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::GridRefinement) return std::nullopt;
    throw;
  }
  const long rounded = std::lround(c);
  if (std::abs(c - static_cast<Real>(rounded)) > 1e-6)
    throw Error(ErrorKind::GridRefinement, "non-integer subband Chern number " + std::to_string(c));
  return rounded;
}

}  // namespace

std::vector<std::optional<int>> subband_cherns(const FluxRational& flux, const FluxSpectrum& spectrum,
                                               int points_per_period, Real gap_tol) {
  const int q = flux.q;
  std::vector<std::optional<int>> out(static_cast<std::size_t>(q));
  std::vector<int> pending;
  {
    const BlochFamily base = harper_family(flux, points_per_period, 0);
    for (int b = 0; b < q; ++b)
      if (gapped(base, spectrum, b, gap_tol)) pending.push_back(b);
  }
  // Curvature near small avoided crossings is concentrated in a few plaquettes; accept a value once
  // two offset grids agree, refining the resolution otherwise.
  for (int points = points_per_period; !pending.empty(); points *= 2) {
    if (points > 16 * points_per_period)
      throw Error(ErrorKind::GridRefinement, "subband Chern numbers did not settle under grid refinement");
    const BlochFamily a = harper_family(flux, points, 0);
    const BlochFamily b = harper_family(flux, points, 0.5);
    std::vector<int> next;
    for (int band : pending) {
      const auto ca = plaquette_chern(a, band, q);
      if (ca && ca == plaquette_chern(b, band, q)) out[static_cast<std::size_t>(band)] = static_cast<int>(*ca);
      else next.push_back(band);
    }
    pending = std::move(next);
  }
  return out;
}

std::vector<std::optional<int>> subband_cherns(const FluxRational& flux, int points_per_period, Real gap_tol) {
  return subband_cherns(flux, spectrum_at_flux(flux), points_per_period, gap_tol);
}

int subband_chern(const FluxRational& flux, int band, int points_per_period) {
  if (band < 0 || band >= flux.q) throw Error(ErrorKind::Config, "subband index out of range");
  const auto c = subband_cherns(flux, points_per_period)[static_cast<std::size_t>(band)];
  if (!c) throw Error(ErrorKind::Degeneracy, "subband " + std::to_string(band) + " touches a neighbour");
  return *c;
}

std::vector<FluxRational> farey_sequence(int q_max) {
  if (q_max < 1) throw Error(ErrorKind::Config, "q_max must be positive");
  std::vector<FluxRational> out;
  // next-term recurrence
  int a = 0, b = 1, c = 1, d = q_max;
  out.push_back({a, b});
  while (c <= q_max) {
    const int k = (q_max + b) / d;
    const int e = k * c - a, f = k * d - b;
    a = c;
    b = d;
    c = e;
    d = f;
    out.push_back({a, b});
    if (a == 1 && b == 1) break;
  }
  return out;
}

ButterflyData butterfly(int q_max, int theta_points, bool with_chern) {
  ButterflyData data;
  const std::vector<FluxRational> fluxes = farey_sequence(q_max);
  data.entries.resize(fluxes.size());
  parallel_for(fluxes.size(), [&](std::size_t i) {
    data.entries[i] = spectrum_at_flux(fluxes[i], theta_points);
    if (with_chern) data.entries[i].chern = subband_cherns(fluxes[i], data.entries[i]);
  });
  return data;
}

}  // namespace peierls
