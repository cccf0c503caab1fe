#pragma once
// Independent reference computations shared by unit and acceptance tests.

#include "peierls/common.hpp"

#include <Eigen/Eigenvalues>

#include <array>
#include <functional>
#include <stdexcept>
#include <vector>

namespace oracle {

using peierls::Complex;
using peierls::I;
using peierls::MatrixXc;
using peierls::pi;
using peierls::Real;
using peierls::two_pi;
using peierls::VectorX;

/// Lowest `count` eigenvalues of -1/2 d^2/dx^2 + V(x) on a unit cell with Bloch condition
/// psi(x+1) = exp(ik) psi(x), eighth-order central differences on `n` points.
inline VectorX fd_bloch_eigenvalues(const std::function<Real(Real)>& v, Real k, int n, int count) {
  static constexpr std::array<Real, 5> c{-205.0 / 72, 8.0 / 5, -1.0 / 5, 8.0 / 315, -1.0 / 560};
  const Real h = 1.0 / n;
  MatrixXc m = MatrixXc::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    m(i, i) += -0.5 * c[0] / (h * h) + v(i * h);
    for (int off = 1; off <= 4; ++off) {
      for (int sgn : {-1, 1}) {
        int j = i + sgn * off;
        Complex phase = 1;
        if (j >= n) { j -= n; phase = std::exp(I * k); }
        if (j < 0) { j += n; phase = std::exp(-I * k); }
        m(i, j) += -0.5 * c[static_cast<std::size_t>(off)] / (h * h) * phase;
      }
    }
  }
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().head(count);
}

/// Signed solid angle of the spherical triangle (a, b, c) on the unit sphere.
inline Real solid_angle(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
  const Real num = a.dot(b.cross(c));
  const Real den = 1 + a.dot(b) + b.dot(c) + c.dot(a);
  return 2 * std::atan2(num, den);
}

/// Degree of k -> d(k)/|d(k)| over the torus [-pi, pi)^2, summed over split plaquettes.
inline Real sphere_degree(const std::function<Eigen::Vector3d(Real, Real)>& d, int n) {
  auto unit = [&](int i, int j) {
    const Real kx = -pi + two_pi * i / n, ky = -pi + two_pi * j / n;
    return Eigen::Vector3d(d(kx, ky).normalized());
  };
  Real total = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const auto a = unit(i, j), b = unit(i + 1, j), c = unit(i + 1, j + 1), e = unit(i, j + 1);
      total += solid_angle(a, b, c) + solid_angle(a, c, e);
    }
  return total / (4 * pi);
}

/// Rammal-Wilkinson tensor from first-order perturbation theory,
/// Re((i/2) sum_m <b|dH_l|m><m|dH_j|b> / (E_m - E_b)), for a full eigendecomposition.
inline Eigen::MatrixXd perturbative_rw(const MatrixXc& h, const std::vector<MatrixXc>& dh, int band) {
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(h);
  const auto& e = es.eigenvalues();
  const auto& v = es.eigenvectors();
  const int d = static_cast<int>(dh.size());
  MatrixXc z = MatrixXc::Zero(d, d);
  for (Eigen::Index m = 0; m < e.size(); ++m) {
    if (m == band) continue;
    std::vector<Complex> x(static_cast<std::size_t>(d));
    for (int l = 0; l < d; ++l) x[static_cast<std::size_t>(l)] = v.col(m).dot(dh[static_cast<std::size_t>(l)] * v.col(band));
    for (int l = 0; l < d; ++l)
      for (int j = 0; j < d; ++j) z(l, j) += std::conj(x[static_cast<std::size_t>(l)]) * x[static_cast<std::size_t>(j)] / (e(m) - e(band));
  }
  return (0.5 * I * z).real();
}

/// Berry curvature Omega_12 of `band` from the Kubo sum, -2 Im sum_m <b|dH_1|m><m|dH_2|b> / (E_m - E_b)^2.
inline Real kubo_curvature(const MatrixXc& h, const MatrixXc& dh1, const MatrixXc& dh2, int band) {
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(h);
  const auto& e = es.eigenvalues();
  const auto& v = es.eigenvectors();
  Complex s = 0;
  for (Eigen::Index m = 0; m < e.size(); ++m) {
    if (m == band) continue;
    const Real gap = e(m) - e(band);
    s += v.col(band).dot(dh1 * v.col(m)) * v.col(m).dot(dh2 * v.col(band)) / (gap * gap);
  }
  return -2 * s.imag();
}

/// Gaussian phase-space symbol exp(-1/2 (z - c)^T P (z - c)), z = (r, xi) in R^{2d}.
struct Gaussian {
  Eigen::MatrixXd P;
  Eigen::VectorXd c;
  Real operator()(const Eigen::VectorXd& z) const { return std::exp(-0.5 * (z - c).dot(P * (z - c))); }
};

/// Nonmagnetic Moyal product of two Gaussians from the integral formula
/// (pi eps)^{-2d} int int f(z + u) g(z + v) exp((2i/eps) (u_r . v_xi - u_xi . v_r)) du dv,
/// evaluated in closed form as a complex Gaussian integral.
inline Complex moyal_gaussian(const Gaussian& f, const Gaussian& g, const Eigen::VectorXd& z, Real eps) {
  const int n2 = static_cast<int>(z.size());  // 2d
  const int d = n2 / 2;
  MatrixXc s = MatrixXc::Zero(n2, n2);
  s.topRightCorner(d, d) = MatrixXc::Identity(d, d);
  s.bottomLeftCorner(d, d) = -MatrixXc::Identity(d, d);
  MatrixXc m(2 * n2, 2 * n2);
  m.topLeftCorner(n2, n2) = f.P.cast<Complex>();
  m.bottomRightCorner(n2, n2) = g.P.cast<Complex>();
  m.topRightCorner(n2, n2) = -(2.0 * I / eps) * s;
  m.bottomLeftCorner(n2, n2) = -(2.0 * I / eps) * s.transpose();
  Eigen::VectorXcd j(2 * n2);
  j.head(n2) = (-f.P * (z - f.c)).cast<Complex>();
  j.tail(n2) = (-g.P * (z - g.c)).cast<Complex>();
  const Real c0 = -0.5 * (z - f.c).dot(f.P * (z - f.c)) - 0.5 * (z - g.c).dot(g.P * (z - g.c));
  // eigenvalues have positive real part, so the product of principal roots is the continuous branch
  Eigen::ComplexEigenSolver<MatrixXc> es(m, false);
  Complex root = 1;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) root *= std::sqrt(es.eigenvalues()(k));
  const Complex quad = 0.5 * (j.transpose() * m.partialPivLu().solve(j)).value();
  const Real pref = std::pow(pi * eps, -2.0 * d) * std::pow(two_pi, 2.0 * d);
  return pref / root * std::exp(quad + c0);
}

/// Trace of the q-step transfer matrix of (1/2)(psi_{n+1} + psi_{n-1}) + cos(2 pi alpha n + theta) psi_n = E psi_n.
inline Real harper_transfer_trace(Real e, int p, int q, Real theta) {
  Real a = 1, b = 0, c = 0, d = 1;  // rows (a b; c d)
  for (int n = 0; n < q; ++n) {
    const Real t = 2 * (e - std::cos(two_pi * p * n / q + theta));
    const Real na = t * a - c, nb = t * b - d;
    c = a;
    d = b;
    a = na;
    b = nb;
  }
  return a + d;
}

/// Band intervals of the Harper chain at fixed theta: the sorted roots of tr^2 = 4 on [-3, 3].
inline std::vector<Real> harper_transfer_roots(int p, int q, Real theta) {
  auto g = [&](Real e) {
    const Real t = harper_transfer_trace(e, p, q, theta);
    return (t - 2) * (t + 2);
  };
  std::vector<Real> roots;
  const Real step = 1e-3;
  for (Real lo = -3; lo < 3; lo += step) {
    Real a = lo, b = lo + step;
    Real ga = g(a), gb = g(b);
    if (ga == 0) {
      roots.push_back(a);
      continue;
    }
    if (ga * gb > 0) continue;
    for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
      const Real m = 0.5 * (a + b);
      const Real gm = g(m);
      if (ga * gm <= 0) {
        b = m;
      } else {
        a = m;
        ga = gm;
      }
    }
    roots.push_back(0.5 * (a + b));
  }
  return roots;
}

/// Spectrum edges of the union over theta: each root is extremized over one period 2 pi / q by a
/// coarse scan followed by golden-section refinement. Returns 2q values (lower, upper per band).
inline std::vector<Real> harper_transfer_edges(int p, int q) {
  const std::size_t count = 2 * static_cast<std::size_t>(q);
  auto root = [&](Real th, std::size_t i) {
    const std::vector<Real> r = harper_transfer_roots(p, q, th);
    if (r.size() != count) throw std::runtime_error("transfer oracle: root count");
    return r[i];
  };
  const Real period = two_pi / q;
  const int scan = 64;
  std::vector<Real> edges(count);
  for (std::size_t i = 0; i < count; ++i) {
    const Real sign = (i % 2 == 0) ? 1 : -1;  // minimize lower edges, maximize upper ones
    auto obj = [&](Real th) { return sign * root(th, i); };
    int best = 0;
    Real best_val = obj(0);
    for (int s = 1; s < scan; ++s) {
      const Real v = obj(period * s / scan);
      if (v < best_val) {
        best_val = v;
        best = s;
      }
    }
    Real a = period * (best - 1) / scan, b = period * (best + 1) / scan;
    const Real gr = 0.5 * (std::sqrt(5.0) - 1);
    Real x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    Real f1 = obj(x1), f2 = obj(x2);
    for (int it = 0; it < 80; ++it) {
      if (f1 < f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - gr * (b - a);
        f1 = obj(x1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + gr * (b - a);
        f2 = obj(x2);
      }
    }
    edges[i] = sign * std::min({f1, f2, best_val});
  }
  return edges;
}

/// Hall conductances t_r of the gaps r = 1..q-1 from r = q s_r + p t_r with |t_r| <= q/2, found by
/// enumeration; subband Chern numbers are t_r - t_{r-1} with t_0 = t_q = 0.
inline std::vector<int> diophantine_cherns(int p, int q) {
  std::vector<int> t(static_cast<std::size_t>(q) + 1, 0);
  for (int r = 1; r < q; ++r) {
    int found = 0, hits = 0;
    for (int cand = -q / 2; cand <= q / 2; ++cand)
      if (((r - p * cand) % q + q) % q == 0) {
        found = cand;
        ++hits;
      }
    if (hits != 1) throw std::runtime_error("diophantine oracle: ambiguous gap label");
    t[static_cast<std::size_t>(r)] = found;
  }
  std::vector<int> c(static_cast<std::size_t>(q));
  for (int r = 1; r <= q; ++r) c[static_cast<std::size_t>(r - 1)] = t[static_cast<std::size_t>(r)] - t[static_cast<std::size_t>(r - 1)];
  return c;
}

}  // namespace oracle
