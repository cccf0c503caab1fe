#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <complex>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace peierls {

using Real = double;
using Complex = std::complex<double>;

using VectorX = Eigen::VectorXd;
using MatrixX = Eigen::MatrixXd;
using VectorXc = Eigen::VectorXcd;
using MatrixXc = Eigen::MatrixXcd;

inline constexpr Real pi = std::numbers::pi_v<Real>;
inline constexpr Real two_pi = 2 * std::numbers::pi_v<Real>;
inline constexpr Complex I{0.0, 1.0};

enum class ErrorKind {
  DegenerateLattice,
  Truncation,
  CutoffMargin,
  Eigensolver,
  Degeneracy,
  GaugeFixing,
  GridRefinement,
  Aliasing,
  FieldConfig,
  Geometry,
  GridMismatch,
  Convergence,
  StepSize,
  BoxSize,
  Config,
  Internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Worker count: PEIERLS_LAB_THREADS if set and positive, otherwise hardware concurrency.
inline unsigned worker_count() {
  if (const char* env = std::getenv("PEIERLS_LAB_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, n) on up to worker_count() threads. Bodies must be independent.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
  const std::size_t workers = std::min<std::size_t>(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

template <typename Derived>
typename Derived::RealScalar hermiticity_defect(const Eigen::MatrixBase<Derived>& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

/// Largest singular value.
template <typename Derived>
typename Derived::RealScalar operator_norm(const Eigen::MatrixBase<Derived>& m) {
  using Mat = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (m.size() == 0) return 0;
  const Mat gram = m.adjoint() * m;
  Eigen::SelfAdjointEigenSolver<Mat> es(gram, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max<typename Derived::RealScalar>(es.eigenvalues().maxCoeff(), 0));
}

/// Least-squares slope of log(y) against log(x).
inline Real loglog_slope(const std::vector<Real>& x, const std::vector<Real>& y) {
  const std::size_t n = x.size();
  Real mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  Real num = 0, den = 0;
  for (std::size_t i = 0; i < n; ++i) {
    num += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    den += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return num / den;
}

/// Fourth-order centred-difference gradient of a scalar function.
template <typename F>
VectorX numerical_gradient(F&& f, const VectorX& x, Real step = 1e-3) {
  VectorX g(x.size());
  VectorX y = x;
  for (Eigen::Index l = 0; l < x.size(); ++l) {
    auto at = [&](Real off) {
      y(l) = x(l) + off;
      const Real v = f(y);
      y(l) = x(l);
      return v;
    };
    g(l) = (8 * (at(step) - at(-step)) - (at(2 * step) - at(-2 * step))) / (12 * step);
  }
  return g;
}

}  // namespace peierls
