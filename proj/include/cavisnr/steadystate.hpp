#pragma once

// Steady state of the master equation: Lρ = 0 with tr ρ = 1, the adaptive
// Fock cutoff around it, and the observables read off the resulting ρ.

#include <Eigen/Dense>
#include <Eigen/SparseLU>
#include <algorithm>
#include <functional>
#include <memory>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "cavisnr/hilbert.hpp"

namespace cavisnr {

using DenseMatrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

struct SteadyState {
  DenseMatrix rho;
  int cutoff = 1;
  double residual = 0.0;                ///< ‖Lρ‖ / (‖L‖·‖ρ‖)
  double tail_population = 0.0;         ///< population of the top two Fock levels
  double hermiticity_correction = 0.0;  ///< max |ρ − (ρ + ρ†)/2| before symmetrisation
  double min_eigenvalue = 0.0;
  bool hermitian_ok = true;
};

struct Observables {
  double photons = 0.0;               ///< n = ⟨a†a⟩
  Complex field{0.0, 0.0};            ///< ⟨a⟩
  Complex atomic_coherence{0.0, 0.0}; ///< ⟨σ₋⟩
  double excited_population = 0.0;
  double purity = 1.0;
  double fano = 1.0;                  ///< (⟨n²⟩ − ⟨n⟩²)/⟨n⟩, 1 for the vacuum
};

struct SolveOptions {
  double residual_tol = 1e-9;
  int max_refinements = 4;
  double hermiticity_tol = 1e-8;
};

namespace detail {

// Max absolute row sum.
inline double inf_norm(const SparseMatrix& m) {
  Eigen::VectorXd rows = Eigen::VectorXd::Zero(m.rows());
  for (std::int64_t k = 0; k < m.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) rows[it.row()] += std::abs(it.value());
  }
  return rows.size() ? rows.maxCoeff() : 0.0;
}

template <typename Matrix>
double one_norm(const Matrix& m) {
  double best = 0.0;
  for (std::int64_t k = 0; k < m.outerSize(); ++k) {
    double col = 0.0;
    for (typename Matrix::InnerIterator it(m, k); it; ++it) col += std::abs(it.value());
    best = std::max(best, col);
  }
  return best;
}

// Hager/Higham estimate of ‖A⁻¹‖₁ from an existing factorisation.
template <typename Solver>
double inverse_one_norm_estimate(Solver& lu, std::int64_t n) {
  using Scalar = typename Solver::Scalar;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Vec x = Vec::Constant(n, Scalar(1.0 / double(n)));
  double estimate = 0.0;
  for (int iter = 0; iter < 5; ++iter) {
    Vec y = lu.solve(x);
    estimate = y.cwiseAbs().sum();
    Vec xi(n);
    for (std::int64_t i = 0; i < n; ++i) {
      const double mag = std::abs(y[i]);
      xi[i] = mag > 0.0 ? Scalar(y[i] / mag) : Scalar(1.0);
    }
    Vec z = lu.adjoint().solve(xi);
    Eigen::Index j = 0;
    const double zmax = z.cwiseAbs().maxCoeff(&j);
    if (zmax <= std::real(z.dot(x))) break;
    x.setZero();
    x[j] = Scalar(1.0);
  }
  return estimate;
}

inline double tail_population(const DenseMatrix& rho, int cutoff) {
  double tail = 0.0;
  for (int n = std::max(0, cutoff - 1); n <= cutoff; ++n) {
    for (int s = 0; s < 2; ++s) {
      const int i = FockBasis::index(n, s);
      tail += std::real(rho(i, i));
    }
  }
  return tail;
}

}  // namespace detail

enum class SolveMethod {
  kHermitianReal,  ///< real system over the D² independent real parameters of a Hermitian ρ
  kComplex,        ///< full complex system, Hermiticity enforced afterwards
};

namespace detail {

// Real parameters of a Hermitian D × D matrix, column by column: for column c
// the pairs (Re ρ(p,c), Im ρ(p,c)) for p < c, then ρ(c,c). Column c starts at c².
inline std::int64_t hermitian_re(std::int64_t p, std::int64_t c) { return c * c + 2 * p; }
inline std::int64_t hermitian_diag(std::int64_t c) { return c * c + 2 * c; }

using RealSparse = Eigen::SparseMatrix<double, Eigen::ColMajor, std::int64_t>;
using RealTriplet = Eigen::Triplet<double, std::int64_t>;

// Restricts L to Hermitian inputs and keeps the independent outputs (r ≤ c).
// The last equation, for ρ(D−1, D−1), is replaced by tr ρ = 1.
inline RealSparse hermitian_system(const SparseMatrix& lm, std::int64_t d, double scale) {
  const std::int64_t last = d * d - 1;
  std::vector<RealTriplet> t;
  t.reserve(static_cast<std::size_t>(2 * lm.nonZeros() + d));
  auto put = [&](std::int64_t eq_re, bool has_im, std::int64_t unknown, Complex coef) {
    if (coef.real() != 0.0 && eq_re != last) t.emplace_back(eq_re, unknown, coef.real());
    if (has_im && coef.imag() != 0.0) t.emplace_back(eq_re + 1, unknown, coef.imag());
  };
  for (std::int64_t k = 0; k < lm.outerSize(); ++k) {
    const std::int64_t p = k % d, q = k / d;
    for (SparseMatrix::InnerIterator it(lm, k); it; ++it) {
      const std::int64_t r = it.row() % d, c = it.row() / d;
      if (r > c) continue;
      const Complex v = scale * it.value();
      const bool off = r < c;
      const std::int64_t eq = off ? hermitian_re(r, c) : hermitian_diag(c);
      if (p == q) {
        put(eq, off, hermitian_diag(q), v);
      } else if (p < q) {
        // ρ(p,q) = x + iy
        put(eq, off, hermitian_re(p, q), v);
        put(eq, off, hermitian_re(p, q) + 1, Complex(0.0, 1.0) * v);
      } else {
        // ρ(p,q) = conj ρ(q,p) = x − iy
        put(eq, off, hermitian_re(q, p), v);
        put(eq, off, hermitian_re(q, p) + 1, Complex(0.0, -1.0) * v);
      }
    }
  }
  for (std::int64_t i = 0; i < d; ++i) t.emplace_back(last, hermitian_diag(i), 1.0);
  RealSparse system(d * d, d * d);
  system.setFromTriplets(t.begin(), t.end());
  system.makeCompressed();
  return system;
}

inline DenseMatrix unpack_hermitian(const Eigen::VectorXd& x, std::int64_t d) {
  DenseMatrix rho(d, d);
  for (std::int64_t c = 0; c < d; ++c) {
    for (std::int64_t p = 0; p < c; ++p) {
      const Complex v(x[hermitian_re(p, c)], x[hermitian_re(p, c) + 1]);
      rho(p, c) = v;
      rho(c, p) = std::conj(v);
    }
    rho(c, c) = x[hermitian_diag(c)];
  }
  return rho;
}

// Solves with a few rounds of iterative refinement on the same factors.
template <typename Solver, typename Matrix, typename Vec>
Vec refine(Solver& lu, const Matrix& system, const Vec& rhs, const SolveOptions& options) {
  Vec x = lu.solve(rhs);
  for (int i = 0; i < options.max_refinements; ++i) {
    const Vec r = rhs - system * x;
    if (r.norm() <= 1e-3 * options.residual_tol * std::max(1.0, x.norm())) break;
    x += lu.solve(r);
  }
  return x;
}

}  // namespace detail

/// Solves Lρ = 0 together with tr ρ = 1. The last equation of the system is
/// replaced by the trace condition; L is scaled by 1/‖L‖∞ first.
inline SteadyState solve_steady(const Liouvillian& liouvillian, const SolveOptions& options = {},
                                SolveMethod method = SolveMethod::kHermitianReal) {
  const SparseMatrix& lm = liouvillian.matrix;
  const std::int64_t d = liouvillian.basis.dim();
  const std::int64_t n = d * d;
  const double l_norm = detail::inf_norm(lm);
  const double scale = l_norm > 0.0 ? 1.0 / l_norm : 1.0;

  SteadyState out;
  out.cutoff = liouvillian.basis.cutoff();
  std::function<double()> condition;

  if (method == SolveMethod::kHermitianReal) {
    auto system = std::make_shared<detail::RealSparse>(detail::hermitian_system(lm, d, scale));
    auto lu = std::make_shared<Eigen::SparseLU<detail::RealSparse, Eigen::COLAMDOrdering<std::int64_t>>>();
    lu->analyzePattern(*system);
    lu->factorize(*system);
    if (lu->info() != Eigen::Success) {
      throw SolverError("steady-state system is singular (steady state not unique): " +
                            lu->lastErrorMessage(),
                        std::numeric_limits<double>::infinity());
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs[n - 1] = 1.0;
    Eigen::VectorXd x = detail::refine(*lu, *system, rhs, options);
    out.rho = detail::unpack_hermitian(x, d);
    condition = [system, lu, n] {
      return detail::one_norm(*system) * detail::inverse_one_norm_estimate(*lu, n);
    };
  } else {
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(lm.nonZeros() + d));
    for (std::int64_t k = 0; k < lm.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(lm, k); it; ++it) {
        if (it.row() != n - 1) t.emplace_back(it.row(), it.col(), scale * it.value());
      }
    }
    for (std::int64_t i = 0; i < d; ++i) t.emplace_back(n - 1, i * (d + 1), 1.0);
    auto system = std::make_shared<SparseMatrix>(n, n);
    system->setFromTriplets(t.begin(), t.end());
    system->makeCompressed();
    auto lu = std::make_shared<Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<std::int64_t>>>();
    lu->analyzePattern(*system);
    lu->factorize(*system);
    if (lu->info() != Eigen::Success) {
      throw SolverError("steady-state system is singular (steady state not unique): " +
                            lu->lastErrorMessage(),
                        std::numeric_limits<double>::infinity());
    }
    Vector rhs = Vector::Zero(n);
    rhs[n - 1] = 1.0;
    Vector x = detail::refine(*lu, *system, rhs, options);
    out.rho = Eigen::Map<const DenseMatrix>(x.data(), d, d);
    condition = [system, lu, n] {
      return detail::one_norm(*system) * detail::inverse_one_norm_estimate(*lu, n);
    };
  }

  const Complex trace = out.rho.trace();
  if (!out.rho.allFinite() || std::abs(trace) == 0.0) {
    throw SolverError("steady-state solve did not return a normalisable density matrix", condition());
  }
  out.rho /= trace;

  const Eigen::Map<const Vector> vec_rho(out.rho.data(), n);
  out.residual = (lm * vec_rho).norm() / (std::max(l_norm, 1e-300) * vec_rho.norm());
  if (!(out.residual <= options.residual_tol)) {
    std::ostringstream msg;
    msg << "steady-state residual " << out.residual << " exceeds " << options.residual_tol;
    throw SolverError(msg.str(), condition());
  }

  const DenseMatrix hermitian = (out.rho + out.rho.adjoint()) / 2.0;
  out.hermiticity_correction = (out.rho - hermitian).cwiseAbs().maxCoeff();
  out.hermitian_ok = out.hermiticity_correction <= options.hermiticity_tol;
  out.rho = hermitian;
  out.rho /= out.rho.trace().real();

  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(out.rho, Eigen::EigenvaluesOnly);
  out.min_eigenvalue = eig.eigenvalues().minCoeff();
  out.tail_population = detail::tail_population(out.rho, out.cutoff);
  return out;
}

inline Observables expectations(const SteadyState& state) {
  const DenseMatrix& rho = state.rho;
  const int m = state.cutoff;
  Observables o;
  double n1 = 0.0, n2 = 0.0;
  Complex field(0.0), coherence(0.0);
  double excited = 0.0;
  for (int n = 0; n <= m; ++n) {
    for (int s = 0; s < 2; ++s) {
      const int i = FockBasis::index(n, s);
      const double p = std::real(rho(i, i));
      n1 += n * p;
      n2 += double(n) * n * p;
      if (s == 1) excited += p;
      // tr(aρ) = Σ √n ρ(|n,s⟩, |n−1,s⟩)
      if (n >= 1) field += std::sqrt(double(n)) * rho(i, FockBasis::index(n - 1, s));
    }
    coherence += rho(FockBasis::index(n, 1), FockBasis::index(n, 0));
  }
  o.photons = n1;
  o.field = field;
  o.atomic_coherence = coherence;
  o.excited_population = excited;
  o.purity = rho.cwiseAbs2().sum();
  // Below ~1e-14 photons the ratio is rounding noise; report the vacuum value.
  o.fano = n1 > 1e-14 ? (n2 - n1 * n1) / n1 : 1.0;
  return o;
}

/// Absolute agreement (photons, field amplitude) accepted by the doubling check.
inline constexpr double kDoublingAbsoluteFloor = 1e-12;

struct TruncationPolicy {
  double tol = 1e-8;          ///< top-two-level population and (×10) doubling agreement
  int hard_cap = 400;         ///< largest accepted Fock cutoff
  bool verify_doubling = true;
  SolveMethod method = SolveMethod::kHermitianReal;
  SolveOptions solve{};
  LiouvillianLimits limits{};
};

struct TruncatedSolution {
  int cutoff = 1;
  SteadyState state;
  bool doubling_verified = false;
  double doubling_change = 0.0;  ///< max relative change of n and |⟨a⟩| between m and 2m
};

/// ⌈n + 8√(n + 1) + 10⌉ for an expected photon number n.
inline int initial_cutoff_guess(double n_empty) {
  return static_cast<int>(std::ceil(n_empty + 8.0 * std::sqrt(n_empty + 1.0) + 10.0));
}

/// Empty-cavity photon number ε²/(κ² + Δ²).
inline double empty_cavity_photons(double epsilon, double kappa, double delta) {
  if (epsilon == 0.0) return 0.0;
  const double den = kappa * kappa + delta * delta;
  if (den <= 0.0) throw ParameterError("undamped resonant drive has no steady state");
  return epsilon * epsilon / den;
}

inline SteadyState solve_at_cutoff(const JaynesCummingsParams& p, const Dissipation& diss, int cutoff,
                                   const TruncationPolicy& policy) {
  return solve_steady(build_liouvillian(p, diss, FockBasis(cutoff), policy.limits), policy.solve,
                      policy.method);
}

/// Picks the smallest tested cutoff whose top-level population is below tol
/// and whose observables agree with a run at twice the cutoff.
inline TruncatedSolution auto_truncate(const JaynesCummingsParams& p, const Dissipation& diss,
                                       const TruncationPolicy& policy = {}) {
  if (!(policy.tol > 0.0) || policy.tol > 1e-2) {
    throw ParameterError("truncation tolerance must lie in (0, 1e-2]");
  }
  TruncatedSolution out;
  if (p.epsilon == 0.0) {
    out.cutoff = 1;
    out.state = solve_at_cutoff(p, diss, 1, policy);
    out.doubling_verified = true;
    return out;
  }

  const double n_empty = empty_cavity_photons(p.epsilon, diss.kappa, p.delta);
  int m = initial_cutoff_guess(n_empty);
  auto too_large = [&](int cutoff) {
    std::ostringstream msg;
    msg << "Fock cutoff " << cutoff << " exceeds hard cap " << policy.hard_cap
        << " (drive epsilon=" << p.epsilon << " rad/s, empty-cavity photons " << n_empty << ")";
    return CapacityError(msg.str(), cutoff, policy.hard_cap);
  };

  std::optional<SteadyState> current;
  while (true) {
    if (m > policy.hard_cap) throw too_large(m);
    if (!current) current = solve_at_cutoff(p, diss, m, policy);
    if (current->tail_population >= policy.tol) {
      m = m + std::max(10, m / 2);
      current.reset();
      continue;
    }
    if (!policy.verify_doubling) {
      out.cutoff = m;
      out.state = std::move(*current);
      return out;
    }
    SteadyState doubled = solve_at_cutoff(p, diss, 2 * m, policy);
    const Observables a = expectations(*current);
    const Observables b = expectations(doubled);
    auto rel = [](double x, double y) { return std::abs(x - y) / std::max(std::abs(y), 1e-14); };
    // Rounding in ρ leaves ~1e-14 of absolute noise in n even when the
    // truncation error is nil, so tiny photon numbers get an absolute floor.
    auto agrees = [&](double x, double y) {
      return std::abs(x - y) <= 10.0 * policy.tol * std::abs(y) + kDoublingAbsoluteFloor;
    };
    const double change = std::max(rel(a.photons, b.photons), rel(std::abs(a.field), std::abs(b.field)));
    if (agrees(a.photons, b.photons) && agrees(std::abs(a.field), std::abs(b.field))) {
      out.cutoff = m;
      out.state = std::move(*current);
      out.doubling_verified = true;
      out.doubling_change = change;
      return out;
    }
    m *= 2;
    current = std::move(doubled);
  }
}

}  // namespace cavisnr
