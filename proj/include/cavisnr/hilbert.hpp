#pragma once

// Operators of the driven Jaynes-Cummings model on a truncated atom ⊗ Fock
// space, and the Lindblad generator acting on column-stacked density matrices.
//
// Basis ordering: photon index outer, atom index inner, so the state |n, s⟩
// (s = 0 ground, s = 1 excited) has index 2n + s. A density matrix ρ is
// vectorised column by column: vec(ρ)[r + D·c] = ρ(r, c).

#include <Eigen/Sparse>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "cavisnr/error.hpp"

namespace cavisnr {

using Complex = std::complex<double>;
using SparseMatrix = Eigen::SparseMatrix<Complex, Eigen::ColMajor, std::int64_t>;
using Triplet = Eigen::Triplet<Complex, std::int64_t>;

/// States |0⟩ … |m⟩ of the cavity mode times the two atomic levels.
class FockBasis {
 public:
  explicit FockBasis(int cutoff) : cutoff_(cutoff) {
    if (cutoff < 1) throw BasisError("Fock cutoff must be >= 1, got " + std::to_string(cutoff));
  }

  int cutoff() const noexcept { return cutoff_; }
  int dim() const noexcept { return 2 * (cutoff_ + 1); }
  static constexpr int index(int photons, int atom) noexcept { return 2 * photons + atom; }

  friend bool operator==(const FockBasis&, const FockBasis&) = default;

 private:
  int cutoff_;
};

/// A D × D operator on the truncated space, stored in rad/s (ħ dropped).
struct SystemOperator {
  FockBasis basis;
  SparseMatrix matrix;
};

/// Coherent part of the model in the frame rotating with the probe.
struct JaynesCummingsParams {
  double delta = 0.0;    ///< Δ = ω_c − ω₀
  double theta = 0.0;    ///< θ = ω_a − ω₀
  double g = 0.0;        ///< atom-field coupling
  double epsilon = 0.0;  ///< probe drive strength
};

struct Dissipation {
  double kappa = 0.0;  ///< total cavity field decay
  double gamma = 0.0;  ///< atomic population decay
};

struct Liouvillian {
  FockBasis basis;
  JaynesCummingsParams params;
  Dissipation dissipation;
  SparseMatrix matrix;  ///< D² × D², dvec(ρ)/dt = matrix · vec(ρ)
};

/// Caps the superoperator size. The default admits cutoffs up to ~500.
struct LiouvillianLimits {
  std::int64_t max_superoperator_dim = 1'100'000;
};

inline SparseMatrix annihilation(const FockBasis& basis) {
  const int d = basis.dim();
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(d));
  for (int n = 1; n <= basis.cutoff(); ++n) {
    for (int s = 0; s < 2; ++s) {
      t.emplace_back(FockBasis::index(n - 1, s), FockBasis::index(n, s), std::sqrt(double(n)));
    }
  }
  SparseMatrix a(d, d);
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

/// σ₋ = |g⟩⟨e| on every photon number.
inline SparseMatrix atomic_lowering(const FockBasis& basis) {
  const int d = basis.dim();
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(basis.cutoff() + 1));
  for (int n = 0; n <= basis.cutoff(); ++n) {
    t.emplace_back(FockBasis::index(n, 0), FockBasis::index(n, 1), 1.0);
  }
  SparseMatrix s(d, d);
  s.setFromTriplets(t.begin(), t.end());
  return s;
}

/// H/ħ = Δa†a + θσ₊σ₋ + g(aσ₊ + a†σ₋) + ε(a + a†).
inline SystemOperator build_hamiltonian(const JaynesCummingsParams& p, const FockBasis& basis) {
  const int d = basis.dim();
  const int m = basis.cutoff();
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(4 * d));
  for (int n = 0; n <= m; ++n) {
    for (int s = 0; s < 2; ++s) {
      const double diag = p.delta * n + p.theta * s;
      if (diag != 0.0) t.emplace_back(FockBasis::index(n, s), FockBasis::index(n, s), diag);
    }
    if (n >= 1) {
      const double root = std::sqrt(double(n));
      if (p.g != 0.0) {
        // aσ₊ takes |n, g⟩ to |n−1, e⟩.
        t.emplace_back(FockBasis::index(n - 1, 1), FockBasis::index(n, 0), p.g * root);
        t.emplace_back(FockBasis::index(n, 0), FockBasis::index(n - 1, 1), p.g * root);
      }
      if (p.epsilon != 0.0) {
        for (int s = 0; s < 2; ++s) {
          t.emplace_back(FockBasis::index(n - 1, s), FockBasis::index(n, s), p.epsilon * root);
          t.emplace_back(FockBasis::index(n, s), FockBasis::index(n - 1, s), p.epsilon * root);
        }
      }
    }
  }
  SystemOperator h{basis, SparseMatrix(d, d)};
  h.matrix.setFromTriplets(t.begin(), t.end());
  return h;
}

namespace detail {

// Appends (A ⊗ B-style) superoperator entries for X ↦ left·X (col-stacked).
inline void append_left(std::vector<Triplet>& t, const SparseMatrix& left, std::int64_t d) {
  for (std::int64_t k = 0; k < left.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(left, k); it; ++it) {
      const std::int64_t r = it.row(), p = it.col();
      for (std::int64_t c = 0; c < d; ++c) t.emplace_back(r + d * c, p + d * c, it.value());
    }
  }
}

// X ↦ X·right.
inline void append_right(std::vector<Triplet>& t, const SparseMatrix& right, std::int64_t d) {
  for (std::int64_t k = 0; k < right.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(right, k); it; ++it) {
      const std::int64_t q = it.row(), c = it.col();
      for (std::int64_t r = 0; r < d; ++r) t.emplace_back(r + d * c, r + d * q, it.value());
    }
  }
}

// X ↦ scale · C X C†.
inline void append_sandwich(std::vector<Triplet>& t, const SparseMatrix& jump, double scale,
                            std::int64_t d) {
  for (std::int64_t k1 = 0; k1 < jump.outerSize(); ++k1) {
    for (SparseMatrix::InnerIterator a(jump, k1); a; ++a) {
      for (std::int64_t k2 = 0; k2 < jump.outerSize(); ++k2) {
        for (SparseMatrix::InnerIterator b(jump, k2); b; ++b) {
          // (C ρ C†)(r, c) gets C(r, p) ρ(p, q) conj(C(c, q)).
          t.emplace_back(a.row() + d * b.row(), a.col() + d * b.col(),
                         scale * a.value() * std::conj(b.value()));
        }
      }
    }
  }
}

}  // namespace detail

/// dρ/dt = −i[H, ρ] + κ(2aρa† − a†aρ − ρa†a) + (γ/2)(2σ₋ρσ₊ − σ₊σ₋ρ − ρσ₊σ₋).
inline Liouvillian build_liouvillian(const JaynesCummingsParams& p, const Dissipation& diss,
                                     const FockBasis& basis, const LiouvillianLimits& limits = {}) {
  if (!(diss.kappa >= 0.0) || !(diss.gamma >= 0.0)) {
    throw ParameterError("decay rates must be >= 0");
  }
  const std::int64_t d = basis.dim();
  const std::int64_t super_dim = d * d;
  if (super_dim > limits.max_superoperator_dim) {
    // Largest cutoff whose superoperator still fits.
    long suggested = 0;
    while (std::int64_t(2 * (suggested + 2)) * (2 * (suggested + 2)) <= limits.max_superoperator_dim) {
      ++suggested;
    }
    throw CapacityError("Liouvillian dimension " + std::to_string(super_dim) + " exceeds cap " +
                            std::to_string(limits.max_superoperator_dim) +
                            "; largest admissible Fock cutoff is " + std::to_string(suggested),
                        basis.cutoff(), suggested);
  }

  const SparseMatrix h = build_hamiltonian(p, basis).matrix;
  const SparseMatrix a = annihilation(basis);
  const SparseMatrix sm = atomic_lowering(basis);
  const SparseMatrix ada = SparseMatrix(a.adjoint()) * a;
  const SparseMatrix sps = SparseMatrix(sm.adjoint()) * sm;

  // Non-Hermitian effective generator K = H − i(κ a†a + γ/2 σ₊σ₋):
  // −i[H, ρ] − {κa†a + γ/2 σ₊σ₋, ρ} = −iKρ + iρK†.
  const Complex i1(0.0, 1.0);
  SparseMatrix k_eff = h - i1 * (diss.kappa * ada + (diss.gamma / 2.0) * sps);
  SparseMatrix left = -i1 * k_eff;
  SparseMatrix right = i1 * SparseMatrix(k_eff.adjoint());
  left.prune(Complex(0.0));
  right.prune(Complex(0.0));

  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>((left.nonZeros() + right.nonZeros()) * d + 2 * super_dim));
  detail::append_left(t, left, d);
  detail::append_right(t, right, d);
  if (diss.kappa > 0.0) detail::append_sandwich(t, a, 2.0 * diss.kappa, d);
  if (diss.gamma > 0.0) detail::append_sandwich(t, sm, diss.gamma, d);

  Liouvillian out{basis, p, diss, SparseMatrix(super_dim, super_dim)};
  out.matrix.setFromTriplets(t.begin(), t.end());
  out.matrix.prune(Complex(0.0));
  out.matrix.makeCompressed();
  return out;
}

}  // namespace cavisnr
