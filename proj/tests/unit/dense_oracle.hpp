#pragma once

// Dense reference constructions built from Kronecker products, used to check
// the sparse builders entry by entry.

#include <Eigen/Dense>
#include <complex>

namespace oracle {

using Mat = Eigen::MatrixXcd;
using C = std::complex<double>;

inline Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  }
  return out;
}

inline Mat fock_lowering(int m) {
  Mat a = Mat::Zero(m + 1, m + 1);
  for (int n = 1; n <= m; ++n) a(n - 1, n) = std::sqrt(double(n));
  return a;
}

// Atom basis {g, e}.
inline Mat sigma_minus() {
  Mat s = Mat::Zero(2, 2);
  s(0, 1) = 1.0;
  return s;
}

// Photon index outer, atom inner.
inline Mat field(int m) { return kron(fock_lowering(m), Mat::Identity(2, 2)); }
inline Mat atom(int m) { return kron(Mat::Identity(m + 1, m + 1), sigma_minus()); }

inline Mat hamiltonian(int m, double delta, double theta, double g, double eps) {
  const Mat a = field(m), s = atom(m);
  return delta * a.adjoint() * a + theta * s.adjoint() * s + g * (a * s.adjoint() + a.adjoint() * s) +
         eps * (a + a.adjoint());
}

// vec(AXB) = (Bᵀ ⊗ A) vec(X) with column stacking.
inline Mat liouvillian(int m, double delta, double theta, double g, double eps, double kappa, double gamma) {
  const Mat h = hamiltonian(m, delta, theta, g, eps);
  const Mat a = field(m), s = atom(m);
  const Eigen::Index d = h.rows();
  const Mat id = Mat::Identity(d, d);
  const C i1(0.0, 1.0);
  auto dissipator = [&](const Mat& c, double rate) -> Mat {
    const Mat cdc = c.adjoint() * c;
    return rate * (2.0 * kron(c.conjugate(), c) - kron(id, cdc) - kron(cdc.transpose(), id));
  };
  Mat out = -i1 * (kron(id, h) - kron(h.transpose(), id));
  out += dissipator(a, kappa);
  out += dissipator(s, gamma / 2.0);
  return out;
}

}  // namespace oracle
