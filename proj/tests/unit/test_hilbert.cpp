#include <gtest/gtest.h>

#include <random>

#include "cavisnr/hilbert.hpp"
#include "unit/dense_oracle.hpp"

using namespace cavisnr;

TEST(Hilbert, BasisDimensionAndIndex) {
  const FockBasis b(5);
  EXPECT_EQ(b.dim(), 12);
  EXPECT_EQ(FockBasis::index(3, 1), 7);
  EXPECT_THROW(FockBasis(0), BasisError);
  EXPECT_THROW(FockBasis(-3), BasisError);
}

TEST(Hilbert, AnnihilationActsOnFockStates) {
  const int m = 6;
  const Eigen::MatrixXcd a = Eigen::MatrixXcd(annihilation(FockBasis(m)));
  EXPECT_LT((a - oracle::field(m)).norm(), 1e-15);
  // [a, a†] = 1 below the top photon level.
  const Eigen::MatrixXcd comm = a * a.adjoint() - a.adjoint() * a;
  for (int n = 0; n < m; ++n) {
    for (int s = 0; s < 2; ++s) {
      const int i = FockBasis::index(n, s);
      EXPECT_NEAR(comm(i, i).real(), 1.0, 1e-14);
    }
  }
}

TEST(Hilbert, AtomicLoweringMatchesKronecker) {
  const Eigen::MatrixXcd s = Eigen::MatrixXcd(atomic_lowering(FockBasis(4)));
  EXPECT_LT((s - oracle::atom(4)).norm(), 1e-15);
}

TEST(Hilbert, HamiltonianMatchesDenseOracle) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 10; ++trial) {
    const int m = 2 + trial % 5;
    const JaynesCummingsParams p{u(rng), u(rng), u(rng), u(rng)};
    const Eigen::MatrixXcd h = Eigen::MatrixXcd(build_hamiltonian(p, FockBasis(m)).matrix);
    EXPECT_LT((h - oracle::hamiltonian(m, p.delta, p.theta, p.g, p.epsilon)).norm(), 1e-13);
    EXPECT_LT((h - h.adjoint()).norm(), 1e-15);
  }
}

TEST(Hilbert, LiouvillianMatchesDenseOracle) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0), pos(0.1, 2.0);
  for (int trial = 0; trial < 6; ++trial) {
    const int m = 1 + trial;
    const JaynesCummingsParams p{u(rng), u(rng), u(rng), u(rng)};
    const Dissipation d{pos(rng), pos(rng)};
    const Liouvillian l = build_liouvillian(p, d, FockBasis(m));
    const Eigen::MatrixXcd dense = Eigen::MatrixXcd(l.matrix);
    const Eigen::MatrixXcd ref = oracle::liouvillian(m, p.delta, p.theta, p.g, p.epsilon, d.kappa, d.gamma);
    EXPECT_LT((dense - ref).cwiseAbs().maxCoeff(), 1e-13) << "cutoff " << m;
  }
}

// tr(Lρ) = 0 for every ρ: each column of L has zero weight on the diagonal
// positions r + D·r.
TEST(Hilbert, LiouvillianPreservesTrace) {
  const int m = 5;
  const Liouvillian l = build_liouvillian({0.3, -0.7, 1.1, 0.9}, {0.5, 0.8}, FockBasis(m));
  const std::int64_t d = l.basis.dim();
  Eigen::VectorXcd trace_row = Eigen::VectorXcd::Zero(d * d);
  for (std::int64_t r = 0; r < d; ++r) trace_row[r + d * r] = 1.0;
  const Eigen::VectorXcd col_traces = Eigen::MatrixXcd(l.matrix).transpose() * trace_row;
  EXPECT_LT(col_traces.cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Hilbert, LiouvillianPreservesHermiticity) {
  const int m = 4;
  const Liouvillian l = build_liouvillian({0.3, -0.7, 1.1, 0.9}, {0.5, 0.8}, FockBasis(m));
  const std::int64_t d = l.basis.dim();
  std::mt19937 rng(3);
  std::normal_distribution<double> n;
  Eigen::MatrixXcd x(d, d);
  for (std::int64_t i = 0; i < d * d; ++i) x.data()[i] = {n(rng), n(rng)};
  const Eigen::MatrixXcd rho = x + x.adjoint();
  const Eigen::VectorXcd out = l.matrix * Eigen::Map<const Eigen::VectorXcd>(rho.data(), d * d);
  const Eigen::MatrixXcd drho = Eigen::Map<const Eigen::MatrixXcd>(out.data(), d, d);
  EXPECT_LT((drho - drho.adjoint()).norm(), 1e-12 * drho.norm());
}

TEST(Hilbert, CapacityCapReportsLargestCutoff) {
  LiouvillianLimits limits;
  limits.max_superoperator_dim = 1000;  // D ≤ 31, cutoff ≤ 14
  EXPECT_NO_THROW(build_liouvillian({}, {1.0, 1.0}, FockBasis(14), limits));
  try {
    build_liouvillian({}, {1.0, 1.0}, FockBasis(15), limits);
    FAIL() << "expected CapacityError";
  } catch (const CapacityError& e) {
    EXPECT_EQ(e.requested(), 15);
    EXPECT_EQ(e.cap(), 14);
  }
}

TEST(Hilbert, NegativeRatesRejected) {
  EXPECT_THROW(build_liouvillian({}, {-1.0, 1.0}, FockBasis(2)), ParameterError);
}
