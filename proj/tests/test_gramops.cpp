#include <gtest/gtest.h>

#include "hsepsr/gramops.hpp"
#include "hsepsr/oracle.hpp"
#include "hsepsr/learner.hpp"
#include "test_util.hpp"

using namespace hsepsr;

TEST(RidgeSolve, Scalar) {
  const auto r = ridge_solve(Eigen::MatrixXd::Ones(1, 1), 1.0, Eigen::MatrixXd::Ones(1, 1));
  EXPECT_DOUBLE_EQ(r.solution(0, 0), 0.5);
  EXPECT_EQ(r.escalations, 0);
}

TEST(RidgeSolve, ZeroMatrix) {
  const Eigen::MatrixXd B = test::random_matrix(4, 3, 1);
  const auto r = ridge_solve(Eigen::MatrixXd::Zero(4, 4), 2.0, B);
  EXPECT_TRUE(r.solution.isApprox(B / 2.0, 1e-15));
}

TEST(RidgeSolve, ResidualOracle) {
  const Eigen::MatrixXd M = test::random_spd(30, 2);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(30, 30);
  const auto r = ridge_solve(M, 0.01, I);
  EXPECT_LT(((M + 0.01 * I) * r.solution - I).norm(), 1e-8);
}

TEST(RidgeSolve, NonSymmetricAndBadInput) {
  const Eigen::MatrixXd M = test::random_matrix(6, 6, 3);
  const Eigen::MatrixXd B = test::random_matrix(6, 2, 4);
  const auto r = ridge_solve(M, 0.5, B);
  EXPECT_LT((((M + 0.5 * Eigen::MatrixXd::Identity(6, 6)) * r.solution) - B).norm(), 1e-8 * B.norm());
  EXPECT_THROW(ridge_solve(M, 0.0, B), std::invalid_argument);
  EXPECT_THROW(ridge_solve(test::random_matrix(3, 4, 1), 1.0, B), std::invalid_argument);
}

TEST(ConditioningMatrix, ClosedForms) {
  EXPECT_DOUBLE_EQ(conditioning_matrix(Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Ones(1, 1), 1.0)(0, 0), 0.5);
  EXPECT_EQ(conditioning_matrix(Eigen::VectorXd::Zero(3), test::random_spd(3, 1), 1.0),
            Eigen::MatrixXd::Zero(3, 3));
  Eigen::VectorXd a(2);
  a << 1, 0;
  const Eigen::MatrixXd C = conditioning_matrix(a, Eigen::MatrixXd::Identity(2, 2), 1.0);
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(2, 2);
  expected(0, 0) = 0.5;
  EXPECT_LT((C - expected).norm(), 1e-15);
}

TEST(ConditioningMatrix, SignedWeightsMatchDirectFormula) {
  const Eigen::MatrixXd G = test::random_spd(7, 5);
  const Eigen::VectorXd a = test::random_matrix(7, 1, 6).col(0);
  const Eigen::MatrixXd L = a.asDiagonal();
  const Eigen::MatrixXd direct =
      (L * G + 0.3 * Eigen::MatrixXd::Identity(7, 7)).inverse() * L;
  EXPECT_LT(test::rel_diff(conditioning_matrix(a, G, 0.3), direct), 1e-10);
}

TEST(HistoryWeights, IdentityGram) {
  const Eigen::MatrixXd A = history_weights(Eigen::MatrixXd::Identity(4, 4), 1.0);
  EXPECT_LT((A - 0.5 * Eigen::MatrixXd::Identity(4, 4)).norm(), 1e-15);
}

TEST(HistoryWeights, DominantRidgeLimit) {
  const Eigen::MatrixXd G = test::random_spd(5, 7);
  const double ridge = 1e6;
  EXPECT_LT(test::rel_diff(history_weights(G, ridge), G / ridge), 1e-4);
}

TEST(HistoryWeights, EigenvalueMap) {
  const Eigen::MatrixXd G = test::random_spd(12, 8);
  const double ridge = 0.2;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  const Eigen::VectorXd g = es.eigenvalues();
  const Eigen::MatrixXd expected =
      es.eigenvectors() * (g.array() / (g.array() + ridge)).matrix().asDiagonal() *
      es.eigenvectors().transpose();
  const Eigen::MatrixXd A = history_weights(G, ridge);
  EXPECT_LT(test::rel_diff(A, expected), 1e-10);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ea(0.5 * (A + A.transpose()), Eigen::EigenvaluesOnly);
  EXPECT_GE(ea.eigenvalues().minCoeff(), -1e-12);
  EXPECT_LT(ea.eigenvalues().maxCoeff(), 1.0);
}

TEST(ConditioningTensor, ContractIsWeightedSum) {
  const Eigen::MatrixXd G = test::random_spd(6, 9);
  const Eigen::MatrixXd W = history_weights(G, 0.1);
  const auto C = build_conditioning_tensor(TensorRole::test_action, W, G, 0.1);
  const Eigen::VectorXd w = test::random_matrix(6, 1, 10).col(0);
  const Eigen::VectorXd v = test::random_matrix(6, 1, 11).col(0);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(6, 6);
  for (Eigen::Index i = 0; i < 6; ++i) {
    EXPECT_LT(test::rel_diff(C.slice(i), conditioning_matrix(W.col(i), G, 0.1)), 1e-14);
    sum += w[i] * C.slice(i);
  }
  const Eigen::MatrixXd packed = C.contract(w);
  EXPECT_LT(test::rel_diff(Eigen::Map<const Eigen::MatrixXd>(packed.data(), 6, 6), sum), 1e-13);
  EXPECT_LT(test::rel_diff(C.contract_apply(w, v), sum * v), 1e-13);
}

TEST(StateGram, ScalarTrace) {
  ConditioningTensor Ci(TensorRole::test_action, 1), Cj(TensorRole::shifted_test_action, 1);
  Ci.slice(0)(0, 0) = 0.7;
  Cj.slice(0)(0, 0) = -0.4;
  const Eigen::MatrixXd go = Eigen::MatrixXd::Constant(1, 1, 0.9);
  const Eigen::MatrixXd ga = Eigen::MatrixXd::Constant(1, 1, 0.6);
  EXPECT_NEAR(state_gram(Ci, Cj, go, ga)(0, 0), 0.7 * -0.4 * 0.9 * 0.6, 1e-16);
}

TEST(StateGram, ZeroTensors) {
  ConditioningTensor C(TensorRole::test_action, 3);
  const Eigen::MatrixXd G = test::random_spd(3, 1);
  EXPECT_EQ(state_gram(C, C, G, G), Eigen::MatrixXd::Zero(3, 3));
}

TEST(StateGram, MatchesTraceDefinition) {
  const Eigen::Index T = 5;
  const Eigen::MatrixXd Go = test::random_spd(T, 1), Ga = test::random_spd(T, 2);
  const Eigen::MatrixXd W = history_weights(test::random_spd(T, 3), 0.2);
  const auto C = build_conditioning_tensor(TensorRole::test_action, W, Ga, 0.2);
  const Eigen::MatrixXd S = state_gram(C, C, Go, Ga);
  for (Eigen::Index i = 0; i < T; ++i) {
    for (Eigen::Index j = 0; j < T; ++j) {
      const Eigen::MatrixXd Ci = C.slice(i), Cj = C.slice(j);
      const double expected = (Ci.transpose() * Go * Cj * Ga.transpose()).trace();
      EXPECT_NEAR(S(i, j), expected, 1e-12 * std::abs(expected) + 1e-14);
    }
  }
  EXPECT_LT((S - S.transpose()).norm(), 1e-10 * S.norm());
  EXPECT_TRUE(test::is_psd(S, 1e-8));
}

// With one-hot features the state Gram is a plain inner product of the
// explicit conditional-embedding estimates Z diag(a) (Y^T diag(a) Y + rI)^{-1} ... .
TEST(StateGram, ExplicitFeatureOracle) {
  const auto sys = DiscreteOracleSystem::default_system();
  const Trajectory tr = sys.sample(9, 21);
  TrainingOptions opt;
  opt.windows = {2, 2};
  opt.regularizer = 0.05;
  opt.kernels = test::delta_kernels();
  const HsePsrModel m = train(tr, opt);
  const Eigen::Index T = m.samples();
  ASSERT_LE(T, 5);
  const double r = m.ridge();

  // Feature matrices: one column per sample.
  auto code = [](const Eigen::RowVectorXd& w, int radix) {
    Eigen::Index c = 0, p = 1;
    for (Eigen::Index k = 0; k < w.size(); ++k, p *= radix) c += std::lround(w[k]) * p;
    return c;
  };
  Eigen::MatrixXd Phi_a = Eigen::MatrixXd::Zero(4, T), Phi_o = Eigen::MatrixXd::Zero(9, T);
  for (Eigen::Index s = 0; s < T; ++s) {
    Phi_a(code(m.windowed.test_actions.row(s), 2), s) = 1.0;
    Phi_o(code(m.windowed.test_observations.row(s), 3), s) = 1.0;
  }
  // S(h_i) = Phi_o diag(a_i) Phi_a^T (Phi_a diag(a_i) Phi_a^T + r I)^{-1}.
  std::vector<Eigen::MatrixXd> S;
  for (Eigen::Index i = 0; i < T; ++i) {
    const Eigen::VectorXd a = m.history_weights.col(i);
    const Eigen::MatrixXd Cov = Phi_a * a.asDiagonal() * Phi_a.transpose();
    S.push_back(Phi_o * a.asDiagonal() * Phi_a.transpose() *
                (Cov + r * Eigen::MatrixXd::Identity(4, 4)).inverse());
  }
  for (Eigen::Index i = 0; i < T; ++i) {
    for (Eigen::Index j = 0; j < T; ++j) {
      const double expected = (S[i].array() * S[j].array()).sum();
      EXPECT_NEAR(m.state_gram(i, j), expected, 1e-8 * std::abs(expected) + 1e-13)
          << i << "," << j;
    }
  }
}
