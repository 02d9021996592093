#include <gtest/gtest.h>

#include "hsepsr/filter.hpp"
#include "hsepsr/learner.hpp"
#include "hsepsr/oracle.hpp"
#include "hsepsr/predict.hpp"
#include "test_util.hpp"

using namespace hsepsr;

namespace {

HsePsrModel small_model(std::uint64_t seed = 1) {
  TrainingOptions o;
  o.windows = {3, 3};
  o.regularizer = 1e-2;
  return train(test::random_trajectory(50, seed), o);
}

HsePsrModel cycle_model(double lambda) {
  const auto sys = DiscreteOracleSystem::deterministic_cycle();
  TrainingOptions o;
  o.windows = {2, 2};
  o.regularizer = lambda;
  o.kernels = test::delta_kernels();
  return train(sys.sample(60, 3), o);
}

}  // namespace

TEST(ConditionTestActions, ScalarChain) {
  TrainingOptions o;
  o.windows = {3, 3};
  o.regularizer = 1e-2;
  o.standardize = false;
  for (auto* k : {&o.kernels.history, &o.kernels.test_action, &o.kernels.test_observation,
                  &o.kernels.action, &o.kernels.observation}) {
    k->bandwidth = 1.0;
  }
  const HsePsrModel m = train(test::random_trajectory(7, 2), o);
  const Eigen::MatrixXd window = test::random_matrix(3, 1, 3);
  const double c = m.shifted_test_action_tensor().slice(0)(0, 0);
  const double k =
      std::exp(-(m.windowed.shifted_test_actions.row(0).transpose() - window.col(0)).squaredNorm() / 2.0);
  EXPECT_NEAR(condition_test_actions(m, {Eigen::VectorXd::Ones(1)}, window)[0], c * k, 1e-15);
}

TEST(ConditionTestActions, Linearity) {
  const HsePsrModel m = small_model();
  const Eigen::Index T = m.samples();
  const Eigen::MatrixXd window = test::random_matrix(3, 1, 4);
  const Eigen::VectorXd a1 = test::random_matrix(T, 1, 5).col(0);
  const Eigen::VectorXd a2 = test::random_matrix(T, 1, 6).col(0);
  EXPECT_EQ(condition_test_actions(m, {Eigen::VectorXd::Zero(T)}, window), Eigen::VectorXd::Zero(T));
  const Eigen::VectorXd sum = condition_test_actions(m, {a1 + a2}, window);
  const Eigen::VectorXd parts =
      condition_test_actions(m, {a1}, window) + condition_test_actions(m, {a2}, window);
  EXPECT_LT((sum - parts).norm(), 1e-12 * parts.norm());
}

TEST(ExpectFunction, Definitions) {
  const Eigen::VectorXd f = test::random_matrix(6, 1, 7).col(0);
  EXPECT_EQ(expect_function(Eigen::VectorXd::Unit(6, 4), f), f[4]);
  EXPECT_NEAR(expect_function(Eigen::VectorXd::Constant(6, 1.0 / 6.0), f), f.mean(), 1e-15);
  const Eigen::VectorXd g = test::random_matrix(6, 1, 8).col(0);
  EXPECT_NEAR(expect_function(g, Eigen::VectorXd::Ones(6)), g.sum(), 1e-15);
  EXPECT_THROW((void)expect_function(g, Eigen::VectorXd::Ones(5)), std::invalid_argument);
}

TEST(PredictObservation, ConstantObservationsScaleWithGammaSum) {
  Trajectory t = test::random_trajectory(40, 9);
  t.observations.setConstant(2.5);
  TrainingOptions o;
  o.windows = {3, 3};
  o.regularizer = 1e-2;
  o.standardize = false;
  o.kernels.observation.bandwidth = 1.0;
  o.kernels.test_observation.bandwidth = 1.0;
  const HsePsrModel m = train(t, o);
  const BeliefState b = feasible_state(m);
  const Eigen::MatrixXd fut = test::random_matrix(3, 1, 10);
  const Eigen::VectorXd gamma = condition_test_actions(m, b, fut);
  for (Eigen::Index j = 1; j <= 3; ++j) {
    const Eigen::VectorXd p = predict_observation_at(m, b, fut, j);
    EXPECT_NEAR(p[0], 2.5 * gamma.sum(), 1e-12);
    EXPECT_NEAR(p[1], 2.5 * gamma.sum(), 1e-12);
  }
  EXPECT_THROW((void)predict_observation_at(m, b, fut, 4), std::out_of_range);
  EXPECT_THROW((void)predict_observation_at(m, b, fut, 0), std::out_of_range);
}

TEST(PredictObservation, DirectModeSelectsTrainingWindow) {
  const HsePsrModel m = small_model(11);
  const Eigen::Index s = 5;
  const BeliefState e{Eigen::VectorXd::Unit(m.samples(), s)};
  const Eigen::MatrixXd fut = test::random_matrix(3, 1, 12);
  for (Eigen::Index j = 1; j <= 3; ++j) {
    const Eigen::VectorXd p = predict_observation_at(m, e, fut, j, PredictionMode::direct);
    const Eigen::VectorXd encoded = m.windowed.shifted_test_observations.row(s).segment(2 * (j - 1), 2).transpose();
    EXPECT_LT((p - m.transform.decode_observation(encoded)).norm(), 1e-12);
  }
}

TEST(Rollout, ShortHorizonsReadStateDirectly) {
  const HsePsrModel m = small_model(13);
  const Trajectory q = test::random_trajectory(12, 14);
  const BeliefState b = filter_trajectory(m, feasible_state(m), q.actions, q.observations).states.back();
  const Eigen::MatrixXd fut = test::random_matrix(3, 1, 15);
  const Eigen::MatrixXd r = rollout_predict(m, b, fut, {1, 2, 3});
  for (Eigen::Index j = 1; j <= 3; ++j) {
    EXPECT_LT((r.row(j - 1).transpose() - predict_observation_at(m, b, fut, j)).norm(), 1e-13);
  }
}

TEST(Rollout, FeedingTrueObservationsReproducesFilter) {
  const HsePsrModel m = small_model(16);
  const Trajectory q = test::random_trajectory(30, 17);
  const FilterRun run = filter_trajectory(m, feasible_state(m), q.actions, q.observations);
  const Eigen::Index t1 = 15, N = 3, H = 8;
  const Eigen::MatrixXd fut_a = q.actions.middleRows(t1, H);
  const Eigen::MatrixXd fut_o = q.observations.middleRows(t1, H);
  RolloutOptions opt;
  opt.feedback = &fut_o;
  std::vector<Eigen::Index> hs;
  for (Eigen::Index h = 1; h <= H; ++h) hs.push_back(h);
  const Eigen::MatrixXd r = rollout_predict(m, run.states[t1 - 1], fut_a, hs, opt);
  for (Eigen::Index h = N + 1; h <= H; ++h) {
    // Horizon h reads offset N of the state after h - N true steps.
    const BeliefState& s = run.states[static_cast<std::size_t>(t1 - 1 + h - N)];
    const Eigen::VectorXd expected =
        predict_observation_at(m, s, q.actions.middleRows(t1 + h - N, N), N);
    EXPECT_LT((r.row(h - 1).transpose() - expected).norm(), 1e-10 * (1.0 + expected.norm())) << h;
  }
}

TEST(Rollout, BatchMatchesSingle) {
  const HsePsrModel m = small_model(18);
  const Trajectory q = test::random_trajectory(20, 19);
  const FilterRun run = filter_trajectory(m, feasible_state(m), q.actions, q.observations);
  std::vector<BeliefState> beliefs{run.states[5], run.states[9], run.states[14]};
  std::vector<Eigen::MatrixXd> fut{test::random_matrix(9, 1, 1), test::random_matrix(9, 1, 2),
                                   test::random_matrix(9, 1, 3)};
  const std::vector<Eigen::Index> hs{1, 3, 4, 9};
  const auto batch = rollout_predict_batch(m, beliefs, fut, hs);
  for (std::size_t b = 0; b < 3; ++b) {
    EXPECT_LT(test::rel_diff(batch[b], rollout_predict(m, beliefs[b], fut[b], hs)), 1e-10);
  }
  EXPECT_THROW(rollout_predict(m, beliefs[0], test::random_matrix(5, 1, 1), hs), std::invalid_argument);
}

TEST(Rollout, DeterministicCycleIsExact) {
  const auto sys = DiscreteOracleSystem::deterministic_cycle();
  const HsePsrModel m = cycle_model(1e-10);
  const Trajectory q = sys.sample(30, 77);
  const FilterRun run = filter_trajectory(m, feasible_state(m), q.actions, q.observations);
  EXPECT_TRUE(run.resets.empty());
  for (Eigen::Index t = 5; t + 3 < q.length(); ++t) {
    const BeliefState& b = run.states[static_cast<std::size_t>(t - 1)];
    const Eigen::MatrixXd fut = q.actions.middleRows(t, 3);
    // One-step distribution.
    const Eigen::VectorXd p = gram_observation_distribution(m, b, fut.topRows(2), 3);
    const Eigen::VectorXd truth = Eigen::VectorXd::Unit(3, std::lround(q.observations(t, 0)));
    EXPECT_LT((p - truth).cwiseAbs().maxCoeff(), 1e-6) << "t=" << t;
    // Horizon N + 1 = 3 needs one internal filter step.
    const Eigen::MatrixXd r = rollout_predict(m, b, fut, {1, 2, 3});
    for (Eigen::Index h = 1; h <= 3; ++h) {
      EXPECT_NEAR(r(h - 1, 0), q.observations(t + h - 1, 0), 1e-6) << "t=" << t << " h=" << h;
    }
  }
}
