#include <numeric>

#include <gtest/gtest.h>

#include "hsepsr/windows.hpp"
#include "test_util.hpp"

using namespace hsepsr;

namespace {

// Actions encode their time index, observations 100 + time, so every window
// entry says where it came from.
Trajectory timestamped(Eigen::Index n) {
  Trajectory t;
  t.actions.resize(n, 1);
  t.observations.resize(n, 1);
  for (Eigen::Index k = 0; k < n; ++k) {
    t.actions(k, 0) = static_cast<double>(k);
    t.observations(k, 0) = 100.0 + static_cast<double>(k);
  }
  return t;
}

}  // namespace

TEST(BuildWindows, SampleCount) {
  EXPECT_EQ(build_windows(timestamped(25), {10, 10}).size(), 5);
  EXPECT_THROW(build_windows(timestamped(20), {10, 10}), std::invalid_argument);
  EXPECT_THROW(build_windows(timestamped(25), {0, 10}), std::invalid_argument);
}

TEST(BuildWindows, SingleSampleBoundary) {
  const WindowedData w = build_windows(timestamped(21), {10, 10});
  ASSERT_EQ(w.size(), 1);
  // 1-based time 21 is row 20: the last shifted test observation.
  EXPECT_EQ(w.shifted_test_observations(0, 9), 120.0);
  EXPECT_EQ(w.shifted_test_actions(0, 9), 20.0);
  EXPECT_EQ(w.test_actions(0, 0), 10.0);
  EXPECT_EQ(w.actions(0, 0), 10.0);
  EXPECT_EQ(w.observations(0, 0), 110.0);
}

TEST(BuildWindows, IndexLayout) {
  const Eigen::Index L = 3, N = 2;
  const WindowedData w = build_windows(timestamped(12), {L, N});
  ASSERT_EQ(w.size(), 12 - L - N);
  ASSERT_EQ(w.histories.cols(), 2 * L);
  for (Eigen::Index t = 0; t < w.size(); ++t) {
    for (Eigen::Index j = 0; j < L; ++j) {
      EXPECT_EQ(w.histories(t, 2 * j), static_cast<double>(t + j));
      EXPECT_EQ(w.histories(t, 2 * j + 1), 100.0 + static_cast<double>(t + j));
      EXPECT_EQ(w.shifted_histories(t, 2 * j), static_cast<double>(t + j + 1));
    }
    for (Eigen::Index j = 0; j < N; ++j) {
      EXPECT_EQ(w.test_actions(t, j), static_cast<double>(L + t + j));
      EXPECT_EQ(w.test_observations(t, j), 100.0 + static_cast<double>(L + t + j));
    }
  }
}

TEST(BuildWindows, ShiftConsistency) {
  const WindowedData w = build_windows(test::random_trajectory(40, 2), {4, 3});
  for (Eigen::Index t = 0; t + 1 < w.size(); ++t) {
    EXPECT_EQ(w.shifted_test_actions.row(t), w.test_actions.row(t + 1));
    EXPECT_EQ(w.shifted_test_observations.row(t), w.test_observations.row(t + 1));
    EXPECT_EQ(w.shifted_histories.row(t), w.histories.row(t + 1));
  }
}

TEST(PermuteSamples, ReordersEveryArray) {
  const WindowedData w = build_windows(test::random_trajectory(30, 4), {3, 3});
  std::vector<Eigen::Index> order(static_cast<std::size_t>(w.size()));
  std::iota(order.rbegin(), order.rend(), 0);
  const WindowedData p = permute_samples(w, order);
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    const Eigen::Index s = order[static_cast<std::size_t>(k)];
    EXPECT_EQ(p.histories.row(k), w.histories.row(s));
    EXPECT_EQ(p.shifted_histories.row(k), w.shifted_histories.row(s));
    EXPECT_EQ(p.test_observations.row(k), w.test_observations.row(s));
    EXPECT_EQ(p.shifted_test_actions.row(k), w.shifted_test_actions.row(s));
    EXPECT_EQ(p.observations.row(k), w.observations.row(s));
  }
  std::vector<Eigen::Index> bad(order.size(), 0);
  EXPECT_THROW(permute_samples(w, bad), std::invalid_argument);
}

TEST(Standardize, TwoPoints) {
  Trajectory t;
  t.actions = Eigen::MatrixXd::Constant(2, 1, 5.0);
  t.observations.resize(2, 1);
  t.observations << 1, 3;
  const auto [s, tf] = standardize(t);
  EXPECT_DOUBLE_EQ(s.observations(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(s.observations(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(tf.observation_mean[0], 2.0);
  EXPECT_DOUBLE_EQ(tf.observation_scale[0], 1.0);
  // Constant stream: centered, scale kept at 1.
  EXPECT_EQ(s.actions, Eigen::MatrixXd::Zero(2, 1));
  EXPECT_DOUBLE_EQ(tf.action_scale[0], 1.0);
}

TEST(Standardize, RoundTrip) {
  const Trajectory t = test::random_trajectory(50, 6);
  const auto [s, tf] = standardize(t);
  const Trajectory back = tf.invert(s);
  EXPECT_LT((back.observations - t.observations).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((back.actions - t.actions).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(std::abs(s.observations.col(1).mean()), 1e-12);
  const Eigen::VectorXd o = t.observations.row(7).transpose();
  EXPECT_LT((tf.decode_observation(tf.encode_observation(o)) - o).norm(), 1e-12);
}

TEST(Trajectory, SliceAndValidate) {
  const Trajectory t = timestamped(10);
  const Trajectory s = t.slice(3, 4);
  EXPECT_EQ(s.length(), 4);
  EXPECT_EQ(s.actions(0, 0), 3.0);
  EXPECT_THROW((void)t.slice(8, 4), std::out_of_range);
  Trajectory bad = t;
  bad.observations.conservativeResize(9, 1);
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}
