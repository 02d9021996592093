#pragma once

#include <vector>

#include <Eigen/Dense>

#include "hsepsr/filter.hpp"
#include "hsepsr/model.hpp"

namespace hsepsr {

enum class PredictionMode {
  conditioned,  // condition on the future actions first (default)
  direct,       // weight training windows by the state weights alone (diagnostic)
};

/// gamma = (sum_i alpha_i C'_i) k_TA'(window). `action_window` has N rows in
/// data coordinates. gamma weights the shifted test-observation windows.
Eigen::VectorXd condition_test_actions(const HsePsrModel& model, const BeliefState& belief,
                                       const Eigen::MatrixXd& action_window);

/// dot(f_values, gamma); f_values[s] is f at shifted training window s.
double expect_function(const Eigen::VectorXd& gamma, const Eigen::VectorXd& f_values);

/// Expected j-th (1-based, j <= N) future observation in data coordinates.
/// Uses the first N rows of `future_actions`.
Eigen::VectorXd predict_observation_at(const HsePsrModel& model, const BeliefState& belief,
                                       const Eigen::MatrixXd& future_actions, Eigen::Index j,
                                       PredictionMode mode = PredictionMode::conditioned);

struct RolloutOptions {
  PredictionMode mode = PredictionMode::conditioned;
  FilterOptions filter;
  /// When set, these observations (data coordinates, one row per future
  /// step) are fed back instead of the model's own predictions.
  const Eigen::MatrixXd* feedback = nullptr;
};

/// Row r of the result is the expected observation at horizons[r] (1-based).
/// Horizons up to N are read from the current state; beyond that the
/// predicted next observation is filtered in as if observed, together with the
/// given action, and the process repeated. With a delta observation kernel
/// the fed-back value is the most heavily weighted training symbol instead of
/// the mean. Needs future_actions.rows() >= max(horizons) and >= N.
Eigen::MatrixXd rollout_predict(const HsePsrModel& model, const BeliefState& belief,
                                const Eigen::MatrixXd& future_actions,
                                const std::vector<Eigen::Index>& horizons,
                                const RolloutOptions& options = {});

/// rollout_predict for many independent sessions, sharing the tensor
/// contractions across them.
std::vector<Eigen::MatrixXd> rollout_predict_batch(
    const HsePsrModel& model, const std::vector<BeliefState>& beliefs,
    const std::vector<Eigen::MatrixXd>& future_actions, const std::vector<Eigen::Index>& horizons,
    const RolloutOptions& options = {});

}  // namespace hsepsr
