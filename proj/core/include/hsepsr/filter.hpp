#pragma once

#include <vector>

#include <Eigen/Dense>

#include "hsepsr/model.hpp"

namespace hsepsr {

/// Weight vectors whose l1 norm falls below this are treated as annihilated.
inline constexpr double kDegenerateBeliefNorm = 1e-12;

[[nodiscard]] bool is_degenerate(const Eigen::VectorXd& weights);

struct FilterOptions {
  /// Rescale weights to sum to one after every update. Off by default: the
  /// estimator's weights are signed and unnormalized.
  bool renormalize = false;
};

struct StepResult {
  BeliefState state;
  bool degenerate = false;
};

// Actions and observations below are in data coordinates; the model's
// standardization is applied internally.

/// alpha_hat = (G_T,T + ridge I)^{-1} G_T,T' alpha.
Eigen::VectorXd propagate(const HsePsrModel& model, const BeliefState& belief);

/// sum_i alpha_hat[i] D_i k_A(a).
Eigen::VectorXd condition_action(const HsePsrModel& model, const Eigen::VectorXd& propagated,
                                 const Eigen::VectorXd& action);

/// Kernel Bayes' rule on the received observation:
/// (diag(w) G_O,O + ridge I)^{-1} diag(w) k_O(o). Flags a degenerate result.
StepResult condition_observation(const HsePsrModel& model, const Eigen::VectorXd& action_weights,
                                 const Eigen::VectorXd& observation);

/// One full filter step. `degenerate` is set if any stage annihilated the
/// weights; the returned state is then whatever the stages produced.
StepResult update(const HsePsrModel& model, const BeliefState& belief,
                  const Eigen::VectorXd& action, const Eigen::VectorXd& observation,
                  const FilterOptions& options = {});

struct FilterRun {
  std::vector<BeliefState> states;   // states[k] follows the first k + 1 pairs
  std::vector<Eigen::Index> resets;  // steps whose result was replaced by the feasible state
};

/// Filters row by row from `initial`. A degenerate step is replaced by the
/// feasible state and recorded in `resets`.
FilterRun filter_trajectory(const HsePsrModel& model, const BeliefState& initial,
                            const Eigen::MatrixXd& actions, const Eigen::MatrixXd& observations,
                            const FilterOptions& options = {});

namespace detail {

// Batched, model-coordinate versions of the filter stages: column b of every
// weight matrix is an independent session.

Eigen::MatrixXd condition_action_batch(const HsePsrModel& model,
                                       const Eigen::MatrixXd& propagated,
                                       const Eigen::MatrixXd& encoded_actions);

Eigen::VectorXd condition_observation_encoded(const HsePsrModel& model,
                                              const Eigen::VectorXd& action_weights,
                                              const Eigen::VectorXd& encoded_observation);

/// Applies a full update to every column; degenerate columns are reset to the
/// feasible state and reported in `resets` (one flag per column).
Eigen::MatrixXd update_batch(const HsePsrModel& model, const Eigen::MatrixXd& beliefs,
                             const Eigen::MatrixXd& encoded_actions,
                             const Eigen::MatrixXd& encoded_observations,
                             const FilterOptions& options, std::vector<bool>* resets);

}  // namespace detail

}  // namespace hsepsr
