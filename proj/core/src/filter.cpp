#include "hsepsr/filter.hpp"

#include <cmath>
#include <stdexcept>

#include "hsepsr/kernels.hpp"
#include "hsepsr/learner.hpp"

namespace hsepsr {

namespace {

void check_belief(const HsePsrModel& model, const Eigen::VectorXd& weights) {
  if (weights.size() != model.samples()) {
    throw std::invalid_argument("belief weight vector does not match the model sample count");
  }
}

void maybe_renormalize(Eigen::VectorXd& weights, const FilterOptions& options) {
  if (!options.renormalize) return;
  const double total = weights.sum();
  if (std::abs(total) > kDegenerateBeliefNorm) weights /= total;
}

}  // namespace

bool is_degenerate(const Eigen::VectorXd& weights) {
  return !(weights.lpNorm<1>() >= kDegenerateBeliefNorm);
}

Eigen::VectorXd propagate(const HsePsrModel& model, const BeliefState& belief) {
  check_belief(model, belief.weights);
  return model.propagation * belief.weights;
}

Eigen::VectorXd condition_action(const HsePsrModel& model, const Eigen::VectorXd& propagated,
                                 const Eigen::VectorXd& action) {
  check_belief(model, propagated);
  const Eigen::VectorXd encoded = model.transform.encode_action(action);
  const Eigen::VectorXd k = kernel_column(model.kernels.action, model.windowed.actions, encoded);
  return model.action_tensor().contract_apply(propagated, k);
}

StepResult condition_observation(const HsePsrModel& model, const Eigen::VectorXd& action_weights,
                                 const Eigen::VectorXd& observation) {
  check_belief(model, action_weights);
  const Eigen::VectorXd encoded = model.transform.encode_observation(observation);
  StepResult out;
  out.state.weights = detail::condition_observation_encoded(model, action_weights, encoded);
  out.degenerate = is_degenerate(action_weights) || is_degenerate(out.state.weights);
  return out;
}

StepResult update(const HsePsrModel& model, const BeliefState& belief,
                  const Eigen::VectorXd& action, const Eigen::VectorXd& observation,
                  const FilterOptions& options) {
  const Eigen::VectorXd propagated = propagate(model, belief);
  const Eigen::VectorXd conditioned = condition_action(model, propagated, action);
  StepResult out = condition_observation(model, conditioned, observation);
  out.degenerate = out.degenerate || is_degenerate(propagated);
  maybe_renormalize(out.state.weights, options);
  return out;
}

FilterRun filter_trajectory(const HsePsrModel& model, const BeliefState& initial,
                            const Eigen::MatrixXd& actions, const Eigen::MatrixXd& observations,
                            const FilterOptions& options) {
  if (actions.rows() != observations.rows()) {
    throw std::invalid_argument("filter_trajectory: action/observation lengths differ");
  }
  check_belief(model, initial.weights);
  FilterRun run;
  run.states.reserve(static_cast<std::size_t>(actions.rows()));
  BeliefState current = initial;
  for (Eigen::Index k = 0; k < actions.rows(); ++k) {
    StepResult step = update(model, current, actions.row(k).transpose(),
                             observations.row(k).transpose(), options);
    if (step.degenerate) {
      step.state = feasible_state(model);
      run.resets.push_back(k);
    }
    current = step.state;
    run.states.push_back(current);
  }
  return run;
}

namespace detail {

Eigen::MatrixXd condition_action_batch(const HsePsrModel& model,
                                       const Eigen::MatrixXd& propagated,
                                       const Eigen::MatrixXd& encoded_actions) {
  const Eigen::Index T = model.samples();
  const Eigen::Index B = propagated.cols();
  const Eigen::MatrixXd summed = model.action_tensor().contract(propagated);
  Eigen::MatrixXd out(T, B);
  for (Eigen::Index b = 0; b < B; ++b) {
    const Eigen::VectorXd k = kernel_column(model.kernels.action, model.windowed.actions,
                                            encoded_actions.row(b).transpose());
    out.col(b).noalias() = Eigen::Map<const Eigen::MatrixXd>(summed.col(b).data(), T, T) * k;
  }
  return out;
}

Eigen::VectorXd condition_observation_encoded(const HsePsrModel& model,
                                              const Eigen::VectorXd& action_weights,
                                              const Eigen::VectorXd& encoded_observation) {
  const Eigen::VectorXd k = kernel_column(model.kernels.observation, model.windowed.observations,
                                          encoded_observation);
  // conditioning_matrix(w, G_OO, ridge) * k, solved against the single
  // right-hand side diag(w) k rather than the full diag(w).
  const Eigen::MatrixXd weighted = action_weights.asDiagonal() * model.grams.observation;
  const Eigen::VectorXd rhs = action_weights.cwiseProduct(k);
  return ridge_solve(weighted, model.ridge(), rhs).solution;
}

Eigen::MatrixXd update_batch(const HsePsrModel& model, const Eigen::MatrixXd& beliefs,
                             const Eigen::MatrixXd& encoded_actions,
                             const Eigen::MatrixXd& encoded_observations,
                             const FilterOptions& options, std::vector<bool>* resets) {
  const Eigen::Index B = beliefs.cols();
  const Eigen::MatrixXd propagated = model.propagation * beliefs;
  const Eigen::MatrixXd conditioned = condition_action_batch(model, propagated, encoded_actions);
  Eigen::MatrixXd out(beliefs.rows(), B);
  if (resets) resets->assign(static_cast<std::size_t>(B), false);
  for (Eigen::Index b = 0; b < B; ++b) {
    Eigen::VectorXd next =
        condition_observation_encoded(model, conditioned.col(b), encoded_observations.row(b).transpose());
    const bool degenerate = is_degenerate(propagated.col(b)) ||
                            is_degenerate(conditioned.col(b)) || is_degenerate(next);
    if (degenerate) {
      next = model.feasible;
      if (resets) (*resets)[static_cast<std::size_t>(b)] = true;
    } else {
      maybe_renormalize(next, options);
    }
    out.col(b) = next;
  }
  return out;
}

}  // namespace detail

}  // namespace hsepsr
