#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "hsepsr/model.hpp"
#include "hsepsr/windows.hpp"

namespace hsepsr {

/// A small controlled hidden-state process with known tables. Hidden state
/// s_t ~ transitions[a_t](s_{t-1}, .), observation o_t ~ emission(s_t, .).
/// Actions and observations are symbol indices stored as doubles.
struct DiscreteOracleSystem {
  std::vector<Eigen::MatrixXd> transitions;  // one row-stochastic S x S table per action
  Eigen::MatrixXd emission;                  // S x O, row-stochastic

  [[nodiscard]] int states() const { return static_cast<int>(emission.rows()); }
  [[nodiscard]] int symbols() const { return static_cast<int>(emission.cols()); }
  [[nodiscard]] int actions() const { return static_cast<int>(transitions.size()); }

  void validate() const;

  /// 3 hidden states, 3 symbols, 2 actions with noisy emissions.
  static DiscreteOracleSystem default_system();
  /// A single action; the state advances 0 -> 1 -> 2 -> 0 and is emitted
  /// exactly.
  static DiscreteOracleSystem deterministic_cycle();

  /// Stationary distribution of the transition averaged over a uniform policy.
  [[nodiscard]] Eigen::VectorXd stationary() const;

  /// n steps under a uniform random blind policy, starting from `prior`
  /// (stationary if empty).
  [[nodiscard]] Trajectory sample(Eigen::Index n, std::uint64_t seed,
                                  const Eigen::VectorXd& prior = {}) const;

  /// Row t (0-based) is P(o_t | a_0..a_t, o_0..o_{t-1}) under exact Bayes
  /// filtering from `prior` (stationary if empty).
  [[nodiscard]] Eigen::MatrixXd one_step_predictions(const Trajectory& trajectory,
                                                     const Eigen::VectorXd& prior = {}) const;
};

/// The same estimator as the Gram path, computed with explicit one-hot
/// feature vectors and finite covariance operators. Only practical for small
/// symbol alphabets and windows, where its cost is linear-ish in T.
class ExplicitHsePsr {
 public:
  ExplicitHsePsr(const WindowedData& data, double regularizer, int n_actions, int n_symbols);

  [[nodiscard]] const Eigen::VectorXd& initial_state() const { return initial_; }

  /// One action/observation step on an explicit state (vec of a d_TO x d_TA
  /// conditional operator).
  [[nodiscard]] Eigen::VectorXd update(const Eigen::VectorXd& state, int action,
                                       int observation) const;

  /// Embedding of the next N observations given the next N actions.
  [[nodiscard]] Eigen::VectorXd test_embedding(const Eigen::VectorXd& state,
                                               const std::vector<int>& action_window) const;

  /// Implied distribution of the next observation given the next N actions.
  [[nodiscard]] Eigen::VectorXd observation_distribution(const Eigen::VectorXd& state,
                                                         const std::vector<int>& action_window) const;

  [[nodiscard]] Eigen::Index samples() const { return samples_; }
  [[nodiscard]] double ridge() const { return ridge_; }

  /// Explicit feature Gram Phi^T Phi of the history windows.
  [[nodiscard]] Eigen::MatrixXd history_feature_gram() const;

 private:
  int n_actions_;
  int n_symbols_;
  Eigen::Index history_length_;
  Eigen::Index test_length_;
  Eigen::Index samples_;
  Eigen::Index d_ta_;
  Eigen::Index d_to_;
  double ridge_;
  Eigen::MatrixXd phi_h_;
  Eigen::MatrixXd f_aot_;  // state -> vec of (d_s * d_O) x d_A
  Eigen::MatrixXd f_ao_;   // state -> vec of (d_O * d_O) x d_A
  Eigen::VectorXd initial_;
};

/// Next-observation distribution from a Gram-path belief: the gamma-weighted
/// indicator of the first symbol of each shifted training window.
Eigen::VectorXd gram_observation_distribution(const HsePsrModel& model, const BeliefState& belief,
                                              const Eigen::MatrixXd& action_window, int n_symbols);

double total_variation(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

}  // namespace hsepsr
