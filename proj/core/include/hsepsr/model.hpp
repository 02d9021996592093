#pragma once

#include <memory>
#include <mutex>
#include <vector>

#include <Eigen/Dense>

#include "hsepsr/gramops.hpp"
#include "hsepsr/kernels.hpp"
#include "hsepsr/windows.hpp"

namespace hsepsr {

/// Weights over training samples. The represented state is always
/// sum_s weights[s] * (shifted training state s).
struct BeliefState {
  Eigen::VectorXd weights;

  [[nodiscard]] Eigen::Index size() const { return weights.size(); }
};

/// Deterministic facts about a training run; persisted with the model.
struct TrainingReport {
  Eigen::Index samples = 0;
  std::vector<JitterEvent> jitter;
};

/// Wall-clock breakdown of a training run. Not persisted.
struct TrainingTimings {
  double grams = 0.0;
  double tensors = 0.0;
  double state_grams = 0.0;
  double total = 0.0;
};

/// A trained model. Treat as immutable once built: filter sessions share it
/// across threads. The shifted-test-action and single-action conditioning
/// tensors are rebuilt on first use when the model was loaded from disk.
class HsePsrModel {
 public:
  WindowedData windowed;          // in model (encoded) coordinates
  KernelSet kernels;
  GramCache grams;
  Eigen::MatrixXd history_weights;     // column t: weights of training history t
  Eigen::MatrixXd shifted_history_weights;  // the same for the shifted histories
  Eigen::MatrixXd state_gram;          // G_T,T
  Eigen::MatrixXd state_gram_shifted;  // G_T,T'
  Eigen::MatrixXd propagation;         // (G_T,T + ridge I)^{-1} G_T,T'
  Eigen::VectorXd feasible;            // 1_T / T
  double regularizer = 0.0;            // lambda; the effective ridge is grams.ridge
  AffineTransform transform;
  TrainingReport report;
  TrainingTimings timings;

  [[nodiscard]] Eigen::Index samples() const { return windowed.size(); }
  [[nodiscard]] double ridge() const { return grams.ridge; }

  /// C'_i built against G_TA',TA' with the shifted history weights.
  [[nodiscard]] const ConditioningTensor& shifted_test_action_tensor() const;
  /// D_i built against G_A,A.
  [[nodiscard]] const ConditioningTensor& action_tensor() const;

  /// Installs tensors computed during training. No-op for a tensor that has
  /// already been materialized.
  void install_tensors(ConditioningTensor shifted, ConditioningTensor action);

  /// Discards cached tensors so they are rebuilt on next access.
  void reset_tensor_cache();

 private:
  struct TensorCache {
    std::once_flag shifted_once;
    std::once_flag action_once;
    ConditioningTensor shifted;
    ConditioningTensor action;
  };
  std::shared_ptr<TensorCache> cache_ = std::make_shared<TensorCache>();
};

}  // namespace hsepsr
