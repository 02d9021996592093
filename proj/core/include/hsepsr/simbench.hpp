#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hsepsr/filter.hpp"
#include "hsepsr/model.hpp"
#include "hsepsr/predict.hpp"
#include "hsepsr/windows.hpp"

namespace hsepsr {

// ---------------------------------------------------------------------------
// Synthetic nonlinear system
//
//   x1' = x2 - 0.1 cos(x1) (5 x1 - 4 x1^3 + x1^5) - 0.5 cos(x1) u
//   x2' = -65 x1 + 50 x1^3 - 15 x1^5 - x2 - 100 u
//   y   = x1
//
// sampled at 20 Hz with u held constant over each sample interval.

struct SynthConfig {
  Eigen::Index n_steps = 1600;
  double dt = 0.05;
  int substeps = 10;
  double action_low = -0.5;
  double action_high = 0.5;
  std::uint64_t seed = 0;
  Eigen::Vector2d initial_state = Eigen::Vector2d::Zero();

  void validate() const;
};

Eigen::Vector2d synth_derivative(const Eigen::Vector2d& x, double u);

/// Draws the blind zero-order-hold policy: one uniform u per sample.
Eigen::VectorXd draw_policy(const SynthConfig& config);

/// Integrates the system under the given held inputs (one per sample) and
/// returns the trajectory with observation y = x1 after each sample interval.
/// Throws std::runtime_error naming the step if the state stops being finite.
Trajectory integrate_system(const SynthConfig& config, const Eigen::VectorXd& inputs,
                            Eigen::Vector2d* final_state = nullptr);

/// integrate_system(config, draw_policy(config)).
Trajectory simulate_system(const SynthConfig& config);

// ---------------------------------------------------------------------------
// Prediction protocol

inline const std::vector<Eigen::Index>& default_horizons() {
  static const std::vector<Eigen::Index> h{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 20, 50, 100};
  return h;
}
std::vector<Eigen::Index> full_horizons(Eigen::Index max_horizon = 100);

/// Extents first, first + stride, ... keeping extent + max_horizon within the
/// test trajectory.
std::vector<Eigen::Index> subsampled_extents(Eigen::Index test_length, Eigen::Index max_horizon,
                                             Eigen::Index first = 101, Eigen::Index stride = 10,
                                             Eigen::Index last = 1100);

/// Something that, after seeing the first t1 steps of a trajectory, predicts
/// the observations t1 + h for each horizon h given the future actions.
class Predictor {
 public:
  virtual ~Predictor() = default;
  [[nodiscard]] virtual std::string name() const = 0;
  /// Entry k is a |horizons| x d_o matrix of predictions for extents[k].
  virtual std::vector<Eigen::MatrixXd> predict(const Trajectory& test,
                                               std::span<const Eigen::Index> extents,
                                               std::span<const Eigen::Index> horizons) = 0;
};

class MeanBaseline final : public Predictor {
 public:
  explicit MeanBaseline(const Trajectory& train);
  [[nodiscard]] std::string name() const override { return "mean"; }
  std::vector<Eigen::MatrixXd> predict(const Trajectory& test, std::span<const Eigen::Index> extents,
                                       std::span<const Eigen::Index> horizons) override;
  [[nodiscard]] const Eigen::VectorXd& mean() const { return mean_; }

 private:
  Eigen::VectorXd mean_;
};

class PreviousBaseline final : public Predictor {
 public:
  [[nodiscard]] std::string name() const override { return "prev"; }
  std::vector<Eigen::MatrixXd> predict(const Trajectory& test, std::span<const Eigen::Index> extents,
                                       std::span<const Eigen::Index> horizons) override;
};

/// Reads the answers off the test trajectory; its table is all zeros.
class PerfectPredictor final : public Predictor {
 public:
  [[nodiscard]] std::string name() const override { return "perfect"; }
  std::vector<Eigen::MatrixXd> predict(const Trajectory& test, std::span<const Eigen::Index> extents,
                                       std::span<const Eigen::Index> horizons) override;
};

/// Filters the test trajectory once from the feasible state, snapshots the
/// belief after each extent and rolls out predictions with the true future
/// actions.
class HsePsrPredictor final : public Predictor {
 public:
  HsePsrPredictor(std::shared_ptr<const HsePsrModel> model, RolloutOptions options = {});
  [[nodiscard]] std::string name() const override { return "hse-psr"; }
  std::vector<Eigen::MatrixXd> predict(const Trajectory& test, std::span<const Eigen::Index> extents,
                                       std::span<const Eigen::Index> horizons) override;
  /// Filter steps replaced by the feasible state during the last predict().
  [[nodiscard]] const std::vector<Eigen::Index>& resets() const { return resets_; }

 private:
  std::shared_ptr<const HsePsrModel> model_;
  RolloutOptions options_;
  std::vector<Eigen::Index> resets_;
};

struct MseTable {
  std::vector<std::string> models;
  std::vector<Eigen::Index> horizons;     // ascending
  std::vector<std::vector<double>> mse;   // mse[model][horizon index]
  Eigen::Index n_extents = 0;
  Eigen::Index training_size = 0;
  std::uint64_t seed = 0;
  Eigen::Index prediction_events = 0;     // summed over models

  [[nodiscard]] const std::vector<double>& row(const std::string& model) const;
};

/// Squared Euclidean prediction error averaged over extents, per horizon.
/// Extent t1 means the first t1 steps are observed and horizon h targets
/// step t1 + h (1-based), so t1 + max(h) must not exceed the test length.
MseTable run_protocol(std::span<Predictor* const> predictors, const Trajectory& test,
                      std::span<const Eigen::Index> extents, std::vector<Eigen::Index> horizons);

}  // namespace hsepsr
