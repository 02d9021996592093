#pragma once

#include <span>
#include <utility>

#include <Eigen/Dense>

namespace hsepsr {

/// Time-aligned action and observation streams; row t is time step t.
/// `symbolic` marks integer-coded discrete streams (delta kernels, no
/// standardization).
struct Trajectory {
  Eigen::MatrixXd actions;
  Eigen::MatrixXd observations;
  bool symbolic = false;

  [[nodiscard]] Eigen::Index length() const { return actions.rows(); }
  [[nodiscard]] Eigen::Index action_dim() const { return actions.cols(); }
  [[nodiscard]] Eigen::Index observation_dim() const { return observations.cols(); }

  /// Throws std::invalid_argument on length/dimension inconsistencies.
  void validate() const;

  /// Rows [begin, begin + count).
  [[nodiscard]] Trajectory slice(Eigen::Index begin, Eigen::Index count) const;
};

struct WindowConfig {
  Eigen::Index history_length = 10;
  Eigen::Index test_length = 10;
};

/// Aligned training samples cut from one trajectory. Row t of every matrix is
/// sample t. Histories are interleaved (a, o) pairs, oldest first; test
/// windows are the N actions (or observations) starting at the sample anchor,
/// and the shifted windows start one step later. The shifted history is the
/// history one step later, i.e. it ends with the sample's current (a, o).
struct WindowedData {
  Eigen::MatrixXd histories;
  Eigen::MatrixXd shifted_histories;
  Eigen::MatrixXd test_actions;
  Eigen::MatrixXd test_observations;
  Eigen::MatrixXd shifted_test_actions;
  Eigen::MatrixXd shifted_test_observations;
  Eigen::MatrixXd actions;
  Eigen::MatrixXd observations;
  Eigen::Index history_length = 0;
  Eigen::Index test_length = 0;
  Eigen::Index action_dim = 0;
  Eigen::Index observation_dim = 0;

  [[nodiscard]] Eigen::Index size() const { return histories.rows(); }
};

/// T = n - L - N samples; sample t (1-based) is anchored at time L + t.
WindowedData build_windows(const Trajectory& trajectory, const WindowConfig& config);

/// Reorders samples consistently across every array: row k of the result is
/// row `order[k]` of the input.
WindowedData permute_samples(const WindowedData& data, std::span<const Eigen::Index> order);

/// Flattens N consecutive rows of `stream` starting at `begin` into one window.
Eigen::VectorXd flatten_window(const Eigen::MatrixXd& stream, Eigen::Index begin,
                               Eigen::Index length);

/// Per-coordinate affine map x -> (x - mean) / scale for both streams.
struct AffineTransform {
  Eigen::VectorXd action_mean;
  Eigen::VectorXd action_scale;
  Eigen::VectorXd observation_mean;
  Eigen::VectorXd observation_scale;

  static AffineTransform identity(Eigen::Index action_dim, Eigen::Index observation_dim);

  [[nodiscard]] Trajectory apply(const Trajectory& trajectory) const;
  [[nodiscard]] Trajectory invert(const Trajectory& trajectory) const;

  [[nodiscard]] Eigen::VectorXd encode_action(const Eigen::Ref<const Eigen::VectorXd>& a) const;
  [[nodiscard]] Eigen::VectorXd encode_observation(const Eigen::Ref<const Eigen::VectorXd>& o) const;
  [[nodiscard]] Eigen::VectorXd decode_observation(const Eigen::Ref<const Eigen::VectorXd>& o) const;
  /// Encodes every row of an action matrix.
  [[nodiscard]] Eigen::MatrixXd encode_actions(const Eigen::MatrixXd& actions) const;
  [[nodiscard]] Eigen::MatrixXd encode_observations(const Eigen::MatrixXd& observations) const;
};

/// Zero mean, unit variance per coordinate (population variance). Constant
/// coordinates are centered and keep scale 1.
std::pair<Trajectory, AffineTransform> standardize(const Trajectory& trajectory);

}  // namespace hsepsr
