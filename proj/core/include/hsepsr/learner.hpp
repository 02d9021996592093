#pragma once

#include <cstddef>

#include "hsepsr/model.hpp"

namespace hsepsr {

inline constexpr double kDefaultRegularizer = 1e-4;
inline constexpr Eigen::Index kDefaultMaxSamples = 500;

struct TrainingOptions {
  WindowConfig windows;
  double regularizer = kDefaultRegularizer;
  /// Families and optional fixed bandwidths per stream; dimensions are taken
  /// from the data. Empty rbf bandwidths are set by the median trick.
  KernelSet kernels;
  /// Ignored for symbolic trajectories.
  bool standardize = true;
  std::size_t bandwidth_cap = kDefaultBandwidthCap;
  /// Conditioning tensors take 8 T^3 bytes each; refuse larger problems.
  Eigen::Index max_samples = kDefaultMaxSamples;
};

/// Full pipeline: standardize, window, resolve bandwidths, build Grams,
/// history weights, conditioning tensors, state Grams and the propagation
/// matrix.
HsePsrModel train(const Trajectory& trajectory, const TrainingOptions& options);

/// Same pipeline starting from already windowed samples in model coordinates.
HsePsrModel train_windows(const WindowedData& data, const TrainingOptions& options,
                          AffineTransform transform);

/// Kernel set resolved against the windowed streams.
KernelSet resolve_kernels(const WindowedData& data, const KernelSet& overrides,
                          std::size_t cap = kDefaultBandwidthCap);

/// Every Gram matrix for `data` under `kernels`, with ridge lambda * T.
GramCache build_grams(const WindowedData& data, const KernelSet& kernels, double regularizer);

/// Uniform weights 1/T in the shifted basis.
BeliefState feasible_state(const HsePsrModel& model);

}  // namespace hsepsr
