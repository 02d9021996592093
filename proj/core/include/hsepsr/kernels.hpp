#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace hsepsr {

enum class KernelFamily { rbf, linear, delta };

std::string_view to_string(KernelFamily family);
KernelFamily kernel_family_from_string(std::string_view name);

/// A kernel on fixed-length real vectors. Windows are stacked into a single
/// vector before evaluation, so one spec covers both single steps and windows.
///
/// `bandwidth` is only meaningful for rbf. An empty bandwidth means "resolve
/// with the median trick" and must be filled in (see `resolve_kernel`) before
/// the spec can be evaluated.
struct KernelSpec {
  KernelFamily family = KernelFamily::rbf;
  std::optional<double> bandwidth;
  Eigen::Index dimension = 1;

  [[nodiscard]] bool resolved() const;
  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

/// One kernel per stream role. Shifted test windows reuse the test kernels.
struct KernelSet {
  KernelSpec history;
  KernelSpec test_action;
  KernelSpec test_observation;
  KernelSpec action;
  KernelSpec observation;

  [[nodiscard]] bool resolved() const;
  friend bool operator==(const KernelSet&, const KernelSet&) = default;
};

inline constexpr std::size_t kDefaultBandwidthCap = 1000;
inline constexpr double kZeroMedianBandwidth = 1.0;

/// Median of all pairwise Euclidean distances between the rows of `points`.
/// More than `cap` rows are subsampled deterministically by stride. A zero
/// median falls back to 1.0.
double resolve_bandwidth(const Eigen::MatrixXd& points,
                         std::size_t cap = kDefaultBandwidthCap);

/// Returns `spec` with its dimension set from `points` and, for rbf without a
/// bandwidth, the median-trick bandwidth filled in.
KernelSpec resolve_kernel(KernelSpec spec, const Eigen::MatrixXd& points,
                          std::size_t cap = kDefaultBandwidthCap);

double kernel_eval(const KernelSpec& spec,
                   const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& y);

/// Entry (i, j) is K(X.row(i), Y.row(j)).
Eigen::MatrixXd gram(const KernelSpec& spec, const Eigen::MatrixXd& X,
                     const Eigen::MatrixXd& Y);

/// k[s] = K(X.row(s), y): the embedding of one query point against a sample
/// list, i.e. the adjoint feature operator applied to phi(y).
Eigen::VectorXd kernel_column(const KernelSpec& spec, const Eigen::MatrixXd& X,
                              const Eigen::Ref<const Eigen::VectorXd>& y);

}  // namespace hsepsr
