#include "hsepsr/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace hsepsr {

namespace {

void check_dimension(const KernelSpec& spec, Eigen::Index a, Eigen::Index b) {
  if (a != spec.dimension || b != spec.dimension) {
    throw std::invalid_argument("kernel input dimension mismatch: expected " +
                                std::to_string(spec.dimension) + ", got " +
                                std::to_string(a) + " and " + std::to_string(b));
  }
}

double sq_distance(const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& y) {
  double acc = 0.0;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double d = x[k] - y[k];
    acc += d * d;
  }
  return acc;
}

// Same per-entry arithmetic as kernel_eval, without the dimension checks.
template <typename RowX, typename RowY>
double eval_unchecked(const KernelSpec& spec, double inv_two_sigma_sq,
                      const RowX& x, const RowY& y) {
  switch (spec.family) {
    case KernelFamily::rbf: {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < x.size(); ++k) {
        const double d = x[k] - y[k];
        acc += d * d;
      }
      return std::exp(-acc * inv_two_sigma_sq);
    }
    case KernelFamily::linear: {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < x.size(); ++k) acc += x[k] * y[k];
      return acc;
    }
    case KernelFamily::delta: {
      for (Eigen::Index k = 0; k < x.size(); ++k) {
        if (x[k] != y[k]) return 0.0;
      }
      return 1.0;
    }
  }
  return 0.0;
}

double inverse_two_sigma_sq(const KernelSpec& spec) {
  if (spec.family != KernelFamily::rbf) return 0.0;
  if (!spec.bandwidth) {
    throw std::logic_error("rbf kernel evaluated before bandwidth resolution");
  }
  const double sigma = *spec.bandwidth;
  return 1.0 / (2.0 * sigma * sigma);
}

}  // namespace

std::string_view to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::rbf: return "rbf";
    case KernelFamily::linear: return "linear";
    case KernelFamily::delta: return "delta";
  }
  return "unknown";
}

KernelFamily kernel_family_from_string(std::string_view name) {
  if (name == "rbf") return KernelFamily::rbf;
  if (name == "linear") return KernelFamily::linear;
  if (name == "delta") return KernelFamily::delta;
  throw std::invalid_argument("unknown kernel family: " + std::string(name));
}

bool KernelSpec::resolved() const {
  if (dimension < 1) return false;
  if (family != KernelFamily::rbf) return true;
  return bandwidth.has_value() && *bandwidth > 0.0;
}

bool KernelSet::resolved() const {
  return history.resolved() && test_action.resolved() && test_observation.resolved() &&
         action.resolved() && observation.resolved();
}

double resolve_bandwidth(const Eigen::MatrixXd& points, std::size_t cap) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (n < 2) throw std::invalid_argument("insufficient points for bandwidth");
  if (cap < 2) throw std::invalid_argument("bandwidth subsampling cap must be >= 2");

  std::vector<Eigen::Index> rows;
  if (n <= cap) {
    rows.resize(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = static_cast<Eigen::Index>(i);
  } else {
    rows.resize(cap);
    for (std::size_t k = 0; k < cap; ++k) {
      rows[k] = static_cast<Eigen::Index>((k * n) / cap);
    }
  }

  std::vector<double> distances;
  distances.reserve(rows.size() * (rows.size() - 1) / 2);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = i + 1; j < rows.size(); ++j) {
      distances.push_back(
          std::sqrt(sq_distance(points.row(rows[i]).transpose(), points.row(rows[j]).transpose())));
    }
  }

  const std::size_t m = distances.size();
  const auto mid = distances.begin() + static_cast<std::ptrdiff_t>(m / 2);
  std::nth_element(distances.begin(), mid, distances.end());
  double median = *mid;
  if (m % 2 == 0) {
    const double lower = *std::max_element(distances.begin(), mid);
    median = 0.5 * (lower + median);
  }
  if (!(median > 0.0) || !std::isfinite(median)) return kZeroMedianBandwidth;
  return median;
}

KernelSpec resolve_kernel(KernelSpec spec, const Eigen::MatrixXd& points, std::size_t cap) {
  spec.dimension = points.cols();
  if (spec.family == KernelFamily::rbf) {
    if (spec.bandwidth) {
      if (!(*spec.bandwidth > 0.0)) throw std::invalid_argument("rbf bandwidth must be positive");
    } else {
      spec.bandwidth = resolve_bandwidth(points, cap);
    }
  } else {
    spec.bandwidth.reset();
  }
  return spec;
}

double kernel_eval(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& y) {
  check_dimension(spec, x.size(), y.size());
  return eval_unchecked(spec, inverse_two_sigma_sq(spec), x, y);
}

Eigen::MatrixXd gram(const KernelSpec& spec, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
  if (X.rows() == 0 || Y.rows() == 0) throw std::invalid_argument("gram of an empty sample list");
  check_dimension(spec, X.cols(), Y.cols());
  const double scale = inverse_two_sigma_sq(spec);

  // Row-major copies keep each sample contiguous for the inner loops.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> xr = X;
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> yr = Y;
  Eigen::MatrixXd G(X.rows(), Y.rows());
  for (Eigen::Index j = 0; j < Y.rows(); ++j) {
    const auto yj = yr.row(j);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      G(i, j) = eval_unchecked(spec, scale, xr.row(i), yj);
    }
  }
  return G;
}

Eigen::VectorXd kernel_column(const KernelSpec& spec, const Eigen::MatrixXd& X,
                              const Eigen::Ref<const Eigen::VectorXd>& y) {
  check_dimension(spec, X.cols(), y.size());
  const double scale = inverse_two_sigma_sq(spec);
  Eigen::VectorXd k(X.rows());
  for (Eigen::Index s = 0; s < X.rows(); ++s) {
    k[s] = eval_unchecked(spec, scale, X.row(s), y);
  }
  return k;
}

}  // namespace hsepsr
