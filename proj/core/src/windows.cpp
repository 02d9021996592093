#include "hsepsr/windows.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace hsepsr {

void Trajectory::validate() const {
  if (actions.rows() != observations.rows()) {
    throw std::invalid_argument("trajectory action/observation lengths differ");
  }
  if (actions.rows() < 1) throw std::invalid_argument("trajectory is empty");
  if (actions.cols() < 1 || observations.cols() < 1) {
    throw std::invalid_argument("trajectory streams need at least one coordinate");
  }
}

Trajectory Trajectory::slice(Eigen::Index begin, Eigen::Index count) const {
  if (begin < 0 || count < 0 || begin + count > length()) {
    throw std::out_of_range("trajectory slice out of range");
  }
  return Trajectory{actions.middleRows(begin, count), observations.middleRows(begin, count),
                    symbolic};
}

Eigen::VectorXd flatten_window(const Eigen::MatrixXd& stream, Eigen::Index begin,
                               Eigen::Index length) {
  const Eigen::Index d = stream.cols();
  Eigen::VectorXd out(length * d);
  for (Eigen::Index k = 0; k < length; ++k) {
    out.segment(k * d, d) = stream.row(begin + k).transpose();
  }
  return out;
}

WindowedData build_windows(const Trajectory& trajectory, const WindowConfig& config) {
  trajectory.validate();
  const Eigen::Index L = config.history_length;
  const Eigen::Index N = config.test_length;
  if (L < 1 || N < 1) throw std::invalid_argument("window lengths must be >= 1");
  const Eigen::Index n = trajectory.length();
  if (n < L + N + 1) throw std::invalid_argument("trajectory too short");

  const Eigen::Index T = n - L - N;
  const Eigen::Index da = trajectory.action_dim();
  const Eigen::Index dobs = trajectory.observation_dim();
  const auto& A = trajectory.actions;
  const auto& O = trajectory.observations;

  WindowedData w;
  w.history_length = L;
  w.test_length = N;
  w.action_dim = da;
  w.observation_dim = dobs;
  w.histories.resize(T, L * (da + dobs));
  w.shifted_histories.resize(T, L * (da + dobs));
  w.test_actions.resize(T, N * da);
  w.test_observations.resize(T, N * dobs);
  w.shifted_test_actions.resize(T, N * da);
  w.shifted_test_observations.resize(T, N * dobs);
  w.actions.resize(T, da);
  w.observations.resize(T, dobs);

  for (Eigen::Index t = 0; t < T; ++t) {
    // 0-based row t is 1-based sample t + 1, anchored at 1-based time L + t + 1,
    // i.e. 0-based time L + t.
    const Eigen::Index anchor = L + t;
    for (Eigen::Index k = 0; k < L; ++k) {
      const Eigen::Index time = anchor - L + k;
      const Eigen::Index off = k * (da + dobs);
      w.histories.block(t, off, 1, da) = A.row(time);
      w.histories.block(t, off + da, 1, dobs) = O.row(time);
      w.shifted_histories.block(t, off, 1, da) = A.row(time + 1);
      w.shifted_histories.block(t, off + da, 1, dobs) = O.row(time + 1);
    }
    w.test_actions.row(t) = flatten_window(A, anchor, N).transpose();
    w.test_observations.row(t) = flatten_window(O, anchor, N).transpose();
    w.shifted_test_actions.row(t) = flatten_window(A, anchor + 1, N).transpose();
    w.shifted_test_observations.row(t) = flatten_window(O, anchor + 1, N).transpose();
    w.actions.row(t) = A.row(anchor);
    w.observations.row(t) = O.row(anchor);
  }
  return w;
}

WindowedData permute_samples(const WindowedData& data, std::span<const Eigen::Index> order) {
  const Eigen::Index T = data.size();
  if (static_cast<Eigen::Index>(order.size()) != T) {
    throw std::invalid_argument("permutation length does not match sample count");
  }
  std::vector<bool> seen(static_cast<std::size_t>(T), false);
  for (auto k : order) {
    if (k < 0 || k >= T || seen[static_cast<std::size_t>(k)]) {
      throw std::invalid_argument("not a permutation");
    }
    seen[static_cast<std::size_t>(k)] = true;
  }
  auto reorder = [&](const Eigen::MatrixXd& m) {
    Eigen::MatrixXd out(m.rows(), m.cols());
    for (Eigen::Index k = 0; k < T; ++k) out.row(k) = m.row(order[static_cast<std::size_t>(k)]);
    return out;
  };
  WindowedData out = data;
  out.histories = reorder(data.histories);
  out.shifted_histories = reorder(data.shifted_histories);
  out.test_actions = reorder(data.test_actions);
  out.test_observations = reorder(data.test_observations);
  out.shifted_test_actions = reorder(data.shifted_test_actions);
  out.shifted_test_observations = reorder(data.shifted_test_observations);
  out.actions = reorder(data.actions);
  out.observations = reorder(data.observations);
  return out;
}

AffineTransform AffineTransform::identity(Eigen::Index action_dim, Eigen::Index observation_dim) {
  return AffineTransform{Eigen::VectorXd::Zero(action_dim), Eigen::VectorXd::Ones(action_dim),
                         Eigen::VectorXd::Zero(observation_dim),
                         Eigen::VectorXd::Ones(observation_dim)};
}

namespace {

Eigen::MatrixXd encode_rows(const Eigen::MatrixXd& m, const Eigen::VectorXd& mean,
                            const Eigen::VectorXd& scale) {
  if (m.cols() != mean.size()) throw std::invalid_argument("transform dimension mismatch");
  return (m.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

Eigen::MatrixXd decode_rows(const Eigen::MatrixXd& m, const Eigen::VectorXd& mean,
                            const Eigen::VectorXd& scale) {
  if (m.cols() != mean.size()) throw std::invalid_argument("transform dimension mismatch");
  Eigen::MatrixXd out = m.array().rowwise() * scale.transpose().array();
  out.rowwise() += mean.transpose();
  return out;
}

void column_stats(const Eigen::MatrixXd& m, Eigen::VectorXd& mean, Eigen::VectorXd& scale) {
  const double n = static_cast<double>(m.rows());
  mean = m.colwise().mean().transpose();
  scale.resize(m.cols());
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const double var = (m.col(c).array() - mean[c]).square().sum() / n;
    scale[c] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
}

}  // namespace

Trajectory AffineTransform::apply(const Trajectory& trajectory) const {
  return Trajectory{encode_rows(trajectory.actions, action_mean, action_scale),
                    encode_rows(trajectory.observations, observation_mean, observation_scale),
                    trajectory.symbolic};
}

Trajectory AffineTransform::invert(const Trajectory& trajectory) const {
  return Trajectory{decode_rows(trajectory.actions, action_mean, action_scale),
                    decode_rows(trajectory.observations, observation_mean, observation_scale),
                    trajectory.symbolic};
}

Eigen::VectorXd AffineTransform::encode_action(const Eigen::Ref<const Eigen::VectorXd>& a) const {
  if (a.size() != action_mean.size()) throw std::invalid_argument("action dimension mismatch");
  return (a - action_mean).cwiseQuotient(action_scale);
}

Eigen::VectorXd AffineTransform::encode_observation(
    const Eigen::Ref<const Eigen::VectorXd>& o) const {
  if (o.size() != observation_mean.size()) {
    throw std::invalid_argument("observation dimension mismatch");
  }
  return (o - observation_mean).cwiseQuotient(observation_scale);
}

Eigen::VectorXd AffineTransform::decode_observation(
    const Eigen::Ref<const Eigen::VectorXd>& o) const {
  if (o.size() != observation_mean.size()) {
    throw std::invalid_argument("observation dimension mismatch");
  }
  return o.cwiseProduct(observation_scale) + observation_mean;
}

Eigen::MatrixXd AffineTransform::encode_actions(const Eigen::MatrixXd& actions) const {
  return encode_rows(actions, action_mean, action_scale);
}

Eigen::MatrixXd AffineTransform::encode_observations(const Eigen::MatrixXd& observations) const {
  return encode_rows(observations, observation_mean, observation_scale);
}

std::pair<Trajectory, AffineTransform> standardize(const Trajectory& trajectory) {
  trajectory.validate();
  if (trajectory.length() < 2) throw std::invalid_argument("standardize needs at least 2 steps");
  AffineTransform tf;
  column_stats(trajectory.actions, tf.action_mean, tf.action_scale);
  column_stats(trajectory.observations, tf.observation_mean, tf.observation_scale);
  return {tf.apply(trajectory), tf};
}

}  // namespace hsepsr
