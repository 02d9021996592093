#include "hsepsr/predict.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

#include "hsepsr/kernels.hpp"
#include "hsepsr/learner.hpp"

namespace hsepsr {

namespace {

void check_belief(const HsePsrModel& model, const BeliefState& belief) {
  if (belief.size() != model.samples()) {
    throw std::invalid_argument("belief weight vector does not match the model sample count");
  }
}

Eigen::Index test_length(const HsePsrModel& model) { return model.windowed.test_length; }

// Expected observation at 1-based window offset j under weights over the
// shifted test-observation windows, in model coordinates.
Eigen::VectorXd window_observation(const HsePsrModel& model, const Eigen::VectorXd& weights,
                                   Eigen::Index j) {
  const Eigen::Index d = model.windowed.observation_dim;
  return model.windowed.shifted_test_observations.middleCols((j - 1) * d, d).transpose() * weights;
}

// Observation fed back during a rollout. Under a delta kernel the mean is
// not a symbol, so the gamma-weighted mode of the training symbols is used.
Eigen::VectorXd feedback_observation(const HsePsrModel& model, const Eigen::VectorXd& gamma) {
  if (model.kernels.observation.family != KernelFamily::delta) {
    return window_observation(model, gamma, 1);
  }
  const Eigen::Index d = model.windowed.observation_dim;
  const Eigen::MatrixXd first = model.windowed.shifted_test_observations.leftCols(d);
  Eigen::Index best = 0;
  double best_mass = -std::numeric_limits<double>::infinity();
  for (Eigen::Index s = 0; s < first.rows(); ++s) {
    double mass = 0.0;
    for (Eigen::Index r = 0; r < first.rows(); ++r) {
      if (first.row(r) == first.row(s)) mass += gamma[r];
    }
    if (mass > best_mass) {
      best_mass = mass;
      best = s;
    }
  }
  return first.row(best).transpose();
}

// Test-action kernel column against the shifted windows, for encoded actions
// rows [begin, begin + N).
Eigen::VectorXd shifted_window_kernel(const HsePsrModel& model, const Eigen::MatrixXd& encoded,
                                      Eigen::Index begin) {
  const Eigen::VectorXd window = flatten_window(encoded, begin, test_length(model));
  return kernel_column(model.kernels.test_action, model.windowed.shifted_test_actions, window);
}

struct Session {
  Eigen::MatrixXd actions;   // encoded
  Eigen::MatrixXd feedback;  // encoded, empty when predictions are fed back
};

// All sessions advance in lockstep; column b of `states` belongs to sessions[b].
std::vector<Eigen::MatrixXd> rollout_encoded(const HsePsrModel& model, Eigen::MatrixXd states,
                                             const std::vector<Session>& sessions,
                                             const std::vector<Eigen::Index>& horizons,
                                             const RolloutOptions& options) {
  const Eigen::Index T = model.samples();
  const Eigen::Index N = test_length(model);
  const Eigen::Index B = states.cols();
  const Eigen::Index d_a = model.windowed.action_dim;
  const Eigen::Index d_o = model.windowed.observation_dim;
  const Eigen::Index max_h = *std::max_element(horizons.begin(), horizons.end());
  const Eigen::Index steps = std::max<Eigen::Index>(0, max_h - N);
  const bool conditioned = options.mode == PredictionMode::conditioned;

  std::vector<Eigen::MatrixXd> out(static_cast<std::size_t>(B),
                                   Eigen::MatrixXd(static_cast<Eigen::Index>(horizons.size()), d_o));

  Eigen::MatrixXd next_actions(B, d_a);
  Eigen::MatrixXd next_observations(B, d_o);
  for (Eigen::Index k = 0; k <= steps; ++k) {
    // Which horizons are read at this step: offsets 1..N straight from the
    // initial state, afterwards only offset N (horizon k + N).
    std::vector<std::pair<std::size_t, Eigen::Index>> reads;  // (row, offset)
    for (std::size_t r = 0; r < horizons.size(); ++r) {
      const Eigen::Index h = horizons[r];
      if (k == 0 && h <= N) reads.emplace_back(r, h);
      if (k > 0 && h == k + N) reads.emplace_back(r, N);
    }
    const bool feed = k < steps;
    if (reads.empty() && !feed) continue;

    Eigen::MatrixXd contracted;
    if (conditioned) contracted = model.shifted_test_action_tensor().contract(states);

    for (Eigen::Index b = 0; b < B; ++b) {
      const Session& s = sessions[static_cast<std::size_t>(b)];
      Eigen::VectorXd gamma;
      if (conditioned) {
        gamma = Eigen::Map<const Eigen::MatrixXd>(contracted.col(b).data(), T, T) *
                shifted_window_kernel(model, s.actions, k);
      } else {
        gamma = states.col(b);
      }
      for (const auto& [row, offset] : reads) {
        out[static_cast<std::size_t>(b)].row(static_cast<Eigen::Index>(row)) =
            window_observation(model, gamma, offset).transpose();
      }
      if (feed) {
        next_actions.row(b) = s.actions.row(k);
        if (s.feedback.rows() > 0) {
          next_observations.row(b) = s.feedback.row(k);
        } else {
          next_observations.row(b) = feedback_observation(model, gamma).transpose();
        }
      }
    }
    if (feed) {
      states = detail::update_batch(model, states, next_actions, next_observations,
                                    options.filter, nullptr);
    }
  }
  return out;
}

void check_rollout_inputs(const HsePsrModel& model, const Eigen::MatrixXd& future_actions,
                          const std::vector<Eigen::Index>& horizons, const RolloutOptions& options) {
  if (horizons.empty()) throw std::invalid_argument("no prediction horizons requested");
  for (auto h : horizons) {
    if (h < 1) throw std::invalid_argument("prediction horizons are 1-based");
  }
  const Eigen::Index max_h = *std::max_element(horizons.begin(), horizons.end());
  const Eigen::Index needed = std::max(max_h, test_length(model));
  if (future_actions.rows() < needed) {
    throw std::invalid_argument("rollout needs " + std::to_string(needed) + " future actions, got " +
                                std::to_string(future_actions.rows()));
  }
  if (future_actions.cols() != model.windowed.action_dim) {
    throw std::invalid_argument("future action dimension mismatch");
  }
  if (options.feedback) {
    const Eigen::Index steps = std::max<Eigen::Index>(0, max_h - test_length(model));
    if (options.feedback->rows() < steps ||
        options.feedback->cols() != model.windowed.observation_dim) {
      throw std::invalid_argument("feedback observations do not cover the rollout");
    }
  }
}

Eigen::MatrixXd decode_rows(const HsePsrModel& model, const Eigen::MatrixXd& encoded) {
  Eigen::MatrixXd out(encoded.rows(), encoded.cols());
  for (Eigen::Index r = 0; r < encoded.rows(); ++r) {
    out.row(r) = model.transform.decode_observation(encoded.row(r).transpose()).transpose();
  }
  return out;
}

}  // namespace

Eigen::VectorXd condition_test_actions(const HsePsrModel& model, const BeliefState& belief,
                                       const Eigen::MatrixXd& action_window) {
  check_belief(model, belief);
  if (action_window.rows() != test_length(model) ||
      action_window.cols() != model.windowed.action_dim) {
    throw std::invalid_argument("action window must have exactly N rows of action dimension");
  }
  const Eigen::MatrixXd encoded = model.transform.encode_actions(action_window);
  return model.shifted_test_action_tensor().contract_apply(belief.weights,
                                                           shifted_window_kernel(model, encoded, 0));
}

double expect_function(const Eigen::VectorXd& gamma, const Eigen::VectorXd& f_values) {
  if (gamma.size() != f_values.size()) throw std::invalid_argument("f_values length mismatch");
  return f_values.dot(gamma);
}

Eigen::VectorXd predict_observation_at(const HsePsrModel& model, const BeliefState& belief,
                                       const Eigen::MatrixXd& future_actions, Eigen::Index j,
                                       PredictionMode mode) {
  check_belief(model, belief);
  const Eigen::Index N = test_length(model);
  if (j < 1 || j > N) throw std::out_of_range("horizon j must lie in [1, N]");
  Eigen::VectorXd weights;
  if (mode == PredictionMode::conditioned) {
    if (future_actions.rows() < N) throw std::invalid_argument("need at least N future actions");
    weights = condition_test_actions(model, belief, future_actions.topRows(N));
  } else {
    weights = belief.weights;
  }
  return model.transform.decode_observation(window_observation(model, weights, j));
}

Eigen::MatrixXd rollout_predict(const HsePsrModel& model, const BeliefState& belief,
                                const Eigen::MatrixXd& future_actions,
                                const std::vector<Eigen::Index>& horizons,
                                const RolloutOptions& options) {
  auto out = rollout_predict_batch(model, {belief}, {future_actions}, horizons, options);
  return std::move(out.front());
}

std::vector<Eigen::MatrixXd> rollout_predict_batch(
    const HsePsrModel& model, const std::vector<BeliefState>& beliefs,
    const std::vector<Eigen::MatrixXd>& future_actions, const std::vector<Eigen::Index>& horizons,
    const RolloutOptions& options) {
  if (beliefs.size() != future_actions.size()) {
    throw std::invalid_argument("one future action sequence per belief is required");
  }
  const auto B = static_cast<Eigen::Index>(beliefs.size());
  std::vector<Eigen::MatrixXd> out;
  out.reserve(beliefs.size());
  if (B == 0) return out;

  // Contracted C' slices take 8 T^2 bytes per session; cap the batch width.
  constexpr Eigen::Index kChunk = 32;
  for (Eigen::Index b0 = 0; b0 < B; b0 += kChunk) {
    const Eigen::Index width = std::min(kChunk, B - b0);
    Eigen::MatrixXd states(model.samples(), width);
    std::vector<Session> sessions(static_cast<std::size_t>(width));
    for (Eigen::Index k = 0; k < width; ++k) {
      const auto idx = static_cast<std::size_t>(b0 + k);
      check_belief(model, beliefs[idx]);
      check_rollout_inputs(model, future_actions[idx], horizons, options);
      states.col(k) = beliefs[idx].weights;
      auto& s = sessions[static_cast<std::size_t>(k)];
      s.actions = model.transform.encode_actions(future_actions[idx]);
      if (options.feedback) s.feedback = model.transform.encode_observations(*options.feedback);
    }
    for (auto& m : rollout_encoded(model, std::move(states), sessions, horizons, options)) {
      out.push_back(decode_rows(model, m));
    }
  }
  return out;
}

}  // namespace hsepsr
