#include "hsepsr/learner.hpp"

#include <chrono>
#include <stdexcept>
#include <tuple>

namespace hsepsr {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void check_family_input(const KernelSpec& spec, bool symbolic) {
  if (spec.family == KernelFamily::delta && !symbolic) {
    // Delta kernels compare exact values; they only make sense on symbols.
    throw std::invalid_argument("delta kernels require a symbolic trajectory");
  }
}

}  // namespace

const ConditioningTensor& HsePsrModel::shifted_test_action_tensor() const {
  std::call_once(cache_->shifted_once, [this] {
    cache_->shifted = build_conditioning_tensor(TensorRole::shifted_test_action,
                                                shifted_history_weights,
                                                grams.shifted_test_action, grams.ridge);
  });
  return cache_->shifted;
}

const ConditioningTensor& HsePsrModel::action_tensor() const {
  std::call_once(cache_->action_once, [this] {
    cache_->action = build_conditioning_tensor(TensorRole::single_action, history_weights,
                                               grams.action, grams.ridge);
  });
  return cache_->action;
}

void HsePsrModel::install_tensors(ConditioningTensor shifted, ConditioningTensor action) {
  std::call_once(cache_->shifted_once, [&] { cache_->shifted = std::move(shifted); });
  std::call_once(cache_->action_once, [&] { cache_->action = std::move(action); });
}

void HsePsrModel::reset_tensor_cache() { cache_ = std::make_shared<TensorCache>(); }

KernelSet resolve_kernels(const WindowedData& data, const KernelSet& overrides, std::size_t cap) {
  KernelSet out;
  out.history = resolve_kernel(overrides.history, data.histories, cap);
  out.test_action = resolve_kernel(overrides.test_action, data.test_actions, cap);
  out.test_observation = resolve_kernel(overrides.test_observation, data.test_observations, cap);
  out.action = resolve_kernel(overrides.action, data.actions, cap);
  out.observation = resolve_kernel(overrides.observation, data.observations, cap);
  return out;
}

GramCache build_grams(const WindowedData& data, const KernelSet& kernels, double regularizer) {
  if (!(regularizer > 0.0)) throw std::invalid_argument("regularizer must be positive");
  GramCache g;
  g.history = gram(kernels.history, data.histories, data.histories);
  g.shifted_history = gram(kernels.history, data.shifted_histories, data.shifted_histories);
  g.test_action = gram(kernels.test_action, data.test_actions, data.test_actions);
  g.shifted_test_action =
      gram(kernels.test_action, data.shifted_test_actions, data.shifted_test_actions);
  g.test_observation = gram(kernels.test_observation, data.test_observations, data.test_observations);
  g.action = gram(kernels.action, data.actions, data.actions);
  g.observation = gram(kernels.observation, data.observations, data.observations);
  g.test_observation_cross =
      gram(kernels.test_observation, data.test_observations, data.shifted_test_observations);
  g.test_action_cross = gram(kernels.test_action, data.test_actions, data.shifted_test_actions);
  g.ridge = regularizer * static_cast<double>(data.size());
  return g;
}

HsePsrModel train_windows(const WindowedData& data, const TrainingOptions& options,
                          AffineTransform transform) {
  const auto start = std::chrono::steady_clock::now();
  const Eigen::Index T = data.size();
  if (T < 1) throw std::invalid_argument("no training samples");
  if (T > options.max_samples) {
    throw std::invalid_argument("training sample count " + std::to_string(T) +
                                " exceeds the configured maximum " +
                                std::to_string(options.max_samples));
  }
  if (!(options.regularizer > 0.0)) throw std::invalid_argument("regularizer must be positive");

  HsePsrModel model;
  model.windowed = data;
  model.regularizer = options.regularizer;
  model.transform = std::move(transform);
  model.report.samples = T;

  model.kernels = resolve_kernels(data, options.kernels, options.bandwidth_cap);
  model.grams = build_grams(data, model.kernels, options.regularizer);
  const double ridge = model.grams.ridge;
  model.history_weights = history_weights(model.grams.history, ridge);
  model.shifted_history_weights = history_weights(model.grams.shifted_history, ridge);
  model.timings.grams = seconds_since(start);

  auto t0 = std::chrono::steady_clock::now();
  auto& jitter = model.report.jitter;
  ConditioningTensor shifted = build_conditioning_tensor(
      TensorRole::shifted_test_action, model.shifted_history_weights,
      model.grams.shifted_test_action, ridge, &jitter);
  {
    // The unshifted tensor is only needed for the two state Grams; dropping it
    // before the action tensor is built keeps at most two tensors alive.
    const ConditioningTensor unshifted = build_conditioning_tensor(
        TensorRole::test_action, model.history_weights, model.grams.test_action, ridge, &jitter);
    model.timings.tensors = seconds_since(t0);

    const auto t1 = std::chrono::steady_clock::now();
    Eigen::MatrixXd gtt = state_gram(unshifted, unshifted, model.grams.test_observation,
                                     model.grams.test_action);
    model.state_gram = 0.5 * (gtt + gtt.transpose());
    model.state_gram_shifted = state_gram(unshifted, shifted, model.grams.test_observation_cross,
                                          model.grams.test_action_cross);
    model.timings.state_grams = seconds_since(t1);
  }
  t0 = std::chrono::steady_clock::now();
  ConditioningTensor action = build_conditioning_tensor(
      TensorRole::single_action, model.history_weights, model.grams.action, ridge, &jitter);
  model.timings.tensors += seconds_since(t0);

  auto prop = ridge_solve(model.state_gram, ridge, model.state_gram_shifted);
  if (prop.escalations > 0) jitter.push_back({"propagation", -1, prop.escalations, prop.ridge});
  model.propagation = std::move(prop.solution);
  model.feasible = Eigen::VectorXd::Constant(T, 1.0 / static_cast<double>(T));
  model.install_tensors(std::move(shifted), std::move(action));
  model.timings.total = seconds_since(start);
  return model;
}

HsePsrModel train(const Trajectory& trajectory, const TrainingOptions& options) {
  trajectory.validate();
  for (const auto* spec : {&options.kernels.history, &options.kernels.test_action,
                           &options.kernels.test_observation, &options.kernels.action,
                           &options.kernels.observation}) {
    check_family_input(*spec, trajectory.symbolic);
  }
  AffineTransform transform =
      AffineTransform::identity(trajectory.action_dim(), trajectory.observation_dim());
  Trajectory encoded = trajectory;
  if (options.standardize && !trajectory.symbolic) {
    std::tie(encoded, transform) = standardize(trajectory);
  }
  const WindowedData data = build_windows(encoded, options.windows);
  return train_windows(data, options, std::move(transform));
}

BeliefState feasible_state(const HsePsrModel& model) { return BeliefState{model.feasible}; }

}  // namespace hsepsr
