#include <algorithm>
#include <stdexcept>
#include <string>

#include "hsepsr/learner.hpp"
#include "hsepsr/simbench.hpp"

namespace hsepsr {

namespace {

void check_extents(const Trajectory& test, std::span<const Eigen::Index> extents,
                   std::span<const Eigen::Index> horizons) {
  if (horizons.empty()) throw std::invalid_argument("no horizons given");
  const Eigen::Index max_h = *std::max_element(horizons.begin(), horizons.end());
  for (auto t1 : extents) {
    if (t1 < 1 || t1 + max_h > test.length()) {
      throw std::out_of_range("extent " + std::to_string(t1) +
                              " leaves no room for the requested horizons");
    }
  }
}

}  // namespace

std::vector<Eigen::Index> full_horizons(Eigen::Index max_horizon) {
  std::vector<Eigen::Index> h(static_cast<std::size_t>(max_horizon));
  for (Eigen::Index k = 0; k < max_horizon; ++k) h[static_cast<std::size_t>(k)] = k + 1;
  return h;
}

std::vector<Eigen::Index> subsampled_extents(Eigen::Index test_length, Eigen::Index max_horizon,
                                             Eigen::Index first, Eigen::Index stride,
                                             Eigen::Index last) {
  if (stride < 1) throw std::invalid_argument("extent stride must be >= 1");
  std::vector<Eigen::Index> out;
  for (Eigen::Index t1 = first; t1 <= last && t1 + max_horizon <= test_length; t1 += stride) {
    out.push_back(t1);
  }
  return out;
}

MeanBaseline::MeanBaseline(const Trajectory& train) {
  if (train.observations.rows() == 0) throw std::invalid_argument("mean baseline: empty training set");
  mean_ = train.observations.colwise().mean().transpose();
}

std::vector<Eigen::MatrixXd> MeanBaseline::predict(const Trajectory& test,
                                                   std::span<const Eigen::Index> extents,
                                                   std::span<const Eigen::Index> horizons) {
  check_extents(test, extents, horizons);
  const Eigen::MatrixXd row = mean_.transpose().replicate(static_cast<Eigen::Index>(horizons.size()), 1);
  return std::vector<Eigen::MatrixXd>(extents.size(), row);
}

std::vector<Eigen::MatrixXd> PreviousBaseline::predict(const Trajectory& test,
                                                       std::span<const Eigen::Index> extents,
                                                       std::span<const Eigen::Index> horizons) {
  check_extents(test, extents, horizons);
  std::vector<Eigen::MatrixXd> out;
  out.reserve(extents.size());
  for (auto t1 : extents) {
    out.push_back(test.observations.row(t1 - 1).replicate(static_cast<Eigen::Index>(horizons.size()), 1));
  }
  return out;
}

std::vector<Eigen::MatrixXd> PerfectPredictor::predict(const Trajectory& test,
                                                       std::span<const Eigen::Index> extents,
                                                       std::span<const Eigen::Index> horizons) {
  check_extents(test, extents, horizons);
  std::vector<Eigen::MatrixXd> out;
  out.reserve(extents.size());
  for (auto t1 : extents) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(horizons.size()), test.observation_dim());
    for (std::size_t r = 0; r < horizons.size(); ++r) {
      m.row(static_cast<Eigen::Index>(r)) = test.observations.row(t1 + horizons[r] - 1);
    }
    out.push_back(std::move(m));
  }
  return out;
}

HsePsrPredictor::HsePsrPredictor(std::shared_ptr<const HsePsrModel> model, RolloutOptions options)
    : model_(std::move(model)), options_(options) {
  if (!model_) throw std::invalid_argument("null model");
  options_.feedback = nullptr;
}

std::vector<Eigen::MatrixXd> HsePsrPredictor::predict(const Trajectory& test,
                                                      std::span<const Eigen::Index> extents,
                                                      std::span<const Eigen::Index> horizons) {
  check_extents(test, extents, horizons);
  const std::vector<Eigen::Index> hz(horizons.begin(), horizons.end());
  const Eigen::Index max_h = *std::max_element(hz.begin(), hz.end());
  const Eigen::Index window = std::max(max_h, model_->windowed.test_length);
  Eigen::Index last = 0;
  for (auto t1 : extents) last = std::max(last, t1);

  const FilterRun run = filter_trajectory(*model_, feasible_state(*model_),
                                          test.actions.topRows(last),
                                          test.observations.topRows(last), options_.filter);
  resets_ = run.resets;

  std::vector<BeliefState> beliefs;
  std::vector<Eigen::MatrixXd> futures;
  beliefs.reserve(extents.size());
  futures.reserve(extents.size());
  for (auto t1 : extents) {
    beliefs.push_back(run.states[static_cast<std::size_t>(t1 - 1)]);
    // Rollouts need N actions even when every horizon is shorter; pad with
    // the last available action past the end of the trajectory.
    Eigen::MatrixXd future(window, test.action_dim());
    for (Eigen::Index k = 0; k < window; ++k) {
      future.row(k) = test.actions.row(std::min(t1 + k, test.length() - 1));
    }
    futures.push_back(std::move(future));
  }
  return rollout_predict_batch(*model_, beliefs, futures, hz, options_);
}

const std::vector<double>& MseTable::row(const std::string& model) const {
  for (std::size_t k = 0; k < models.size(); ++k) {
    if (models[k] == model) return mse[k];
  }
  throw std::out_of_range("no MSE row for model " + model);
}

MseTable run_protocol(std::span<Predictor* const> predictors, const Trajectory& test,
                      std::span<const Eigen::Index> extents, std::vector<Eigen::Index> horizons) {
  std::sort(horizons.begin(), horizons.end());
  horizons.erase(std::unique(horizons.begin(), horizons.end()), horizons.end());
  if (extents.empty()) throw std::invalid_argument("no extents given");
  check_extents(test, extents, horizons);

  MseTable table;
  table.horizons = horizons;
  table.n_extents = static_cast<Eigen::Index>(extents.size());
  for (Predictor* p : predictors) {
    const auto predictions = p->predict(test, extents, horizons);
    if (predictions.size() != extents.size()) {
      throw std::logic_error(p->name() + " returned the wrong number of extents");
    }
    std::vector<double> sums(horizons.size(), 0.0);
    for (std::size_t e = 0; e < extents.size(); ++e) {
      const Eigen::MatrixXd& pred = predictions[e];
      for (std::size_t r = 0; r < horizons.size(); ++r) {
        const auto target = test.observations.row(extents[e] + horizons[r] - 1);
        sums[r] += (pred.row(static_cast<Eigen::Index>(r)) - target).squaredNorm();
        ++table.prediction_events;
      }
    }
    for (auto& s : sums) s /= static_cast<double>(extents.size());
    table.models.push_back(p->name());
    table.mse.push_back(std::move(sums));
  }
  return table;
}

}  // namespace hsepsr
