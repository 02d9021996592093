#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "hsepsr/simbench.hpp"

namespace hsepsr {

void SynthConfig::validate() const {
  if (n_steps < 1) throw std::invalid_argument("n_steps must be >= 1");
  if (substeps < 1) throw std::invalid_argument("substeps must be >= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!(action_low <= action_high)) throw std::invalid_argument("empty action range");
}

Eigen::Vector2d synth_derivative(const Eigen::Vector2d& x, double u) {
  const double x1 = x[0];
  const double x2 = x[1];
  const double c = std::cos(x1);
  const double x1_3 = x1 * x1 * x1;
  const double x1_5 = x1_3 * x1 * x1;
  return {x2 - 0.1 * c * (5.0 * x1 - 4.0 * x1_3 + x1_5) - 0.5 * c * u,
          -65.0 * x1 + 50.0 * x1_3 - 15.0 * x1_5 - x2 - 100.0 * u};
}

Eigen::VectorXd draw_policy(const SynthConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> dist(config.action_low, config.action_high);
  Eigen::VectorXd u(config.n_steps);
  for (Eigen::Index k = 0; k < config.n_steps; ++k) u[k] = dist(rng);
  return u;
}

Trajectory integrate_system(const SynthConfig& config, const Eigen::VectorXd& inputs,
                            Eigen::Vector2d* final_state) {
  config.validate();
  if (inputs.size() != config.n_steps) {
    throw std::invalid_argument("need one held input per sample");
  }
  const double h = config.dt / config.substeps;
  Eigen::Vector2d x = config.initial_state;
  Trajectory traj;
  traj.actions = inputs;
  traj.observations.resize(config.n_steps, 1);
  for (Eigen::Index k = 0; k < config.n_steps; ++k) {
    const double u = inputs[k];
    for (int s = 0; s < config.substeps; ++s) {
      const Eigen::Vector2d k1 = synth_derivative(x, u);
      const Eigen::Vector2d k2 = synth_derivative(x + 0.5 * h * k1, u);
      const Eigen::Vector2d k3 = synth_derivative(x + 0.5 * h * k2, u);
      const Eigen::Vector2d k4 = synth_derivative(x + h * k3, u);
      x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!x.allFinite()) {
      throw std::runtime_error("simulation diverged at step " + std::to_string(k));
    }
    traj.observations(k, 0) = x[0];
  }
  if (final_state) *final_state = x;
  return traj;
}

Trajectory simulate_system(const SynthConfig& config) {
  return integrate_system(config, draw_policy(config));
}

}  // namespace hsepsr
