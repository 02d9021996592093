#include "hsepsr/oracle.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "hsepsr/predict.hpp"

namespace hsepsr {

namespace {

void check_stochastic(const Eigen::MatrixXd& m, const char* what) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if ((m.row(r).array() < 0.0).any() || std::abs(m.row(r).sum() - 1.0) > 1e-12) {
      throw std::invalid_argument(std::string(what) + " rows must be probability vectors");
    }
  }
}

Eigen::Index ipow(Eigen::Index base, Eigen::Index exp) {
  Eigen::Index out = 1;
  for (Eigen::Index k = 0; k < exp; ++k) out *= base;
  return out;
}

int symbol_at(double value, int count) {
  const long s = std::lround(value);
  if (s < 0 || s >= count || std::abs(value - static_cast<double>(s)) > 1e-9) {
    throw std::invalid_argument("value is not a symbol index in range");
  }
  return static_cast<int>(s);
}

// Mixed-radix code of a flattened window of symbols.
Eigen::Index window_code(const Eigen::Ref<const Eigen::RowVectorXd>& window, int radix) {
  Eigen::Index code = 0;
  Eigen::Index place = 1;
  for (Eigen::Index k = 0; k < window.size(); ++k) {
    code += symbol_at(window[k], radix) * place;
    place *= radix;
  }
  return code;
}

Eigen::MatrixXd one_hot_columns(const std::vector<Eigen::Index>& codes, Eigen::Index dim) {
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(dim, static_cast<Eigen::Index>(codes.size()));
  for (std::size_t t = 0; t < codes.size(); ++t) phi(codes[t], static_cast<Eigen::Index>(t)) = 1.0;
  return phi;
}

// (M + ridge I)^{-1} B with the usual residual check and tenfold escalation.
Eigen::MatrixXd jitter_solve(const Eigen::MatrixXd& M, double ridge, const Eigen::MatrixXd& B) {
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(M.rows(), M.cols());
  for (int attempt = 0; attempt <= 3; ++attempt) {
    const Eigen::MatrixXd R = M + ridge * I;
    Eigen::MatrixXd X = R.partialPivLu().solve(B);
    if (X.allFinite() && (R * X - B).norm() <= 1e-8 * std::max(B.norm(), 1e-300)) return X;
    ridge *= 10.0;
  }
  throw std::runtime_error("explicit oracle: ill-conditioned solve");
}

// Phi diag(w) Psi^T for one-hot column matrices.
Eigen::MatrixXd weighted_cross(const Eigen::MatrixXd& phi, const Eigen::VectorXd& w,
                               const Eigen::MatrixXd& psi) {
  return phi * w.asDiagonal() * psi.transpose();
}

}  // namespace

void DiscreteOracleSystem::validate() const {
  if (transitions.empty()) throw std::invalid_argument("oracle system needs at least one action");
  for (const auto& t : transitions) {
    if (t.rows() != states() || t.cols() != states()) {
      throw std::invalid_argument("transition tables must be S x S");
    }
    check_stochastic(t, "transition");
  }
  check_stochastic(emission, "emission");
}

DiscreteOracleSystem DiscreteOracleSystem::default_system() {
  DiscreteOracleSystem sys;
  Eigen::MatrixXd t0(3, 3), t1(3, 3), o(3, 3);
  t0 << 0.7, 0.2, 0.1,
        0.1, 0.7, 0.2,
        0.2, 0.1, 0.7;
  t1 << 0.1, 0.2, 0.7,
        0.7, 0.1, 0.2,
        0.2, 0.7, 0.1;
  o << 0.8, 0.1, 0.1,
       0.1, 0.8, 0.1,
       0.1, 0.1, 0.8;
  sys.transitions = {t0, t1};
  sys.emission = o;
  return sys;
}

DiscreteOracleSystem DiscreteOracleSystem::deterministic_cycle() {
  DiscreteOracleSystem sys;
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(3, 3);
  p(0, 1) = p(1, 2) = p(2, 0) = 1.0;
  sys.transitions = {p};
  sys.emission = Eigen::MatrixXd::Identity(3, 3);
  return sys;
}

Eigen::VectorXd DiscreteOracleSystem::stationary() const {
  validate();
  const int S = states();
  Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(S, S);
  for (const auto& t : transitions) avg += t;
  avg /= static_cast<double>(actions());
  // pi^T (avg - I) = 0 with sum(pi) = 1; replace one redundant equation.
  Eigen::MatrixXd system = avg.transpose() - Eigen::MatrixXd::Identity(S, S);
  system.row(S - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(S);
  rhs[S - 1] = 1.0;
  return system.fullPivLu().solve(rhs);
}

Trajectory DiscreteOracleSystem::sample(Eigen::Index n, std::uint64_t seed,
                                        const Eigen::VectorXd& prior) const {
  validate();
  if (n < 1) throw std::invalid_argument("sample length must be >= 1");
  const Eigen::VectorXd p0 = prior.size() ? prior : stationary();
  std::mt19937_64 rng(seed);
  auto draw = [&rng](const Eigen::VectorXd& p) {
    std::discrete_distribution<int> d(p.data(), p.data() + p.size());
    return d(rng);
  };
  std::uniform_int_distribution<int> policy(0, actions() - 1);

  Trajectory traj;
  traj.symbolic = true;
  traj.actions.resize(n, 1);
  traj.observations.resize(n, 1);
  int s = draw(p0);
  for (Eigen::Index t = 0; t < n; ++t) {
    const int a = policy(rng);
    s = draw(transitions[static_cast<std::size_t>(a)].row(s).transpose());
    const int o = draw(emission.row(s).transpose());
    traj.actions(t, 0) = a;
    traj.observations(t, 0) = o;
  }
  return traj;
}

Eigen::MatrixXd DiscreteOracleSystem::one_step_predictions(const Trajectory& trajectory,
                                                           const Eigen::VectorXd& prior) const {
  validate();
  trajectory.validate();
  Eigen::RowVectorXd belief = (prior.size() ? prior : stationary()).transpose();
  Eigen::MatrixXd out(trajectory.length(), symbols());
  for (Eigen::Index t = 0; t < trajectory.length(); ++t) {
    const int a = symbol_at(trajectory.actions(t, 0), actions());
    const int o = symbol_at(trajectory.observations(t, 0), symbols());
    const Eigen::RowVectorXd predicted = belief * transitions[static_cast<std::size_t>(a)];
    out.row(t) = predicted * emission;
    belief = predicted.cwiseProduct(emission.col(o).transpose());
    const double z = belief.sum();
    if (!(z > 0.0)) throw std::runtime_error("observation has zero probability under the system");
    belief /= z;
  }
  return out;
}

ExplicitHsePsr::ExplicitHsePsr(const WindowedData& data, double regularizer, int n_actions,
                               int n_symbols)
    : n_actions_(n_actions),
      n_symbols_(n_symbols),
      history_length_(data.history_length),
      test_length_(data.test_length),
      samples_(data.size()) {
  if (data.action_dim != 1 || data.observation_dim != 1) {
    throw std::invalid_argument("explicit oracle needs scalar symbol streams");
  }
  if (!(regularizer > 0.0)) throw std::invalid_argument("regularizer must be positive");
  const Eigen::Index T = samples_;
  const Eigen::Index L = history_length_;
  const Eigen::Index N = test_length_;
  const Eigen::Index dA = n_actions;
  const Eigen::Index dO = n_symbols;
  const Eigen::Index pair = dA * dO;
  const Eigen::Index dH = ipow(pair, L);
  d_ta_ = ipow(dA, N);
  d_to_ = ipow(dO, N);
  const Eigen::Index dS = d_to_ * d_ta_;
  ridge_ = regularizer * static_cast<double>(T);

  auto history_code = [&](const Eigen::MatrixXd& histories, Eigen::Index t) {
    Eigen::Index code = 0;
    Eigen::Index place = 1;
    for (Eigen::Index k = 0; k < L; ++k) {
      const int ak = symbol_at(histories(t, 2 * k), n_actions);
      const int ok = symbol_at(histories(t, 2 * k + 1), n_symbols);
      code += (ak * dO + ok) * place;
      place *= pair;
    }
    return code;
  };
  std::vector<Eigen::Index> h(T), h2(T), ta(T), to(T), ta2(T), to2(T), a(T), o(T);
  for (Eigen::Index t = 0; t < T; ++t) {
    const auto ut = static_cast<std::size_t>(t);
    h[ut] = history_code(data.histories, t);
    h2[ut] = history_code(data.shifted_histories, t);
    ta[ut] = window_code(data.test_actions.row(t), n_actions);
    to[ut] = window_code(data.test_observations.row(t), n_symbols);
    ta2[ut] = window_code(data.shifted_test_actions.row(t), n_actions);
    to2[ut] = window_code(data.shifted_test_observations.row(t), n_symbols);
    a[ut] = symbol_at(data.actions(t, 0), n_actions);
    o[ut] = symbol_at(data.observations(t, 0), n_symbols);
  }
  phi_h_ = one_hot_columns(h, dH);
  const Eigen::MatrixXd phi_ta = one_hot_columns(ta, d_ta_);
  const Eigen::MatrixXd phi_to = one_hot_columns(to, d_to_);
  const Eigen::MatrixXd phi_ta2 = one_hot_columns(ta2, d_ta_);
  const Eigen::MatrixXd phi_to2 = one_hot_columns(to2, d_to_);
  const Eigen::MatrixXd phi_a = one_hot_columns(a, dA);

  // Weights of each training history under ridge regression in feature space:
  // alpha_i = Phi_H^T (C_HH + ridge I)^{-1} phi_H(h_i); likewise for the
  // shifted histories against the shifted sample list.
  const Eigen::MatrixXd c_hh = phi_h_ * phi_h_.transpose();
  const Eigen::MatrixXd weights = phi_h_.transpose() * jitter_solve(c_hh, ridge_, phi_h_);
  const Eigen::MatrixXd phi_h2 = one_hot_columns(h2, dH);
  const Eigen::MatrixXd shifted_weights =
      phi_h2.transpose() * jitter_solve(phi_h2 * phi_h2.transpose(), ridge_, phi_h2);

  // Conditional operators S(h_i) = C_TO,TA|h (C_TA,TA|h + ridge I)^{-1}, vectorized,
  // and the same one step later for the shifted samples.
  Eigen::MatrixXd x(dS, T), x_shifted(dS, T);
  auto conditional = [&](const Eigen::MatrixXd& p_o, const Eigen::MatrixXd& p_a,
                         const Eigen::VectorXd& w) {
    const Eigen::MatrixXd c_oa = weighted_cross(p_o, w, p_a);
    const Eigen::MatrixXd c_aa = weighted_cross(p_a, w, p_a);
    // c_aa is symmetric, so S = (solve(c_aa, c_oa^T))^T.
    return Eigen::MatrixXd(jitter_solve(c_aa, ridge_, c_oa.transpose()).transpose());
  };
  for (Eigen::Index i = 0; i < T; ++i) {
    const Eigen::VectorXd w = weights.col(i);
    const Eigen::MatrixXd s = conditional(phi_to, phi_ta, w);
    const Eigen::MatrixXd s2 = conditional(phi_to2, phi_ta2, shifted_weights.col(i));
    x.col(i) = Eigen::Map<const Eigen::VectorXd>(s.data(), dS);
    x_shifted.col(i) = Eigen::Map<const Eigen::VectorXd>(s2.data(), dS);
  }

  // Per-sample targets: vec(vec(S'_s) phi_O(o_s)^T) and vec(phi_O phi_O^T).
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(dS * dO, T);
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(dO * dO, T);
  for (Eigen::Index s = 0; s < T; ++s) {
    const Eigen::Index os = o[static_cast<std::size_t>(s)];
    z.block(os * dS, s, dS, 1) = x_shifted.col(s);
    q(os + os * dO, s) = 1.0;
  }

  // For each history, regress those targets on the current action with KBR
  // weights: W_i = Z diag(alpha_i) Phi_A^T (C_AA|h_i + ridge I)^{-1}.
  Eigen::MatrixXd y_aot(dS * dO * dA, T), y_ao(dO * dO * dA, T);
  for (Eigen::Index i = 0; i < T; ++i) {
    const Eigen::VectorXd w = weights.col(i);
    const Eigen::MatrixXd c_aa = weighted_cross(phi_a, w, phi_a);
    const Eigen::MatrixXd w_aot =
        jitter_solve(c_aa, ridge_, weighted_cross(z, w, phi_a).transpose()).transpose();
    const Eigen::MatrixXd w_ao =
        jitter_solve(c_aa, ridge_, weighted_cross(q, w, phi_a).transpose()).transpose();
    y_aot.col(i) = Eigen::Map<const Eigen::VectorXd>(w_aot.data(), w_aot.size());
    y_ao.col(i) = Eigen::Map<const Eigen::VectorXd>(w_ao.data(), w_ao.size());
  }

  // Prediction operators by ridge regression from states: F = Y X^T (X X^T + ridge I)^{-1}.
  const Eigen::MatrixXd xxt = x * x.transpose();
  f_aot_ = jitter_solve(xxt, ridge_, x * y_aot.transpose()).transpose();
  f_ao_ = jitter_solve(xxt, ridge_, x * y_ao.transpose()).transpose();
  initial_ = x_shifted.rowwise().mean();
}

Eigen::MatrixXd ExplicitHsePsr::history_feature_gram() const {
  return phi_h_.transpose() * phi_h_;
}

Eigen::VectorXd ExplicitHsePsr::update(const Eigen::VectorXd& state, int action,
                                       int observation) const {
  const Eigen::Index dS = d_to_ * d_ta_;
  const Eigen::Index dO = n_symbols_;
  if (state.size() != dS) throw std::invalid_argument("explicit state has the wrong size");
  if (action < 0 || action >= n_actions_ || observation < 0 || observation >= n_symbols_) {
    throw std::invalid_argument("symbol out of range");
  }
  const Eigen::VectorXd aot = f_aot_ * state;
  const Eigen::VectorXd ao = f_ao_ * state;
  const Eigen::Map<const Eigen::MatrixXd> w(aot.data() + action * dS * dO, dS, dO);
  const Eigen::Map<const Eigen::MatrixXd> c(ao.data() + action * dO * dO, dO, dO);
  const Eigen::VectorXd e = Eigen::VectorXd::Unit(dO, observation);
  return w * jitter_solve(c, ridge_, e);
}

Eigen::VectorXd ExplicitHsePsr::test_embedding(const Eigen::VectorXd& state,
                                               const std::vector<int>& action_window) const {
  if (static_cast<Eigen::Index>(action_window.size()) != test_length_) {
    throw std::invalid_argument("action window must have N entries");
  }
  Eigen::RowVectorXd row(test_length_);
  for (Eigen::Index k = 0; k < test_length_; ++k) row[k] = action_window[static_cast<std::size_t>(k)];
  const Eigen::Map<const Eigen::MatrixXd> s(state.data(), d_to_, d_ta_);
  return s.col(window_code(row, n_actions_));
}

Eigen::VectorXd ExplicitHsePsr::observation_distribution(
    const Eigen::VectorXd& state, const std::vector<int>& action_window) const {
  const Eigen::VectorXd mu = test_embedding(state, action_window);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(n_symbols_);
  // The first symbol is the lowest digit of the window code.
  for (Eigen::Index k = 0; k < mu.size(); ++k) p[k % n_symbols_] += mu[k];
  return p;
}

Eigen::VectorXd gram_observation_distribution(const HsePsrModel& model, const BeliefState& belief,
                                              const Eigen::MatrixXd& action_window, int n_symbols) {
  const Eigen::VectorXd gamma = condition_test_actions(model, belief, action_window);
  const Eigen::Index T = model.samples();
  const Eigen::Index d = model.windowed.observation_dim;
  Eigen::VectorXd p(n_symbols);
  for (int k = 0; k < n_symbols; ++k) {
    Eigen::VectorXd indicator(T);
    for (Eigen::Index s = 0; s < T; ++s) {
      const Eigen::VectorXd first = model.transform.decode_observation(
          model.windowed.shifted_test_observations.row(s).head(d).transpose());
      indicator[s] = symbol_at(first[0], n_symbols) == k ? 1.0 : 0.0;
    }
    p[k] = expect_function(gamma, indicator);
  }
  return p;
}

double total_variation(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size()) throw std::invalid_argument("distribution sizes differ");
  return 0.5 * (p - q).lpNorm<1>();
}

}  // namespace hsepsr
