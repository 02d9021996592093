#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hsepsr {

/// Thrown when a regularized solve stays inaccurate after every jitter step.
class IllConditionedSolve : public std::runtime_error {
 public:
  IllConditionedSolve() : std::runtime_error("ill-conditioned solve") {}
};

inline constexpr double kSolveResidualTolerance = 1e-8;
inline constexpr int kMaxJitterEscalations = 3;
inline constexpr double kJitterFactor = 10.0;

struct RidgeSolution {
  Eigen::MatrixXd solution;
  double ridge = 0.0;     // ridge actually used, after any escalation
  int escalations = 0;
};

/// Solves (M + ridge * I) X = B with a pivoted LU factorization. M can be
/// non-symmetric. If the relative residual exceeds 1e-8 (or the result is not
/// finite) the ridge is multiplied by 10 and the solve repeated, at most three
/// times; after that IllConditionedSolve is thrown.
RidgeSolution ridge_solve(const Eigen::MatrixXd& M, double ridge, const Eigen::MatrixXd& B);

/// (diag(alpha) G + ridge I)^{-1} diag(alpha). Negative weights are kept.
Eigen::MatrixXd conditioning_matrix(const Eigen::VectorXd& alpha, const Eigen::MatrixXd& G,
                                    double ridge, int* escalations = nullptr);

/// Column t is the ridge weight vector of training history t:
/// (G_HH + ridge I)^{-1} G_HH.
Eigen::MatrixXd history_weights(const Eigen::MatrixXd& G_HH, double ridge);

/// Every Gram matrix the model is built from. All are T x T and indexed by
/// training sample; the two cross Grams pair unshifted rows with shifted
/// columns.
struct GramCache {
  Eigen::MatrixXd history;                  // G_H,H
  Eigen::MatrixXd shifted_history;          // G_H',H'
  Eigen::MatrixXd test_action;              // G_TA,TA
  Eigen::MatrixXd shifted_test_action;      // G_TA',TA'
  Eigen::MatrixXd test_observation;         // G_TO,TO
  Eigen::MatrixXd action;                   // G_A,A
  Eigen::MatrixXd observation;              // G_O,O
  Eigen::MatrixXd test_observation_cross;   // G_TO,TO'
  Eigen::MatrixXd test_action_cross;        // G_TA,TA'
  double ridge = 0.0;                       // lambda * T
};

enum class TensorRole { test_action, shifted_test_action, single_action };

struct JitterEvent {
  std::string stage;
  Eigen::Index index = -1;
  int escalations = 0;
  double ridge = 0.0;
};

/// T conditioning matrices C_i = (diag(a_i) G + ridge I)^{-1} diag(a_i), one
/// per training history. Stored as a (T*T) x T matrix whose column i is the
/// column-major vec(C_i), so weighted sums over i are a single GEMM.
class ConditioningTensor {
 public:
  ConditioningTensor() = default;
  ConditioningTensor(TensorRole role, Eigen::Index samples);

  [[nodiscard]] TensorRole role() const { return role_; }
  [[nodiscard]] Eigen::Index samples() const { return samples_; }
  [[nodiscard]] bool empty() const { return samples_ == 0; }

  [[nodiscard]] Eigen::Map<const Eigen::MatrixXd> slice(Eigen::Index i) const;
  [[nodiscard]] Eigen::Map<Eigen::MatrixXd> slice(Eigen::Index i);

  /// Column b of the result is vec(sum_i weights(i, b) C_i).
  [[nodiscard]] Eigen::MatrixXd contract(const Eigen::MatrixXd& weights) const;

  /// (sum_i weights[i] C_i) * v, without forming the sum when cheaper.
  [[nodiscard]] Eigen::VectorXd contract_apply(const Eigen::VectorXd& weights,
                                               const Eigen::VectorXd& v) const;

  [[nodiscard]] const Eigen::MatrixXd& packed() const { return data_; }

 private:
  TensorRole role_ = TensorRole::test_action;
  Eigen::Index samples_ = 0;
  Eigen::MatrixXd data_;
};

/// Builds C_i for every column a_i of `weights` against Gram `G`.
ConditioningTensor build_conditioning_tensor(TensorRole role, const Eigen::MatrixXd& weights,
                                             const Eigen::MatrixXd& G, double ridge,
                                             std::vector<JitterEvent>* jitter = nullptr);

/// Inner products of vectorized conditional embedding operators:
/// entry (i, j) = trace(Ci_i^T G_obs Cj_j G_act^T).
///
/// With Ci = Cj = C, G_obs = G_TO,TO and G_act = G_TA,TA this is the state
/// Gram G_T,T; with Cj = C', G_obs = G_TO,TO' and G_act = G_TA,TA' it is the
/// cross Gram G_T,T'. Cost is O(T^4).
Eigen::MatrixXd state_gram(const ConditioningTensor& Ci, const ConditioningTensor& Cj,
                           const Eigen::MatrixXd& G_obs, const Eigen::MatrixXd& G_act);

}  // namespace hsepsr
