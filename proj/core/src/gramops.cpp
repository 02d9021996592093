#include "hsepsr/gramops.hpp"

#include <algorithm>
#include <cmath>

namespace hsepsr {

RidgeSolution ridge_solve(const Eigen::MatrixXd& M, double ridge, const Eigen::MatrixXd& B) {
  if (M.rows() != M.cols()) throw std::invalid_argument("ridge_solve: matrix is not square");
  if (B.rows() != M.rows()) throw std::invalid_argument("ridge_solve: right-hand side mismatch");
  if (!(ridge > 0.0)) throw std::invalid_argument("ridge_solve: ridge must be positive");

  const double b_norm = B.norm();
  RidgeSolution out;
  out.ridge = ridge;
  for (int attempt = 0; attempt <= kMaxJitterEscalations; ++attempt) {
    Eigen::MatrixXd K = M;
    K.diagonal().array() += out.ridge;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(K);
    out.solution = lu.solve(B);
    if (out.solution.allFinite()) {
      const double residual = (K * out.solution - B).norm();
      if (residual <= kSolveResidualTolerance * b_norm) {
        out.escalations = attempt;
        return out;
      }
    }
    out.ridge *= kJitterFactor;
  }
  throw IllConditionedSolve();
}

Eigen::MatrixXd conditioning_matrix(const Eigen::VectorXd& alpha, const Eigen::MatrixXd& G,
                                    double ridge, int* escalations) {
  if (G.rows() != G.cols() || G.rows() != alpha.size()) {
    throw std::invalid_argument("conditioning_matrix: dimension mismatch");
  }
  const Eigen::MatrixXd weighted = alpha.asDiagonal() * G;
  const Eigen::MatrixXd rhs = alpha.asDiagonal().toDenseMatrix();
  auto solved = ridge_solve(weighted, ridge, rhs);
  if (escalations) *escalations = solved.escalations;
  return std::move(solved.solution);
}

Eigen::MatrixXd history_weights(const Eigen::MatrixXd& G_HH, double ridge) {
  return ridge_solve(G_HH, ridge, G_HH).solution;
}

ConditioningTensor::ConditioningTensor(TensorRole role, Eigen::Index samples)
    : role_(role), samples_(samples), data_(Eigen::MatrixXd::Zero(samples * samples, samples)) {}

Eigen::Map<const Eigen::MatrixXd> ConditioningTensor::slice(Eigen::Index i) const {
  return {data_.col(i).data(), samples_, samples_};
}

Eigen::Map<Eigen::MatrixXd> ConditioningTensor::slice(Eigen::Index i) {
  return {data_.col(i).data(), samples_, samples_};
}

Eigen::MatrixXd ConditioningTensor::contract(const Eigen::MatrixXd& weights) const {
  if (weights.rows() != samples_) throw std::invalid_argument("tensor contraction mismatch");
  return data_ * weights;
}

Eigen::VectorXd ConditioningTensor::contract_apply(const Eigen::VectorXd& weights,
                                                   const Eigen::VectorXd& v) const {
  if (weights.size() != samples_ || v.size() != samples_) {
    throw std::invalid_argument("tensor contraction mismatch");
  }
  Eigen::VectorXd summed = data_ * weights;
  return Eigen::Map<const Eigen::MatrixXd>(summed.data(), samples_, samples_) * v;
}

ConditioningTensor build_conditioning_tensor(TensorRole role, const Eigen::MatrixXd& weights,
                                             const Eigen::MatrixXd& G, double ridge,
                                             std::vector<JitterEvent>* jitter) {
  const Eigen::Index T = weights.cols();
  if (weights.rows() != T || G.rows() != T || G.cols() != T) {
    throw std::invalid_argument("conditioning tensor: dimension mismatch");
  }
  ConditioningTensor tensor(role, T);
  for (Eigen::Index i = 0; i < T; ++i) {
    int escalations = 0;
    tensor.slice(i) = conditioning_matrix(weights.col(i), G, ridge, &escalations);
    if (escalations > 0 && jitter) {
      const char* stage = role == TensorRole::test_action           ? "test-action tensor"
                          : role == TensorRole::shifted_test_action ? "shifted-test-action tensor"
                                                                    : "action tensor";
      jitter->push_back({stage, i, escalations, ridge * std::pow(kJitterFactor, escalations)});
    }
  }
  return tensor;
}

Eigen::MatrixXd state_gram(const ConditioningTensor& Ci, const ConditioningTensor& Cj,
                           const Eigen::MatrixXd& G_obs, const Eigen::MatrixXd& G_act) {
  const Eigen::Index T = Ci.samples();
  if (Cj.samples() != T || G_obs.rows() != T || G_obs.cols() != T || G_act.rows() != T ||
      G_act.cols() != T) {
    throw std::invalid_argument("state_gram: dimension mismatch");
  }
  // trace(A^T B) is the Frobenius product <A, B>, so entry (i, j) is
  // <C_i, G_obs C'_j G_act^T>. Build those right factors a block of j at a
  // time and contract against all of Ci with one GEMM per block.
  constexpr Eigen::Index kBlock = 16;
  const Eigen::MatrixXd G_act_t = G_act.transpose();
  Eigen::MatrixXd out(T, T);
  Eigen::MatrixXd packed(T * T, std::min(kBlock, T));
  Eigen::MatrixXd tmp(T, T);
  for (Eigen::Index j0 = 0; j0 < T; j0 += kBlock) {
    const Eigen::Index width = std::min(kBlock, T - j0);
    for (Eigen::Index k = 0; k < width; ++k) {
      tmp.noalias() = G_obs * Cj.slice(j0 + k);
      Eigen::Map<Eigen::MatrixXd>(packed.col(k).data(), T, T).noalias() = tmp * G_act_t;
    }
    out.middleCols(j0, width).noalias() =
        Ci.packed().transpose() * packed.leftCols(width);
  }
  return out;
}

}  // namespace hsepsr
