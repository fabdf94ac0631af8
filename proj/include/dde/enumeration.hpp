#pragma once

#include "dde/model.hpp"

#include <vector>

namespace dde {

/// Exact marginalisation over all latent layers. The latent layers form a
/// chain A^(D) -> ... -> A^(1) -> Y, so the model-level tables below
/// (top-layer prior, layer transitions, prior marginals) are computed once
/// and each observed row only needs the 2^K1 observation likelihoods.
class ChainTables {
 public:
  explicit ChainTables(const DdeModel& model, Index cap = kDefaultEnumerationCap);

  const DdeModel& model() const noexcept { return *model_; }
  Index depth() const noexcept { return model_->depth(); }
  Index num_configs(Index layer) const { return Index{1} << model_->K[static_cast<std::size_t>(layer - 1)]; }

  /// log P(A^(D) = c).
  const Vector& log_top() const noexcept { return log_top_; }
  /// log P(A^(d-1) = r | A^(d) = c), rows r, cols c; valid for d >= 2.
  const Matrix& log_transition(Index d) const { return transitions_.at(static_cast<std::size_t>(d - 2)); }
  /// log P(A^(d) = c) after marginalising the layers above.
  const Vector& log_prior(Index d) const { return priors_.at(static_cast<std::size_t>(d - 1)); }
  /// Linear predictors of the observed layer, J x 2^K1.
  const Matrix& observed_eta() const noexcept { return observed_eta_; }

  /// log P(y | A^(1) = c) for every c.
  Vector observation_loglik(const Eigen::Ref<const Eigen::RowVectorXd>& y) const;

  /// Backward messages log P(y | A^(d) = c), d = 1..D.
  std::vector<Vector> backward(const Vector& obs_loglik) const;

  double row_logprob(const Eigen::Ref<const Eigen::RowVectorXd>& y) const;

 private:
  const DdeModel* model_;
  Vector log_top_;
  std::vector<Matrix> transitions_;
  std::vector<Vector> priors_;
  Matrix observed_eta_;
  std::vector<FamilyKind> kinds_;
};

double log_sum_exp(const Eigen::Ref<const Vector>& values) noexcept;

/// Layer-d transition table for an arbitrary coefficient matrix:
/// log P(child = r | parent = c), 2^rows x 2^(cols-1).
Matrix logistic_transition_table(const Matrix& B);

/// Joint posterior over every latent bit of one observed row, enumerated
/// explicitly. Configurations are indexed with layer 1 in the lowest bits.
/// Intended for small models (tests, latent argmax).
Vector joint_log_posterior(const ChainTables& tables, const Eigen::Ref<const Eigen::RowVectorXd>& y);

}  // namespace dde
