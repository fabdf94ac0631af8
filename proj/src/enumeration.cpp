#include "dde/enumeration.hpp"

#include "dde/error.hpp"

#include <cmath>
#include <limits>

namespace dde {

double log_sum_exp(const Eigen::Ref<const Vector>& values) noexcept {
  if (values.size() == 0) return -std::numeric_limits<double>::infinity();
  const double m = values.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((values.array() - m).exp().sum());
}

Matrix logistic_transition_table(const Matrix& B) {
  const Index rows = B.rows();
  const Index parents = B.cols() - 1;
  require(rows <= 30 && parents <= 30, ErrorCode::Capacity, "transition table too large");
  const Index R = Index{1} << rows;
  const Index C = Index{1} << parents;
  Matrix table(R, C);
  Vector on(rows), off(rows);
  for (Index c = 0; c < C; ++c) {
    for (Index k = 0; k < rows; ++k) {
      double eta = B(k, 0);
      for (Index l = 0; l < parents; ++l)
        if (config_bit(static_cast<Config>(c), l)) eta += B(k, l + 1);
      on[k] = log_sigmoid(eta);
      off[k] = log_sigmoid(-eta);
    }
    // Build row sums incrementally: config r differs from r without its
    // highest set bit in exactly that coordinate.
    table(0, c) = off.sum();
    for (Index r = 1; r < R; ++r) {
      Index top = 63 - __builtin_clzll(static_cast<unsigned long long>(r));
      table(r, c) = table(r ^ (Index{1} << top), c) - off[top] + on[top];
    }
  }
  return table;
}

ChainTables::ChainTables(const DdeModel& model, Index cap) : model_(&model) {
  const Index bits = model.total_latent_bits();
  if (bits > cap)
    fail(ErrorCode::Capacity,
         "exact enumeration needs 2^" + std::to_string(bits) +
             " latent configurations, above the cap of 2^" + std::to_string(cap) +
             "; use the SAEM-based tools (saem fitting, Gibbs posteriors) instead");
  const Index D = model.depth();
  const Index top_k = model.layer_size(D);
  log_top_.resize(Index{1} << top_k);
  for (Index c = 0; c < log_top_.size(); ++c) {
    double s = 0.0;
    for (Index k = 0; k < top_k; ++k)
      s += config_bit(static_cast<Config>(c), k) ? std::log(model.p[k]) : std::log1p(-model.p[k]);
    log_top_[c] = s;
  }
  for (Index d = 2; d <= D; ++d)
    transitions_.push_back(logistic_transition_table(model.B[static_cast<std::size_t>(d - 1)]));

  priors_.resize(static_cast<std::size_t>(D));
  priors_[static_cast<std::size_t>(D - 1)] = log_top_;
  for (Index d = D; d >= 2; --d) {
    const Matrix& T = log_transition(d);
    const Vector& above = priors_[static_cast<std::size_t>(d - 1)];
    Vector below(T.rows());
    for (Index r = 0; r < T.rows(); ++r) below[r] = log_sum_exp(T.row(r).transpose() + above);
    priors_[static_cast<std::size_t>(d - 2)] = std::move(below);
  }

  const Matrix& B1 = model.B[0];
  const Index K1 = model.layer_size(1);
  const Index C1 = Index{1} << K1;
  observed_eta_.resize(model.J, C1);
  for (Index c = 0; c < C1; ++c) {
    Vector eta = B1.col(0);
    for (Index k = 0; k < K1; ++k)
      if (config_bit(static_cast<Config>(c), k)) eta += B1.col(k + 1);
    observed_eta_.col(c) = eta;
  }
  kinds_ = model.family.column_kinds(model.J);
}

Vector ChainTables::observation_loglik(const Eigen::Ref<const Eigen::RowVectorXd>& y) const {
  const Index C1 = observed_eta_.cols();
  Vector out = Vector::Zero(C1);
  const Vector& gamma = model_->gamma;
  for (Index j = 0; j < model_->J; ++j) {
    const FamilyKind kind = kinds_[static_cast<std::size_t>(j)];
    const double g = gamma.size() ? gamma[j] : 1.0;
    const double yj = y[j];
    switch (kind) {
      case FamilyKind::Bernoulli:
        for (Index c = 0; c < C1; ++c) {
          const double eta = observed_eta_(j, c);
          out[c] += yj * eta - log1p_exp(eta);
        }
        break;
      case FamilyKind::Normal: {
        const double base = -std::log(g) - 0.5 * std::log(2.0 * M_PI);
        const double inv = 0.5 / (g * g);
        for (Index c = 0; c < C1; ++c) {
          const double r = yj - observed_eta_(j, c);
          out[c] += base - inv * r * r;
        }
        break;
      }
      default:
        for (Index c = 0; c < C1; ++c) out[c] += log_density(kind, yj, observed_eta_(j, c), g);
    }
  }
  return out;
}

std::vector<Vector> ChainTables::backward(const Vector& obs_loglik) const {
  const Index D = depth();
  std::vector<Vector> beta(static_cast<std::size_t>(D));
  beta[0] = obs_loglik;
  for (Index d = 2; d <= D; ++d) {
    const Matrix& T = log_transition(d);
    const Vector& below = beta[static_cast<std::size_t>(d - 2)];
    Vector up(T.cols());
    for (Index c = 0; c < T.cols(); ++c) up[c] = log_sum_exp(T.col(c) + below);
    beta[static_cast<std::size_t>(d - 1)] = std::move(up);
  }
  return beta;
}

double ChainTables::row_logprob(const Eigen::Ref<const Eigen::RowVectorXd>& y) const {
  return log_sum_exp(log_prior(1) + observation_loglik(y));
}

Vector joint_log_posterior(const ChainTables& tables, const Eigen::Ref<const Eigen::RowVectorXd>& y) {
  const DdeModel& model = tables.model();
  const Index D = model.depth();
  const Index bits = model.total_latent_bits();
  require(bits <= 24, ErrorCode::Capacity, "joint posterior limited to 24 latent bits");
  const Vector obs = tables.observation_loglik(y);
  Vector out(Index{1} << bits);
  for (Index full = 0; full < out.size(); ++full) {
    Index shift = 0;
    std::vector<Index> cfg(static_cast<std::size_t>(D));
    for (Index d = 1; d <= D; ++d) {
      const Index k = model.layer_size(d);
      cfg[static_cast<std::size_t>(d - 1)] = (full >> shift) & ((Index{1} << k) - 1);
      shift += k;
    }
    double s = tables.log_top()[cfg[static_cast<std::size_t>(D - 1)]] + obs[cfg[0]];
    for (Index d = 2; d <= D; ++d)
      s += tables.log_transition(d)(cfg[static_cast<std::size_t>(d - 2)],
                                    cfg[static_cast<std::size_t>(d - 1)]);
    out[full] = s;
  }
  out.array() -= log_sum_exp(out);
  return out;
}

}  // namespace dde
