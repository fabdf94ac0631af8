#pragma once

#include "dde/model.hpp"
#include "dde/spectral.hpp"

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace dde {

enum class PenaltyKind { None, TLP, HardThreshold };

std::string_view to_string(PenaltyKind kind) noexcept;
PenaltyKind parse_penalty_kind(std::string_view name);

/// TLP: lambda * min(|b|, tau). HardThreshold: (tau^2 / 2) * 1(b != 0).
struct Penalty {
  PenaltyKind kind = PenaltyKind::None;
  double lambda = 0.0;
  double tau = 1.0;
};

double penalty_value(const Penalty& pen, double b) noexcept;

/// lambda = N^(1/4), tau = max(3 N^(-0.3), 0.3).
Penalty default_tuning(Index N, Index layer = 1);

/// Selection grid: lambda_d in {N^(1/8), N^(2/8), N^(3/8)} for each of the
/// D layers, crossed with tau in 2 * {N^(-1/8), N^(-2/8), N^(-3/8)} shared
/// across layers. Each entry holds one penalty per layer.
std::vector<std::vector<Penalty>> tuning_grid(Index N, Index D);

enum class Algorithm { PEM, SAEM };
std::string_view to_string(Algorithm algo) noexcept;
Algorithm parse_algorithm(std::string_view name);

struct FitConfig {
  Algorithm algo = Algorithm::SAEM;
  std::vector<Penalty> penalties;  // one per layer; empty means default_tuning
  Index gibbs_C = 1;
  double step_exponent = 1.0;      // theta_t = t^(-step_exponent)
  Index burn_in = 20;              // leading iterations with theta = 1
  Index max_iter = 100;
  double conv_pem = -1.0;          // non-positive: N / 500
  double conv_saem = -1.0;         // non-positive: K^(D) / 2
  std::uint64_t seed = 1;
  double box_bound = 15.0;
  Index newton_max_iter = 50;
  Index exact_support_dim = 12;    // enumerate supports up to this many slopes
  Index enumeration_cap = kDefaultEnumerationCap;
  /// SAEM: latent layers d >= 2 up to this width contribute their exact
  /// conditional given the sampled neighbouring layers instead of one draw.
  Index marginal_latent_dim = 12;
  /// PEM: one iteration is two EM updates, a squared extrapolation along
  /// their difference (backtracked until the objective does not drop), and a
  /// stabilising EM update. false gives one plain EM update per iteration.
  bool accelerate = true;
};

void validate(const FitConfig& cfg);

struct FitReport {
  DdeModel model_hat;
  GraphSet graphs_hat;
  std::vector<double> objective_trace;
  Index iters = 0;
  double wallclock_seconds = 0.0;
  std::uint64_t seed = 0;
  bool converged = false;
  Index solver_failures = 0;
  Algorithm algo = Algorithm::SAEM;
  LatentAssignment latents;  // final Gibbs state (SAEM only)
};

/// Expected complete-data statistics of one layer. Rows with Bernoulli or
/// Poisson children are kept per distinct parent configuration ("design
/// point"): weight w, weighted child sum s1. Rows with dispersion families
/// only need moments: the weighted Gram matrix of [1, alpha], the cross
/// moments with the child, and the weighted child square.
class DesignStats {
 public:
  DesignStats() = default;
  DesignStats(Index parents, std::vector<FamilyKind> row_kinds);

  Index parents() const noexcept { return parents_; }
  Index rows() const noexcept { return static_cast<Index>(kinds_.size()); }
  Index size() const noexcept { return static_cast<Index>(keys_.size()); }
  const std::vector<Config>& keys() const noexcept { return keys_; }
  bool keyed() const noexcept { return keyed_; }
  bool has_moments() const noexcept { return moments_; }
  double total_weight() const noexcept { return total_; }

  /// Adds weight * (child, child^2) at parent configuration key.
  void add(Config key, double weight, const double* child);
  /// Adds already weighted child sums (no second moments; latent layers).
  void add_weighted(Config key, double weight, const double* weighted_child);
  /// Pre-registers a design point so that key order is deterministic.
  Index find_or_add(Config key);

  /// this <- (1 - theta) * this + theta * other.
  void blend(const DesignStats& other, double theta);
  void merge(const DesignStats& other);

  Matrix design() const;
  Vector weights() const;
  Vector child_sums(Index row) const;
  const Matrix& gram() const noexcept { return gram_; }
  Vector cross_moments(Index row) const { return xs1_.col(row); }
  double child_squares(Index row) const { return s2_[row]; }

 private:
  Index parents_ = 0;
  std::vector<FamilyKind> kinds_;
  bool keyed_ = false;
  bool moments_ = false;
  double total_ = 0.0;
  std::vector<Config> keys_;
  std::unordered_map<Config, Index> lookup_;
  std::vector<double> w_, s1_;
  Matrix gram_;
  Matrix xs1_;
  Vector s2_;
};

/// One coefficient row's expected complete-data objective. Bernoulli and
/// Poisson rows use the design-point form (X, w, s1); dispersion rows use
/// the moment form (gram, xs1, s2, W).
struct RowObjective {
  FamilyKind kind = FamilyKind::Bernoulli;
  const Matrix* X = nullptr;
  Vector w;
  Vector s1;
  const Matrix* gram = nullptr;
  Vector xs1;
  double s2 = 0.0;
  double W = 0.0;

  Index dim() const { return X ? X->cols() : gram->cols(); }
};

struct MStepOptions {
  double box_bound = 15.0;
  Index newton_max_iter = 50;
  Index exact_support_dim = 12;
};

struct RowSolution {
  Vector beta;
  double gamma = 1.0;      // profiled dispersion (dispersion kinds)
  double objective = 0.0;  // Q - penalty at the solution
  bool solver_ok = true;
};

/// Q(beta) for the row; dispersion kinds use the supplied gamma.
double row_q(const RowObjective& obj, const Vector& beta, double gamma);

/// Penalized row maximization. The result is never worse than warm.
RowSolution mstep_row(const RowObjective& obj, const Penalty& pen, const Vector& warm,
                      double warm_gamma, const MStepOptions& opts = {});

/// One full Gibbs sweep over all latents of every row (deep layer first,
/// coordinates ascending). Row i uses the substream derive_seed(seed, i).
LatentAssignment gibbs_sweep(const Dataset& data, const DdeModel& model,
                             const LatentAssignment& current, std::uint64_t seed);

/// Random starting point: p and slopes ~ U(0, 1), intercepts ~ U(-1, 0),
/// gamma ~ U(0.5, 1.5); latents drawn from that random model.
SpectralInit random_init(const Dataset& data, const std::vector<Index>& K,
                         const ObservedFamily& family, std::uint64_t seed);

FitReport pem_fit(const Dataset& data, const FitConfig& cfg, const SpectralInit& init);
FitReport saem_fit(const Dataset& data, const FitConfig& cfg, const SpectralInit& init);
FitReport fit(const Dataset& data, const FitConfig& cfg, const SpectralInit& init);

/// Penalized objective helper: sum of penalty_value over all slopes.
double total_penalty(const DdeModel& model, const std::vector<Penalty>& penalties);

/// Penalties actually used for a fit (defaults filled in).
std::vector<Penalty> resolved_penalties(const FitConfig& cfg, Index N, Index D);

}  // namespace dde
