#pragma once

#include "dde/estimation.hpp"
#include "dde/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dde {

/// Minimum-cost assignment; perm[row] = column. Among optimal permutations
/// the lexicographically smallest is returned.
std::vector<Index> hungarian(const Matrix& cost);
double assignment_cost(const Matrix& cost, const std::vector<Index>& perm);

/// perms[d-1][k] is the estimated latent matched to true latent k of layer d.
struct Alignment {
  std::vector<std::vector<Index>> perms;
};

Alignment align(const DdeModel& model_hat, const DdeModel& model_star);

/// Relabels the estimated model's latents to the truth's labels.
DdeModel apply_alignment(const DdeModel& model_hat, const Alignment& a);
GraphSet apply_alignment(const GraphSet& graphs_hat, const Alignment& a);

std::vector<double> accuracy_G(const GraphSet& G_hat, const GraphSet& G_star, const Alignment& a);
/// Entrywise accuracy pooled over all layers.
double accuracy_G_overall(const GraphSet& G_hat, const GraphSet& G_star, const Alignment& a);

/// Root mean squared error over p, every B entry, and gamma on dispersion
/// columns.
double rmse_theta(const DdeModel& model_hat, const DdeModel& model_star, const Alignment& a);

Index parameter_count(const DdeModel& model);
Index nonzero_parameter_count(const DdeModel& model);

struct EbicResult {
  double ebic = 0.0;
  double loglik = 0.0;
  Index df = 0;
  Index total = 0;
};

/// -2 loglik + df log N + 2 log C(total, df).
EbicResult ebic(const DdeModel& model, const Dataset& data, Index cap = kDefaultEnumerationCap);

struct LrtCandidate {
  std::vector<Index> K;
  double loglik = 0.0;
  Index df = 0;
};

struct LrtStep {
  Index from = 0;  // index into the candidate list
  double statistic = 0.0;
  Index df = 0;
  double critical = 0.0;
  bool rejected = false;
};

struct LrtResult {
  Index chosen = 0;  // index into the candidate list
  std::vector<LrtStep> steps;
};

/// Sequential tests over candidates ordered by size: H0 candidate k against
/// k+1; the first non-rejection wins.
LrtResult lrt_select(const std::vector<LrtCandidate>& candidates, double alpha = 0.01);

/// Fits every candidate (spectral init then the configured algorithm) and
/// runs the sequential test.
LrtResult lrt_select(const Dataset& data, const ObservedFamily& family,
                     const std::vector<std::vector<Index>>& grid, double alpha,
                     const FitConfig& cfg, std::vector<LrtCandidate>* fitted = nullptr);

struct PosteriorLatents {
  LatentAssignment A;
  bool approximate = false;
};

/// Joint posterior mode per row. Exact below the enumeration cap (ties go to
/// the smallest layer-1 configuration, then layer 2, ...); above it, a
/// majority vote over Gibbs sweeps.
PosteriorLatents posterior_latents(const DdeModel& model, const Dataset& data,
                                   Index cap = kDefaultEnumerationCap, Index gibbs_sweeps = 500,
                                   std::uint64_t seed = 1);

/// Conditional mean E(Y | A^(1)).
Matrix reconstruct(const DdeModel& model, const LatentAssignment& A);

/// exp(-sum y log(lambda / row sum lambda) / sum y), lambda = exp(eta).
double perplexity(const DdeModel& model, const Dataset& data, const LatentAssignment& A);

struct HeldoutPerplexity {
  double train = 0.0;
  double test = 0.0;
};

/// Splits every count by binomial thinning (train_fraction kept), infers
/// latents from the training part with intercepts shifted by
/// log(train_fraction), and scores both parts.
HeldoutPerplexity heldout_perplexity(const DdeModel& model, const Dataset& data,
                                     double train_fraction = 0.8, std::uint64_t seed = 1,
                                     Index cap = kDefaultEnumerationCap);

struct TopicMetrics {
  std::vector<std::vector<Index>> representatives;  // per topic, best first
  double neg_coherence = 0.0;
  Index similarity = 0;
  std::vector<std::string> warnings;
};

/// Word scores max(min_{l != k} (beta_jk - beta_jl), 0) (beta_jk itself when
/// K = 1). Representatives are the top_m positive scores per topic.
/// doc_freq is J x J: diagonal holds single-word document frequencies,
/// off-diagonal entries co-occurrence frequencies.
TopicMetrics topic_metrics(const Matrix& B1, const Matrix& doc_freq, Index top_m = 15);
Matrix topic_scores(const Matrix& B1);

}  // namespace dde
