#pragma once

#include "dde/family.hpp"
#include "dde/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dde {

/// Default bound on the total number of latent bits for exact enumeration.
inline constexpr Index kDefaultEnumerationCap = 20;

/// Deep discrete encoder parameters. Layer d (1-based) has K[d-1] binary
/// latents; B[d-1] maps layer d to layer d-1 and has K^(d-1) rows and
/// K^(d)+1 columns, intercept first. K^(0) is J.
struct DdeModel {
  std::vector<Index> K;
  Index J = 0;
  ObservedFamily family;
  Vector p;
  std::vector<Matrix> B;
  Vector gamma;

  Index depth() const noexcept { return static_cast<Index>(K.size()); }
  /// Number of variables in layer d, with layer 0 the observed layer.
  Index layer_size(Index d) const { return d == 0 ? J : K.at(static_cast<std::size_t>(d - 1)); }
  Index total_latent_bits() const noexcept;
};

enum class MonotoneRule {
  PositiveColumnSums,   // every slope column sums to a positive value
  FirstNonzeroPositive  // first nonzero slope in each column is positive
};

struct ValidationOptions {
  bool require_monotone = false;
  MonotoneRule monotone_rule = MonotoneRule::PositiveColumnSums;
};

/// Throws Error(Validation) when shapes or parameter ranges are invalid.
void validate(const DdeModel& model, const ValidationOptions& options = {});

/// Returns warnings that do not block use (e.g. a non-shrinking ladder).
std::vector<std::string> model_warnings(const DdeModel& model);

/// N x J observed responses.
struct Dataset {
  RowMatrix Y;
  Index rows() const noexcept { return Y.rows(); }
  Index cols() const noexcept { return Y.cols(); }
};

void validate_dataset(const Dataset& data, const ObservedFamily& family);

struct LatentAssignment {
  std::vector<BinaryMatrix> layers;  // layers[d-1] is N x K^(d)
  Index depth() const noexcept { return static_cast<Index>(layers.size()); }
};

struct GraphSet {
  std::vector<BinaryMatrix> layers;  // layers[d-1] is K^(d-1) x K^(d)
};

/// eta(i, k) = B(k, 0) + sum_l B(k, l + 1) * A(i, l).
Matrix linear_predictors(const Matrix& B, const BinaryMatrix& parent);

/// Top-down ancestral sampling. Row i draws from the substream
/// derive_seed(seed, i) in the order: top layer, each shallower latent
/// layer, then the observed cells, coordinates ascending.
struct Sample {
  Dataset data;
  LatentAssignment latents;
};
Sample sample(const DdeModel& model, Index N, std::uint64_t seed);

/// Latent states only (used for random initialisation).
LatentAssignment sample_latents(const DdeModel& model, Index N, std::uint64_t seed);

double marginal_logprob(const DdeModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& y,
                        Index cap = kDefaultEnumerationCap);
double loglik(const DdeModel& model, const Dataset& data, Index cap = kDefaultEnumerationCap);

/// g(l, k) = 1 iff |slope| > tolerance. The default tolerance 0 reads off
/// exact zeros produced by thresholded M-steps.
GraphSet graphs_from_coefficients(const DdeModel& model, double tolerance = 0.0);
inline constexpr double kFileGraphTolerance = 1e-8;

enum class BenchmarkKind { Strict, Generic };
BenchmarkKind parse_benchmark_kind(const std::string& name);

/// Benchmark parameters: strict (two pure children per latent) or generic
/// (banded triangular blocks). Requires J = 3 K^(1) and
/// K^(d-1) = 3 K^(d).
/// Layers with more than 3 K rows cycle the three blocks; fewer than 2 K
/// rows is rejected.
DdeModel make_benchmark_params(BenchmarkKind kind, Index J, const std::vector<Index>& K,
                               const ObservedFamily& family);
std::vector<std::string> benchmark_warnings(Index J, const std::vector<Index>& K);

}  // namespace dde
