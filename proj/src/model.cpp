#include "dde/model.hpp"

#include "dde/enumeration.hpp"
#include "dde/error.hpp"
#include "dde/parallel.hpp"
#include "dde/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dde {

Index DdeModel::total_latent_bits() const noexcept {
  return std::accumulate(K.begin(), K.end(), Index{0});
}

namespace {

std::string layer_name(Index d) { return "B^(" + std::to_string(d) + ")"; }

bool monotone_ok(const Matrix& B, MonotoneRule rule) {
  for (Index l = 1; l < B.cols(); ++l) {
    if (rule == MonotoneRule::PositiveColumnSums) {
      if (!(B.col(l).sum() > 0.0)) return false;
    } else {
      bool ok = false;
      for (Index r = 0; r < B.rows(); ++r) {
        if (B(r, l) != 0.0) {
          ok = B(r, l) > 0.0;
          break;
        }
      }
      if (!ok) return false;
    }
  }
  return true;
}

}  // namespace

void validate(const DdeModel& model, const ValidationOptions& options) {
  const Index D = model.depth();
  require(D >= 1, ErrorCode::Validation, "model needs at least one latent layer");
  require(model.J >= 1, ErrorCode::Validation, "J must be positive");
  for (Index d = 1; d <= D; ++d) {
    const Index k = model.layer_size(d);
    require(k >= 1 && k <= kMaxLayerWidth, ErrorCode::Validation,
            "layer " + std::to_string(d) + " width must be in [1, 64]");
  }
  try {
    model.family.check_width(model.J);
  } catch (const Error& e) {
    fail(ErrorCode::Validation, e.what());
  }
  require(model.p.size() == model.layer_size(D), ErrorCode::Validation,
          "p must have K^(D) entries");
  for (Index k = 0; k < model.p.size(); ++k)
    require(model.p[k] > 0.0 && model.p[k] < 1.0, ErrorCode::Validation,
            "p entries must lie strictly inside (0, 1)");
  require(static_cast<Index>(model.B.size()) == D, ErrorCode::Validation,
          "model needs one coefficient matrix per layer");
  for (Index d = 1; d <= D; ++d) {
    const Matrix& B = model.B[static_cast<std::size_t>(d - 1)];
    require(B.rows() == model.layer_size(d - 1) && B.cols() == model.layer_size(d) + 1,
            ErrorCode::Validation,
            layer_name(d) + " must be " + std::to_string(model.layer_size(d - 1)) + " x " +
                std::to_string(model.layer_size(d) + 1));
    require(B.allFinite(), ErrorCode::Validation, layer_name(d) + " has non-finite entries");
    if (options.require_monotone)
      require(monotone_ok(B, options.monotone_rule), ErrorCode::Validation,
              layer_name(d) + " violates the monotonicity constraint");
  }
  if (model.family.has_dispersion()) {
    require(model.gamma.size() == model.J, ErrorCode::Validation, "gamma must have J entries");
    for (Index j = 0; j < model.J; ++j)
      if (model.family.column_has_dispersion(j))
        require(std::isfinite(model.gamma[j]) && model.gamma[j] > 0.0, ErrorCode::Validation,
                "gamma entries must be positive");
  } else {
    require(model.gamma.size() == 0, ErrorCode::Validation,
            "gamma is only present for families with dispersion");
  }
}

std::vector<std::string> model_warnings(const DdeModel& model) {
  std::vector<std::string> out;
  for (Index d = 1; d <= model.depth(); ++d)
    if (model.layer_size(d) >= model.layer_size(d - 1))
      out.push_back("layer " + std::to_string(d) + " is not narrower than the layer below");
  return out;
}

void validate_dataset(const Dataset& data, const ObservedFamily& family) {
  require(data.rows() >= 1 && data.cols() >= 1, ErrorCode::Shape, "dataset is empty");
  family.check_width(data.cols());
  for (Index j = 0; j < data.cols(); ++j) {
    const FamilyKind kind = family.kind(j);
    for (Index i = 0; i < data.rows(); ++i)
      if (!in_sample_space(kind, data.Y(i, j)))
        fail(ErrorCode::Validation, "cell (" + std::to_string(i) + ", " + std::to_string(j) +
                                        ") is outside the " + std::string(to_string(kind)) +
                                        " sample space");
  }
}

Matrix linear_predictors(const Matrix& B, const BinaryMatrix& parent) {
  require(B.cols() == parent.cols() + 1, ErrorCode::Shape,
          "coefficient matrix has " + std::to_string(B.cols()) + " columns but parent has " +
              std::to_string(parent.cols()) + " latents");
  Matrix eta = parent.cast<double>() * B.rightCols(B.cols() - 1).transpose();
  eta.rowwise() += B.col(0).transpose();
  return eta;
}

namespace {

Sample sample_impl(const DdeModel& model, Index N, std::uint64_t seed, bool observed) {
  validate(model);
  require(N >= 1, ErrorCode::InvalidArgument, "N must be positive");
  const Index D = model.depth();
  Sample out;
  out.latents.layers.resize(static_cast<std::size_t>(D));
  for (Index d = 1; d <= D; ++d)
    out.latents.layers[static_cast<std::size_t>(d - 1)].setZero(N, model.layer_size(d));
  if (observed) out.data.Y.setZero(N, model.J);
  const auto kinds = model.family.column_kinds(model.J);

  for_each_chunk(N, kRowChunk, [&](Index, Index begin, Index end) {
    Vector parent, child;
    for (Index i = begin; i < end; ++i) {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
      auto& top = out.latents.layers[static_cast<std::size_t>(D - 1)];
      parent.resize(model.layer_size(D));
      for (Index k = 0; k < parent.size(); ++k) {
        top(i, k) = rng.bernoulli(model.p[k]) ? 1 : 0;
        parent[k] = top(i, k);
      }
      for (Index d = D; d >= 2; --d) {
        const Matrix& B = model.B[static_cast<std::size_t>(d - 1)];
        auto& layer = out.latents.layers[static_cast<std::size_t>(d - 2)];
        child = B.col(0) + B.rightCols(B.cols() - 1) * parent;
        for (Index k = 0; k < child.size(); ++k) {
          layer(i, k) = rng.bernoulli(sigmoid(child[k])) ? 1 : 0;
          child[k] = layer(i, k);
        }
        parent.swap(child);
      }
      if (!observed) continue;
      const Matrix& B = model.B[0];
      const Vector eta = B.col(0) + B.rightCols(B.cols() - 1) * parent;
      for (Index j = 0; j < model.J; ++j) {
        const double g = model.gamma.size() ? model.gamma[j] : 1.0;
        out.data.Y(i, j) = draw(kinds[static_cast<std::size_t>(j)], eta[j], g, rng);
      }
    }
  });
  return out;
}

}  // namespace

Sample sample(const DdeModel& model, Index N, std::uint64_t seed) {
  return sample_impl(model, N, seed, true);
}

LatentAssignment sample_latents(const DdeModel& model, Index N, std::uint64_t seed) {
  return sample_impl(model, N, seed, false).latents;
}

double marginal_logprob(const DdeModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& y,
                        Index cap) {
  validate(model);
  require(y.size() == model.J, ErrorCode::Shape, "row length must equal J");
  ChainTables tables(model, cap);
  return tables.row_logprob(y);
}

double loglik(const DdeModel& model, const Dataset& data, Index cap) {
  validate(model);
  require(data.cols() == model.J, ErrorCode::Shape, "dataset width must equal J");
  ChainTables tables(model, cap);
  const Index N = data.rows();
  const Index chunks = (N + kRowChunk - 1) / kRowChunk;
  std::vector<double> partial(static_cast<std::size_t>(chunks), 0.0);
  for_each_chunk(N, kRowChunk, [&](Index c, Index begin, Index end) {
    double s = 0.0;
    for (Index i = begin; i < end; ++i) s += tables.row_logprob(data.Y.row(i));
    partial[static_cast<std::size_t>(c)] = s;
  });
  return std::accumulate(partial.begin(), partial.end(), 0.0);
}

GraphSet graphs_from_coefficients(const DdeModel& model, double tolerance) {
  GraphSet out;
  for (const Matrix& B : model.B) {
    BinaryMatrix G(B.rows(), B.cols() - 1);
    for (Index r = 0; r < B.rows(); ++r)
      for (Index l = 1; l < B.cols(); ++l) G(r, l - 1) = std::abs(B(r, l)) > tolerance ? 1 : 0;
    out.layers.push_back(std::move(G));
  }
  return out;
}

BenchmarkKind parse_benchmark_kind(const std::string& name) {
  if (name == "strict" || name == "s") return BenchmarkKind::Strict;
  if (name == "generic" || name == "g") return BenchmarkKind::Generic;
  fail(ErrorCode::InvalidArgument, "unknown benchmark kind '" + name + "'");
}

namespace {

double band_b1(Index j, Index k, Index K) {
  if (k == j) return 4.0;
  if (2 * std::abs(k - j) == K) return 4.0 / 3.0;
  return 0.0;
}

double band_b2(Index j, Index k, Index K) {
  if (k == j) return 4.0;
  const Index reach = (K + 2) / 3;
  if (k - j > 0 && k - j <= reach) return 4.0 / 3.0;
  return 0.0;
}

Matrix benchmark_layer(BenchmarkKind kind, Index rows, Index K) {
  Matrix B = Matrix::Zero(rows, K + 1);
  const double intercepts[3] = {-2.0, -4.0, -2.0};
  for (Index r = 0; r < rows; ++r) {
    const Index block = (r / K) % 3;
    const Index j = r % K;
    B(r, 0) = intercepts[block];
    for (Index k = 0; k < K; ++k) {
      double v = 0.0;
      if (block == 2) {
        v = band_b1(j, k, K);
      } else if (kind == BenchmarkKind::Strict) {
        v = k == j ? 4.0 : 0.0;
      } else {
        v = block == 0 ? band_b2(j, k, K) : band_b2(k, j, K);
      }
      B(r, k + 1) = v;
    }
  }
  return B;
}

}  // namespace

DdeModel make_benchmark_params(BenchmarkKind kind, Index J, const std::vector<Index>& K,
                               const ObservedFamily& family) {
  require(!K.empty(), ErrorCode::Validation, "benchmark needs at least one latent layer");
  DdeModel model;
  model.K = K;
  model.J = J;
  model.family = family;
  for (Index d = 1; d <= model.depth(); ++d) {
    const Index rows = model.layer_size(d - 1);
    const Index cols = model.layer_size(d);
    require(cols >= 1 && rows >= 2 * cols, ErrorCode::Validation,
            "benchmark layout needs at least two rows per latent in layer " + std::to_string(d));
    model.B.push_back(benchmark_layer(kind, rows, cols));
  }
  if (kind == BenchmarkKind::Generic && family.is_uniform() &&
      family.uniform_kind() == FamilyKind::Poisson) {
    Matrix& B = model.B[0];
    const Index K1 = K[0];
    for (Index r = 0; r < B.rows(); ++r) {
      if (K1 <= 6) {
        const double intercepts[3] = {-3.0, -5.0, -2.0};
        B(r, 0) = intercepts[(r / K1) % 3];
      } else {
        B(r, 0) = B.row(r).tail(K1).sum() >= 8.0 ? -10.0 : -5.0;
      }
    }
  }
  model.p = Vector::Constant(K.back(), 0.5);
  if (family.has_dispersion()) model.gamma = Vector::Ones(J);
  validate(model);
  return model;
}

std::vector<std::string> benchmark_warnings(Index J, const std::vector<Index>& K) {
  std::vector<std::string> out;
  Index below = J;
  for (std::size_t d = 0; d < K.size(); ++d) {
    if (below != 3 * K[d])
      out.push_back("layer " + std::to_string(d + 1) + ": benchmark layout expects " +
                    std::to_string(3 * K[d]) + " rows, got " + std::to_string(below));
    below = K[d];
  }
  return out;
}

}  // namespace dde
