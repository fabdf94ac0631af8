#include "dde/evaluation.hpp"

#include "dde/enumeration.hpp"
#include "dde/error.hpp"
#include "dde/parallel.hpp"
#include "dde/rng.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace dde {

namespace {

// Shortest augmenting path assignment with potentials; returns perm[row].
std::vector<Index> solve_assignment(const Matrix& cost) {
  const Index n = cost.rows();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<Index> p(static_cast<std::size_t>(n + 1), 0), way(static_cast<std::size_t>(n + 1), 0);
  for (Index i = 1; i <= n; ++i) {
    p[0] = i;
    Index j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1), kInf);
    std::vector<bool> used(static_cast<std::size_t>(n + 1), false);
    do {
      used[static_cast<std::size_t>(j0)] = true;
      const Index i0 = p[static_cast<std::size_t>(j0)];
      double delta = kInf;
      Index j1 = 0;
      for (Index j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const Index j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<Index> perm(static_cast<std::size_t>(n), -1);
  for (Index j = 1; j <= n; ++j) perm[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  return perm;
}

double optimal_cost(const Matrix& cost) {
  if (cost.rows() == 0) return 0.0;
  return assignment_cost(cost, solve_assignment(cost));
}

}  // namespace

double assignment_cost(const Matrix& cost, const std::vector<Index>& perm) {
  double total = 0.0;
  for (std::size_t r = 0; r < perm.size(); ++r) total += cost(static_cast<Index>(r), perm[r]);
  return total;
}

std::vector<Index> hungarian(const Matrix& cost) {
  require(cost.rows() == cost.cols(), ErrorCode::Shape, "cost matrix must be square");
  require(cost.allFinite(), ErrorCode::InvalidArgument, "cost matrix must be finite");
  const Index n = cost.rows();
  if (n == 0) return {};
  const double best = optimal_cost(cost);
  const double slack = 1e-9 * std::max(1.0, cost.cwiseAbs().maxCoeff() * static_cast<double>(n));
  // Fix rows in order, each to the smallest column that keeps the optimum.
  std::vector<Index> perm(static_cast<std::size_t>(n), -1);
  std::vector<Index> free_cols(static_cast<std::size_t>(n));
  std::iota(free_cols.begin(), free_cols.end(), Index{0});
  double fixed = 0.0;
  for (Index r = 0; r < n; ++r) {
    const Index m = n - r - 1;
    for (std::size_t ci = 0; ci < free_cols.size(); ++ci) {
      const Index c = free_cols[ci];
      Matrix sub(m, m);
      for (Index a = 0; a < m; ++a) {
        Index col = 0;
        for (std::size_t cj = 0; cj < free_cols.size(); ++cj) {
          if (cj == ci) continue;
          sub(a, col++) = cost(r + 1 + a, free_cols[cj]);
        }
      }
      const double total = fixed + cost(r, c) + optimal_cost(sub);
      if (total <= best + slack) {
        perm[static_cast<std::size_t>(r)] = c;
        fixed += cost(r, c);
        free_cols.erase(free_cols.begin() + static_cast<std::ptrdiff_t>(ci));
        break;
      }
    }
    require(perm[static_cast<std::size_t>(r)] >= 0, ErrorCode::Internal, "assignment search failed");
  }
  return perm;
}

namespace {

void check_same_dims(const DdeModel& a, const DdeModel& b) {
  require(a.K == b.K && a.J == b.J, ErrorCode::Validation, "models have different dimensions");
  require(a.B.size() == b.B.size(), ErrorCode::Validation, "models have different depths");
}

Matrix permute_layer(const Matrix& B, const std::vector<Index>* rows, const std::vector<Index>& cols) {
  Matrix out(B.rows(), B.cols());
  for (Index r = 0; r < B.rows(); ++r) {
    const Index src = rows ? (*rows)[static_cast<std::size_t>(r)] : r;
    out(r, 0) = B(src, 0);
    for (Index k = 0; k + 1 < B.cols(); ++k) out(r, k + 1) = B(src, cols[static_cast<std::size_t>(k)] + 1);
  }
  return out;
}

}  // namespace

Alignment align(const DdeModel& model_hat, const DdeModel& model_star) {
  check_same_dims(model_hat, model_star);
  Alignment a;
  const std::vector<Index>* row_perm = nullptr;
  for (std::size_t d = 0; d < model_star.B.size(); ++d) {
    const Matrix& Bs = model_star.B[d];
    const Matrix& Bh = model_hat.B[d];
    const Index K = Bs.cols() - 1;
    // Rows of the estimate relabelled by the previous layer's matching.
    Matrix Bh_rows(Bh.rows(), Bh.cols());
    for (Index r = 0; r < Bh.rows(); ++r)
      Bh_rows.row(r) = Bh.row(row_perm ? (*row_perm)[static_cast<std::size_t>(r)] : r);
    Matrix cost(K, K);
    for (Index kt = 0; kt < K; ++kt)
      for (Index kh = 0; kh < K; ++kh) cost(kt, kh) = (Bs.col(kt + 1) - Bh_rows.col(kh + 1)).squaredNorm();
    a.perms.push_back(hungarian(cost));
    row_perm = &a.perms.back();
  }
  return a;
}

DdeModel apply_alignment(const DdeModel& model_hat, const Alignment& a) {
  require(a.perms.size() == model_hat.B.size(), ErrorCode::Shape, "alignment depth mismatch");
  DdeModel out = model_hat;
  for (std::size_t d = 0; d < model_hat.B.size(); ++d)
    out.B[d] = permute_layer(model_hat.B[d], d == 0 ? nullptr : &a.perms[d - 1], a.perms[d]);
  const auto& top = a.perms.back();
  for (Index k = 0; k < out.p.size(); ++k) out.p[k] = model_hat.p[top[static_cast<std::size_t>(k)]];
  return out;
}

GraphSet apply_alignment(const GraphSet& graphs_hat, const Alignment& a) {
  require(a.perms.size() == graphs_hat.layers.size(), ErrorCode::Shape, "alignment depth mismatch");
  GraphSet out = graphs_hat;
  for (std::size_t d = 0; d < graphs_hat.layers.size(); ++d) {
    const BinaryMatrix& G = graphs_hat.layers[d];
    BinaryMatrix P(G.rows(), G.cols());
    for (Index r = 0; r < G.rows(); ++r) {
      const Index src = d == 0 ? r : a.perms[d - 1][static_cast<std::size_t>(r)];
      for (Index k = 0; k < G.cols(); ++k) P(r, k) = G(src, a.perms[d][static_cast<std::size_t>(k)]);
    }
    out.layers[d] = std::move(P);
  }
  return out;
}

std::vector<double> accuracy_G(const GraphSet& G_hat, const GraphSet& G_star, const Alignment& a) {
  const GraphSet aligned = apply_alignment(G_hat, a);
  require(aligned.layers.size() == G_star.layers.size(), ErrorCode::Shape, "graph depth mismatch");
  std::vector<double> out;
  for (std::size_t d = 0; d < G_star.layers.size(); ++d) {
    const auto& x = aligned.layers[d];
    const auto& y = G_star.layers[d];
    require(x.rows() == y.rows() && x.cols() == y.cols(), ErrorCode::Shape, "graph shape mismatch");
    out.push_back((x.array() == y.array()).cast<double>().mean());
  }
  return out;
}

double accuracy_G_overall(const GraphSet& G_hat, const GraphSet& G_star, const Alignment& a) {
  const GraphSet aligned = apply_alignment(G_hat, a);
  double agree = 0.0, total = 0.0;
  for (std::size_t d = 0; d < G_star.layers.size(); ++d) {
    agree += (aligned.layers[d].array() == G_star.layers[d].array()).cast<double>().sum();
    total += static_cast<double>(G_star.layers[d].size());
  }
  return total > 0.0 ? agree / total : 1.0;
}

double rmse_theta(const DdeModel& model_hat, const DdeModel& model_star, const Alignment& a) {
  check_same_dims(model_hat, model_star);
  const DdeModel h = apply_alignment(model_hat, a);
  double sq = (h.p - model_star.p).squaredNorm();
  double count = static_cast<double>(h.p.size());
  for (std::size_t d = 0; d < h.B.size(); ++d) {
    sq += (h.B[d] - model_star.B[d]).squaredNorm();
    count += static_cast<double>(h.B[d].size());
  }
  if (model_star.family.has_dispersion()) {
    for (Index j = 0; j < model_star.J; ++j) {
      if (!model_star.family.column_has_dispersion(j)) continue;
      const double e = h.gamma[j] - model_star.gamma[j];
      sq += e * e;
      count += 1.0;
    }
  }
  return std::sqrt(sq / count);
}

Index parameter_count(const DdeModel& model) {
  Index n = model.p.size();
  for (const Matrix& B : model.B) n += B.size();
  for (Index j = 0; j < model.J; ++j)
    if (model.family.column_has_dispersion(j)) ++n;
  return n;
}

Index nonzero_parameter_count(const DdeModel& model) {
  Index n = model.p.size();
  for (const Matrix& B : model.B) n += (B.array() != 0.0).count();
  for (Index j = 0; j < model.J; ++j)
    if (model.family.column_has_dispersion(j)) ++n;
  return n;
}

EbicResult ebic(const DdeModel& model, const Dataset& data, Index cap) {
  EbicResult out;
  out.loglik = loglik(model, data, cap);
  out.df = nonzero_parameter_count(model);
  out.total = parameter_count(model);
  const double n = static_cast<double>(out.total), k = static_cast<double>(out.df);
  const double log_binom = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
  out.ebic = -2.0 * out.loglik + k * std::log(static_cast<double>(data.rows())) + 2.0 * log_binom;
  return out;
}

LrtResult lrt_select(const std::vector<LrtCandidate>& candidates, double alpha) {
  require(!candidates.empty(), ErrorCode::InvalidArgument, "candidate list is empty");
  require(alpha > 0.0 && alpha < 1.0, ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
  LrtResult out;
  out.chosen = static_cast<Index>(candidates.size()) - 1;
  for (std::size_t k = 0; k + 1 < candidates.size(); ++k) {
    LrtStep step;
    step.from = static_cast<Index>(k);
    step.statistic = std::max(0.0, 2.0 * (candidates[k + 1].loglik - candidates[k].loglik));
    step.df = std::max<Index>(1, candidates[k + 1].df - candidates[k].df);
    boost::math::chi_squared dist(static_cast<double>(step.df));
    step.critical = boost::math::quantile(boost::math::complement(dist, alpha));
    step.rejected = step.statistic > step.critical;
    out.steps.push_back(step);
    if (!step.rejected) {
      out.chosen = static_cast<Index>(k);
      break;
    }
  }
  return out;
}

LrtResult lrt_select(const Dataset& data, const ObservedFamily& family,
                     const std::vector<std::vector<Index>>& grid, double alpha,
                     const FitConfig& cfg, std::vector<LrtCandidate>* fitted) {
  std::vector<LrtCandidate> candidates;
  for (const auto& K : grid) {
    const SpectralInit init = spectral_init(data, K, family);
    const FitReport rep = fit(data, cfg, init);
    LrtCandidate c;
    c.K = K;
    c.loglik = loglik(rep.model_hat, data, cfg.enumeration_cap);
    c.df = nonzero_parameter_count(rep.model_hat);
    candidates.push_back(std::move(c));
  }
  if (fitted) *fitted = candidates;
  return lrt_select(candidates, alpha);
}

PosteriorLatents posterior_latents(const DdeModel& model, const Dataset& data, Index cap,
                                   Index gibbs_sweeps, std::uint64_t seed) {
  validate(model);
  require(data.cols() == model.J, ErrorCode::Shape, "dataset width must equal J");
  const Index N = data.rows();
  const Index D = model.depth();
  PosteriorLatents out;
  for (Index d = 1; d <= D; ++d) out.A.layers.emplace_back(BinaryMatrix::Zero(N, model.layer_size(d)));

  if (model.total_latent_bits() > cap) {
    out.approximate = true;
    require(gibbs_sweeps >= 1, ErrorCode::InvalidArgument, "need at least one Gibbs sweep");
    std::vector<Matrix> ones;
    for (Index d = 1; d <= D; ++d) ones.emplace_back(Matrix::Zero(N, model.layer_size(d)));
    LatentAssignment state = out.A;
    for (Index s = 0; s < gibbs_sweeps; ++s) {
      state = gibbs_sweep(data, model, state, derive_seed(seed, static_cast<std::uint64_t>(s)));
      for (Index d = 0; d < D; ++d) ones[static_cast<std::size_t>(d)] += state.layers[static_cast<std::size_t>(d)].cast<double>();
    }
    for (Index d = 0; d < D; ++d)
      out.A.layers[static_cast<std::size_t>(d)] =
          (2.0 * ones[static_cast<std::size_t>(d)].array() > static_cast<double>(gibbs_sweeps)).cast<std::uint8_t>();
    return out;
  }

  const ChainTables tables(model, cap);
  // Max-product over the chain: best[d-1](r) is the best log score of the
  // layers above given layer d = r; arg[d-1](r) is the smallest maximizer.
  std::vector<Vector> best(static_cast<std::size_t>(D));
  std::vector<std::vector<Index>> arg(static_cast<std::size_t>(D));
  best[static_cast<std::size_t>(D - 1)] = tables.log_top();
  for (Index d = D; d >= 2; --d) {
    const Matrix& T = tables.log_transition(d);
    const Vector& above = best[static_cast<std::size_t>(d - 1)];
    Vector below(T.rows());
    std::vector<Index> which(static_cast<std::size_t>(T.rows()), 0);
    for (Index r = 0; r < T.rows(); ++r) {
      double m = -std::numeric_limits<double>::infinity();
      for (Index c = 0; c < T.cols(); ++c) {
        const double v = above[c] + T(r, c);
        if (v > m) {
          m = v;
          which[static_cast<std::size_t>(r)] = c;
        }
      }
      below[r] = m;
    }
    best[static_cast<std::size_t>(d - 2)] = std::move(below);
    arg[static_cast<std::size_t>(d - 1)] = std::move(which);
  }
  for_each_chunk(N, kRowChunk, [&](Index, Index begin, Index end) {
    for (Index i = begin; i < end; ++i) {
      const Vector score = best[0] + tables.observation_loglik(data.Y.row(i));
      Index c = 0;
      for (Index r = 1; r < score.size(); ++r)
        if (score[r] > score[c]) c = r;
      for (Index d = 1; d <= D; ++d) {
        auto& layer = out.A.layers[static_cast<std::size_t>(d - 1)];
        for (Index k = 0; k < layer.cols(); ++k) layer(i, k) = static_cast<std::uint8_t>(config_bit(static_cast<Config>(c), k));
        if (d < D) c = arg[static_cast<std::size_t>(d)][static_cast<std::size_t>(c)];
      }
    }
  });
  return out;
}

Matrix reconstruct(const DdeModel& model, const LatentAssignment& A) {
  require(A.depth() >= 1, ErrorCode::Shape, "latent assignment is empty");
  Matrix eta = linear_predictors(model.B[0], A.layers[0]);
  for (Index j = 0; j < eta.cols(); ++j) {
    const FamilyKind kind = model.family.kind(j);
    for (Index i = 0; i < eta.rows(); ++i) {
      if (kind == FamilyKind::Lognormal) {
        const double g = model.gamma[j];
        eta(i, j) = std::exp(eta(i, j) + 0.5 * g * g);
      } else {
        eta(i, j) = mean_map(kind, eta(i, j));
      }
    }
  }
  return eta;
}

namespace {

void require_poisson(const DdeModel& model) {
  require(model.family.is_uniform() && model.family.uniform_kind() == FamilyKind::Poisson,
          ErrorCode::Unsupported, "perplexity needs a Poisson observed layer");
}

double perplexity_of(const Matrix& eta, const RowMatrix& Y) {
  double num = 0.0, den = 0.0;
  for (Index i = 0; i < Y.rows(); ++i) {
    const double m = eta.row(i).maxCoeff();
    const double lse = m + std::log((eta.row(i).array() - m).exp().sum());
    for (Index j = 0; j < Y.cols(); ++j) {
      if (Y(i, j) == 0.0) continue;
      num += Y(i, j) * (eta(i, j) - lse);
      den += Y(i, j);
    }
  }
  require(den > 0.0, ErrorCode::InvalidArgument, "perplexity needs at least one count");
  return std::exp(-num / den);
}

}  // namespace

double perplexity(const DdeModel& model, const Dataset& data, const LatentAssignment& A) {
  require_poisson(model);
  require(A.depth() >= 1 && A.layers[0].rows() == data.rows(), ErrorCode::Shape,
          "latents do not match the dataset");
  return perplexity_of(linear_predictors(model.B[0], A.layers[0]), data.Y);
}

HeldoutPerplexity heldout_perplexity(const DdeModel& model, const Dataset& data,
                                     double train_fraction, std::uint64_t seed, Index cap) {
  require_poisson(model);
  require(train_fraction > 0.0 && train_fraction < 1.0, ErrorCode::InvalidArgument,
          "train fraction must lie in (0, 1)");
  Dataset train, test;
  train.Y.resize(data.rows(), data.cols());
  test.Y.resize(data.rows(), data.cols());
  for (Index i = 0; i < data.rows(); ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    for (Index j = 0; j < data.cols(); ++j) {
      const auto y = static_cast<long long>(data.Y(i, j));
      const long long kept = y > 0 ? std::binomial_distribution<long long>(y, train_fraction)(rng.engine()) : 0;
      train.Y(i, j) = static_cast<double>(kept);
      test.Y(i, j) = static_cast<double>(y - kept);
    }
  }
  DdeModel shifted = model;
  shifted.B[0].col(0).array() += std::log(train_fraction);
  const PosteriorLatents post = posterior_latents(shifted, train, cap, 500, seed);
  HeldoutPerplexity out;
  const Matrix eta = linear_predictors(model.B[0], post.A.layers[0]);
  out.train = perplexity_of(eta, train.Y);
  out.test = perplexity_of(eta, test.Y);
  return out;
}

Matrix topic_scores(const Matrix& B1) {
  const Index J = B1.rows();
  const Index K = B1.cols() - 1;
  Matrix S(J, K);
  for (Index j = 0; j < J; ++j) {
    for (Index k = 0; k < K; ++k) {
      double m = K == 1 ? B1(j, k + 1) : std::numeric_limits<double>::infinity();
      for (Index l = 0; l < K; ++l)
        if (l != k) m = std::min(m, B1(j, k + 1) - B1(j, l + 1));
      S(j, k) = std::max(m, 0.0);
    }
  }
  return S;
}

TopicMetrics topic_metrics(const Matrix& B1, const Matrix& doc_freq, Index top_m) {
  const Index J = B1.rows();
  const Index K = B1.cols() - 1;
  require(doc_freq.rows() == J && doc_freq.cols() == J, ErrorCode::Shape,
          "document frequency table must be J x J");
  require(top_m >= 1, ErrorCode::InvalidArgument, "top_m must be positive");
  const Matrix S = topic_scores(B1);
  TopicMetrics out;
  for (Index k = 0; k < K; ++k) {
    std::vector<Index> words;
    for (Index j = 0; j < J; ++j)
      if (S(j, k) > 0.0) words.push_back(j);
    std::stable_sort(words.begin(), words.end(), [&](Index a, Index b) { return S(a, k) > S(b, k); });
    if (static_cast<Index>(words.size()) > top_m) words.resize(static_cast<std::size_t>(top_m));
    out.representatives.push_back(std::move(words));
  }
  std::vector<bool> warned(static_cast<std::size_t>(J), false);
  double total = 0.0;
  for (const auto& words : out.representatives) {
    for (std::size_t m = 1; m < words.size(); ++m) {
      for (std::size_t l = 0; l < m; ++l) {
        const Index v1 = words[m], v2 = words[l];
        const double f2 = doc_freq(v2, v2);
        if (f2 <= 0.0) {
          if (!warned[static_cast<std::size_t>(v2)]) {
            out.warnings.push_back("word " + std::to_string(v2) + " never occurs; excluded from coherence");
            warned[static_cast<std::size_t>(v2)] = true;
          }
          continue;
        }
        total += std::log((doc_freq(v1, v2) + 1.0) / f2);
      }
    }
  }
  out.neg_coherence = K > 0 ? -total / static_cast<double>(K) : 0.0;
  for (Index a = 0; a < K; ++a)
    for (Index b = a + 1; b < K; ++b)
      for (Index w : out.representatives[static_cast<std::size_t>(a)]) {
        const auto& other = out.representatives[static_cast<std::size_t>(b)];
        if (std::find(other.begin(), other.end(), w) != other.end()) ++out.similarity;
      }
  return out;
}

}  // namespace dde
