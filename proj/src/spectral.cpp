#include "dde/spectral.hpp"

#include "dde/error.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace dde {

void validate(const SpectralConfig& cfg) {
  require(cfg.eps_trunc > 0.0 && cfg.eps_trunc < 0.5, ErrorCode::InvalidArgument,
          "eps_trunc must lie in (0, 0.5)");
  require(!cfg.link_scale || *cfg.link_scale > 0.0, ErrorCode::InvalidArgument,
          "link scale must be positive");
  require(cfg.singular_floor_mult > 0.0, ErrorCode::InvalidArgument,
          "singular floor multiplier must be positive");
}

namespace {

void warn(std::vector<std::string>* warnings, std::string msg) {
  if (warnings) warnings->push_back(std::move(msg));
}

Eigen::BDCSVD<Matrix> thin_svd(const Matrix& M) {
  Eigen::BDCSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  require(svd.info() == Eigen::Success, ErrorCode::Numeric, "SVD failed");
  return svd;
}

double link_scale(FamilyKind kind, const SpectralConfig& cfg) {
  return cfg.link_scale ? *cfg.link_scale : default_link_scale(kind);
}

}  // namespace

Matrix denoise_and_linearize(const RowMatrix& Y, Index K, const std::vector<FamilyKind>& kinds,
                             const SpectralConfig& cfg, std::vector<std::string>* warnings,
                             Vector* singular_values) {
  validate(cfg);
  const Index N = Y.rows();
  const Index J = Y.cols();
  require(K >= 1, ErrorCode::InvalidArgument, "K must be positive");
  require(static_cast<Index>(kinds.size()) == J, ErrorCode::Shape, "one family kind per column");
  const bool all_pass = std::all_of(kinds.begin(), kinds.end(),
                                    [](FamilyKind k) { return has_dispersion(k); });
  Matrix Z(N, J);
  if (all_pass) {
    for (Index j = 0; j < J; ++j) {
      if (kinds[static_cast<std::size_t>(j)] == FamilyKind::Lognormal)
        Z.col(j) = Y.col(j).array().log().matrix();
      else
        Z.col(j) = Y.col(j);
    }
    if (singular_values) *singular_values = thin_svd(Z).singularValues();
    return Z;
  }

  const Matrix Ym = Y;
  const auto svd = thin_svd(Ym);
  const Vector& s = svd.singularValues();
  if (singular_values) *singular_values = s;
  const double floor = cfg.singular_floor_mult * std::sqrt(static_cast<double>(N));
  Index above = 0;
  while (above < s.size() && s[above] >= floor) ++above;
  Index rank = std::max(K + 1, above);
  if (rank > std::min(N, J)) {
    warn(warnings, "denoising rank " + std::to_string(rank) + " clipped to " +
                       std::to_string(std::min(N, J)));
    rank = std::min(N, J);
  }
  const Matrix smooth = svd.matrixU().leftCols(rank) * s.head(rank).asDiagonal() *
                        svd.matrixV().leftCols(rank).transpose();
  const double eps = cfg.eps_trunc;
  for (Index j = 0; j < J; ++j) {
    const FamilyKind kind = kinds[static_cast<std::size_t>(j)];
    for (Index i = 0; i < N; ++i) {
      double v = smooth(i, j);
      switch (kind) {
        case FamilyKind::Bernoulli:
          v = std::clamp(v, eps, 1.0 - eps);
          Z(i, j) = std::log(v) - std::log1p(-v);
          break;
        case FamilyKind::Poisson:
          Z(i, j) = std::log(std::max(v, eps));
          break;
        case FamilyKind::Normal:
          Z(i, j) = Y(i, j);
          break;
        case FamilyKind::Lognormal:
          Z(i, j) = std::log(Y(i, j));
          break;
      }
    }
  }
  return Z;
}

double varimax_criterion(const Matrix& V) {
  const double J = static_cast<double>(V.rows());
  double total = 0.0;
  for (Index k = 0; k < V.cols(); ++k) {
    const Eigen::ArrayXd sq = V.col(k).array().square();
    const double m = sq.sum() / J;
    total += sq.square().sum() / J - m * m;
  }
  return total;
}

VarimaxResult varimax(const Matrix& V, Index max_iter, double tol) {
  VarimaxResult out;
  out.rotated = V;
  out.rotation = Matrix::Identity(V.cols(), V.cols());
  out.criterion = varimax_criterion(V);
  const Index K = V.cols();
  if (K < 2 || V.rows() == 0) return out;
  const double J = static_cast<double>(V.rows());
  Matrix& L = out.rotated;
  Matrix& R = out.rotation;
  for (Index sweep = 0; sweep < max_iter; ++sweep) {
    for (Index a = 0; a + 1 < K; ++a) {
      for (Index b = a + 1; b < K; ++b) {
        const Eigen::ArrayXd x = L.col(a).array();
        const Eigen::ArrayXd y = L.col(b).array();
        const Eigen::ArrayXd u = x.square() - y.square();
        const Eigen::ArrayXd v = 2.0 * x * y;
        const double A = u.sum();
        const double Bs = v.sum();
        const double C = (u.square() - v.square()).sum();
        const double Dd = 2.0 * (u * v).sum();
        const double num = Dd - 2.0 * A * Bs / J;
        const double den = C - (A * A - Bs * Bs) / J;
        const double phi = 0.25 * std::atan2(num, den);
        if (std::abs(phi) < 1e-15) continue;
        const double c = std::cos(phi), s = std::sin(phi);
        const Vector la = L.col(a), lb = L.col(b);
        L.col(a) = c * la + s * lb;
        L.col(b) = -s * la + c * lb;
        const Vector ra = R.col(a), rb = R.col(b);
        R.col(a) = c * ra + s * rb;
        R.col(b) = -s * ra + c * rb;
      }
    }
    out.sweeps = sweep + 1;
    const double next = varimax_criterion(L);
    const double gain = next - out.criterion;
    out.criterion = next;
    if (gain <= tol * std::max(std::abs(next), 1e-300)) break;
  }
  return out;
}

namespace {

// Solves (X^T X) beta = X^T Z with a ridge fallback when X^T X is singular.
Matrix least_squares(const Matrix& X, const Matrix& Z, std::vector<std::string>* warnings,
                     const char* what) {
  Matrix XtX = X.transpose() * X;
  const Matrix XtZ = X.transpose() * Z;
  Eigen::LDLT<Matrix> ldlt(XtX);
  const bool ok = ldlt.info() == Eigen::Success && ldlt.isPositive() &&
                  ldlt.vectorD().minCoeff() > 1e-10 * std::max(1.0, ldlt.vectorD().maxCoeff());
  if (ok) return ldlt.solve(XtZ);
  warn(warnings, std::string("singular ") + what + "; using a ridge-regularized solve");
  const double lambda = 1e-8 * std::max(XtX.trace(), 1e-12);
  XtX.diagonal().array() += lambda;
  return XtX.ldlt().solve(XtZ);
}

}  // namespace

LayerInit init_layer(const Matrix& Z, Index K, const std::vector<FamilyKind>& kinds,
                     const SpectralConfig& cfg, std::vector<std::string>* warnings) {
  validate(cfg);
  const Index N = Z.rows();
  const Index J = Z.cols();
  require(K >= 1 && K <= std::min(N, J), ErrorCode::InvalidArgument,
          "K must lie in [1, min(N, J)]");
  require(static_cast<Index>(kinds.size()) == J, ErrorCode::Shape, "one family kind per column");
  const double delta = cfg.delta_thresh > 0.0 ? cfg.delta_thresh
                                              : 1.0 / (2.5 * std::sqrt(static_cast<double>(J)));

  const Vector mean = Z.colwise().mean().transpose();
  const Matrix Z0 = Z.rowwise() - mean.transpose();
  const auto svd = thin_svd(Z0);
  Matrix V = svd.matrixV().leftCols(K);
  V = varimax(V, cfg.varimax_max_iter, cfg.varimax_tol).rotated;
  for (Index j = 0; j < J; ++j)
    for (Index k = 0; k < K; ++k)
      if (std::abs(V(j, k)) < delta) V(j, k) = 0.0;
  for (Index k = 0; k < K; ++k)
    if (V.col(k).sum() < 0.0) V.col(k) = -V.col(k);

  // Centered latent scores, then the binary latents by sign.
  const Matrix A0 = least_squares(V, Z0.transpose(), warnings, "loading matrix").transpose();
  LayerInit out;
  out.A.resize(N, K);
  for (Index i = 0; i < N; ++i)
    for (Index k = 0; k < K; ++k) out.A(i, k) = A0(i, k) > 0.0 ? 1 : 0;

  Matrix X(N, K + 1);
  X.col(0).setOnes();
  X.rightCols(K) = out.A.cast<double>();
  const Matrix coef = least_squares(X, Z0, warnings, "latent design");  // (K+1) x J
  const Vector abar = out.A.cast<double>().colwise().mean().transpose();

  out.G.resize(J, K);
  out.B.resize(J, K + 1);
  for (Index j = 0; j < J; ++j) {
    double intercept = mean[j];
    for (Index k = 0; k < K; ++k) {
      const bool edge = V(j, k) != 0.0;
      const double slope = edge ? coef(k + 1, j) : 0.0;
      out.G(j, k) = edge ? 1 : 0;
      out.B(j, k + 1) = slope;
      intercept -= slope * abar[k];
    }
    out.B(j, 0) = intercept;
  }

  out.gamma.resize(J);
  const Matrix fitted = X * out.B.transpose();
  for (Index j = 0; j < J; ++j) {
    const double rss = (Z.col(j) - fitted.col(j)).squaredNorm();
    out.gamma[j] = std::max(std::sqrt(rss / static_cast<double>(N)), 1e-3);
  }
  for (Index j = 0; j < J; ++j) out.B.row(j) *= link_scale(kinds[static_cast<std::size_t>(j)], cfg);

  // Orient each latent so its slope column sums to a positive value.
  for (Index k = 0; k < K; ++k) {
    if (out.B.col(k + 1).sum() >= 0.0) continue;
    out.B.col(0) += out.B.col(k + 1);
    out.B.col(k + 1) = -out.B.col(k + 1);
    for (Index i = 0; i < N; ++i) out.A(i, k) = 1 - out.A(i, k);
  }
  return out;
}

SpectralInit spectral_init(const Dataset& data, const std::vector<Index>& K,
                           const ObservedFamily& family, const SpectralConfig& cfg) {
  validate(cfg);
  require(!K.empty(), ErrorCode::InvalidArgument, "at least one latent layer is required");
  validate_dataset(data, family);
  SpectralInit out;
  out.model0.K = K;
  out.model0.J = data.cols();
  out.model0.family = family;

  RowMatrix current = data.Y;
  std::vector<FamilyKind> kinds = family.column_kinds(data.cols());
  for (std::size_t d = 0; d < K.size(); ++d) {
    Vector spectrum;
    const Matrix Z = denoise_and_linearize(current, K[d], kinds, cfg, &out.warnings, &spectrum);
    LayerInit layer = init_layer(Z, K[d], kinds, cfg, &out.warnings);
    out.singular_values.push_back(std::move(spectrum));
    if (d == 0 && family.has_dispersion()) {
      out.model0.gamma = Vector::Ones(data.cols());
      for (Index j = 0; j < data.cols(); ++j)
        if (has_dispersion(kinds[static_cast<std::size_t>(j)])) out.model0.gamma[j] = layer.gamma[j];
    }
    out.model0.B.push_back(layer.B);
    current = layer.A.cast<double>();
    require(((current.array() == 0.0) || (current.array() == 1.0)).all(), ErrorCode::Internal,
            "latent estimates must be binary");
    out.A0.layers.push_back(std::move(layer.A));
    kinds.assign(static_cast<std::size_t>(K[d]), FamilyKind::Bernoulli);
  }
  const BinaryMatrix& top = out.A0.layers.back();
  const double N = static_cast<double>(data.rows());
  out.model0.p = top.cast<double>().colwise().mean().transpose();
  const double lo = 0.5 / N;
  out.model0.p = out.model0.p.cwiseMax(lo).cwiseMin(1.0 - lo);
  out.G0 = graphs_from_coefficients(out.model0);
  return out;
}

DimensionSelection select_latent_dims(const Dataset& data, Index D, const ObservedFamily& family,
                                      const SpectralConfig& cfg,
                                      const std::vector<Index>& grid_override) {
  validate(cfg);
  require(D >= 1, ErrorCode::InvalidArgument, "D must be positive");
  validate_dataset(data, family);
  DimensionSelection out;
  RowMatrix current = data.Y;
  std::vector<FamilyKind> kinds = family.column_kinds(data.cols());
  Index prev = data.cols();
  for (Index d = 1; d <= D; ++d) {
    std::vector<Index> grid;
    if (!grid_override.empty()) {
      for (Index k : grid_override)
        if (k >= 1 && k < prev) grid.push_back(k);
    } else {
      for (Index k = (prev + 3) / 4; k <= prev / 2; ++k)
        if (k >= 1) grid.push_back(k);
    }
    Index chosen = 1;
    Vector spectrum;
    Matrix Z;
    if (grid.empty()) {
      out.warnings.push_back("layer " + std::to_string(d) +
                             ": candidate grid is empty; using one latent");
      Z = denoise_and_linearize(current, 1, kinds, cfg, &out.warnings);
    } else {
      double best = -1.0;
      for (Index k : grid) {
        Matrix Zk = denoise_and_linearize(current, k, kinds, cfg, &out.warnings);
        const Matrix Z0 = Zk.rowwise() - Zk.colwise().mean();
        Vector sv = Eigen::BDCSVD<Matrix>(Z0).singularValues();
        if (k >= sv.size()) continue;
        const double tol = sv.size() > 0 ? sv[0] * static_cast<double>(std::max(Z0.rows(), Z0.cols())) *
                                               std::numeric_limits<double>::epsilon()
                                         : 0.0;
        const double here = sv[k - 1] > tol ? sv[k - 1] : 0.0;
        const double next = sv[k] > tol ? sv[k] : 0.0;
        const double ratio = here == 0.0  ? 0.0
                             : next > 0.0 ? here / next - 1.0
                                          : std::numeric_limits<double>::infinity();
        if (ratio > best) {
          best = ratio;
          chosen = k;
          spectrum = std::move(sv);
          Z = std::move(Zk);
        }
      }
      if (best < 0.0) Z = denoise_and_linearize(current, chosen, kinds, cfg, &out.warnings);
    }
    out.K.push_back(chosen);
    out.spectra.push_back(spectrum);
    out.grids.push_back(grid);
    if (d == D) break;
    LayerInit layer = init_layer(Z, chosen, kinds, cfg, &out.warnings);
    current = layer.A.cast<double>();
    kinds.assign(static_cast<std::size_t>(chosen), FamilyKind::Bernoulli);
    prev = chosen;
  }
  return out;
}

}  // namespace dde
