#include "support.hpp"

#include "dde/error.hpp"
#include "dde/spectral.hpp"

#include <doctest.h>

#include <Eigen/QR>

using namespace dde;

namespace {

double criterion_oracle(const Matrix& V) {
  double total = 0.0;
  for (Index k = 0; k < V.cols(); ++k) {
    const Vector sq = V.col(k).array().square();
    const double mean = sq.mean();
    total += (sq.array() - mean).square().mean();
  }
  return total;
}

Matrix random_rotation(Index K, Rng& rng) {
  Matrix G(K, K);
  for (Index i = 0; i < K; ++i)
    for (Index j = 0; j < K; ++j) G(i, j) = rng.normal(0.0, 1.0);
  Eigen::HouseholderQR<Matrix> qr(G);
  Matrix Q = qr.householderQ();
  if (Q.determinant() < 0) Q.col(0) *= -1.0;
  return Q;
}

Matrix rotation2(double t) {
  Matrix R(2, 2);
  R << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  return R;
}

BinaryMatrix random_bits(Index N, Index K, Rng& rng) {
  BinaryMatrix A(N, K);
  for (Index i = 0; i < N; ++i)
    for (Index k = 0; k < K; ++k) A(i, k) = rng.bernoulli(0.5);
  return A;
}

// Fraction of agreeing entries under the best column permutation.
double best_permuted_agreement(const BinaryMatrix& A, const BinaryMatrix& B) {
  std::vector<Index> perm(static_cast<std::size_t>(A.cols()));
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0.0;
  do {
    Index agree = 0;
    for (Index k = 0; k < A.cols(); ++k)
      agree += (A.col(k).cast<int>().array() == B.col(perm[static_cast<std::size_t>(k)]).cast<int>().array()).count();
    best = std::max(best, static_cast<double>(agree) / static_cast<double>(A.size()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

RowMatrix noiseless_normal(const Matrix& B, const BinaryMatrix& A) {
  return linear_predictors(B, A);
}

}  // namespace

TEST_CASE("varimax criterion is the summed variance of squared loadings") {
  Rng rng(1);
  Matrix V(9, 3);
  for (Index i = 0; i < V.size(); ++i) V.data()[i] = rng.normal(0.0, 1.0);
  CHECK(varimax_criterion(V) == doctest::Approx(criterion_oracle(V)).epsilon(1e-12));
}

TEST_CASE("varimax recovers a planted simple structure") {
  Rng rng(7);
  const Index J = 12, K = 3;
  Matrix W = Matrix::Zero(J, K);
  for (Index j = 0; j < J; ++j) W(j, j % K) = 0.5 + rng.uniform();
  const Matrix Q = random_rotation(K, rng);
  const Matrix V = W * Q;
  const VarimaxResult r = varimax(V, 500, 1e-12);
  CHECK(r.criterion >= criterion_oracle(V) - 1e-12);
  CHECK((V * r.rotation - r.rotated).norm() < 1e-10);
  CHECK((r.rotation.transpose() * r.rotation - Matrix::Identity(K, K)).norm() < 1e-10);
  // Signed permutation: every recovered column matches one planted column.
  for (Index k = 0; k < K; ++k) {
    double best = 1e9;
    for (Index c = 0; c < K; ++c)
      for (double sign : {-1.0, 1.0}) best = std::min(best, (sign * r.rotated.col(k) - W.col(c)).norm());
    CHECK(best < 1e-6);
  }
}

TEST_CASE("two-column varimax hits the best rotation angle") {
  Rng rng(3);
  Matrix V(10, 2);
  for (Index i = 0; i < V.size(); ++i) V.data()[i] = rng.normal(0.0, 1.0);
  const auto f = [&](double t) { return criterion_oracle(V * rotation2(t)); };
  double best_t = 0.0, best = -1.0;
  const int steps = 20000;
  for (int s = 0; s < steps; ++s) {
    const double t = 0.5 * M_PI * s / steps;
    if (f(t) > best) best = f(t), best_t = t;
  }
  double lo = best_t - 0.5 * M_PI / steps, hi = best_t + 0.5 * M_PI / steps;
  for (int it = 0; it < 200; ++it) {
    const double a = lo + (hi - lo) / 3, b = hi - (hi - lo) / 3;
    (f(a) < f(b) ? lo : hi) = (f(a) < f(b) ? a : b);
  }
  best = f(0.5 * (lo + hi));
  const VarimaxResult r = varimax(V, 1000, 1e-14);
  CHECK(r.criterion == doctest::Approx(best).epsilon(1e-8));
}

TEST_CASE("zero Bernoulli cells are clamped before the logit") {
  RowMatrix Y = RowMatrix::Zero(40, 6);
  const std::vector<FamilyKind> kinds(6, FamilyKind::Bernoulli);
  const Matrix Z = denoise_and_linearize(Y, 2, kinds, SpectralConfig{});
  CHECK(Z.maxCoeff() == doctest::Approx(std::log(1e-4 / (1 - 1e-4))).epsilon(1e-12));
  CHECK(Z.minCoeff() == doctest::Approx(-9.2102).epsilon(1e-4));
}

TEST_CASE("noiseless Normal input linearises to its own mean") {
  Rng rng(5);
  const DdeModel m = make_benchmark_params(BenchmarkKind::Strict, 18, {6},
                                           ObservedFamily::uniform(FamilyKind::Normal));
  const BinaryMatrix A = random_bits(300, 6, rng);
  const RowMatrix Y = noiseless_normal(m.B[0], A);
  const Matrix Z = denoise_and_linearize(Y, 6, std::vector<FamilyKind>(18, FamilyKind::Normal), {});
  CHECK((Z - Matrix(Y)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("spectral init recovers planted latents from noiseless data") {
  Rng rng(9);
  const auto family = ObservedFamily::uniform(FamilyKind::Normal);
  const DdeModel m = make_benchmark_params(BenchmarkKind::Strict, 18, {6}, family);
  const BinaryMatrix A = random_bits(500, 6, rng);
  const Dataset data{noiseless_normal(m.B[0], A)};
  const SpectralInit init = spectral_init(data, {6}, family);
  CHECK(best_permuted_agreement(A, init.A0.layers[0]) >= 0.99);
  CHECK(init.model0.B[0].rows() == 18);
  CHECK(init.model0.gamma.size() == 18);
}

TEST_CASE("spectral init shapes and determinism on sampled data") {
  const auto family = ObservedFamily::uniform(FamilyKind::Bernoulli);
  const DdeModel m = make_benchmark_params(BenchmarkKind::Strict, 18, {6, 2}, family);
  const Sample s = sample(m, 1000, 21);
  const SpectralInit a = spectral_init(s.data, {6, 2}, family);
  const SpectralInit b = spectral_init(s.data, {6, 2}, family);
  REQUIRE(a.A0.depth() == 2);
  CHECK(a.A0.layers[0].rows() == 1000);
  CHECK(a.A0.layers[1].cols() == 2);
  CHECK(a.model0.B[1].rows() == 6);
  CHECK(a.model0.B[1].cols() == 3);
  CHECK(a.model0.gamma.size() == 0);
  CHECK(a.singular_values.size() == 2);
  CHECK(a.model0.B[0] == b.model0.B[0]);
  CHECK(a.A0.layers[1] == b.A0.layers[1]);
  validate(a.model0);
}

TEST_CASE("spectral init rejects inconsistent requests") {
  const auto family = ObservedFamily::uniform(FamilyKind::Poisson);
  const DdeModel m = make_benchmark_params(BenchmarkKind::Strict, 18, {6, 2}, family);
  const Sample s = sample(m, 200, 1);
  CHECK_THROWS_AS(spectral_init(s.data, {}, family), Error);
  CHECK_THROWS_AS(spectral_init(s.data, {0, 2}, family), Error);
  Dataset bad = s.data;
  bad.Y(0, 0) = -1.0;
  CHECK_THROWS_AS(spectral_init(bad, {6, 2}, family), Error);
}

TEST_CASE("spectral ratio finds the rank of noiseless data") {
  Rng rng(2);
  const auto family = ObservedFamily::uniform(FamilyKind::Normal);
  const DdeModel m = make_benchmark_params(BenchmarkKind::Strict, 18, {6}, family);
  const Dataset data{noiseless_normal(m.B[0], random_bits(400, 6, rng))};
  const DimensionSelection sel = select_latent_dims(data, 1, family);
  CHECK(sel.grids[0] == std::vector<Index>{5, 6, 7, 8, 9});
  CHECK(sel.K[0] == 6);
}

TEST_CASE("spectral ratio on sampled two-layer data") {
  const auto family = ObservedFamily::uniform(FamilyKind::Normal);
  const DdeModel m = make_benchmark_params(BenchmarkKind::Strict, 18, {6, 2}, family);
  const Sample s = sample(m, 4000, 8);
  const DimensionSelection sel = select_latent_dims(s.data, 2, family);
  CHECK(sel.K == std::vector<Index>{6, 2});
  CHECK(sel.spectra.size() == 2);
  const DimensionSelection fixed = select_latent_dims(s.data, 1, family, {}, {4, 6});
  CHECK(fixed.grids[0] == std::vector<Index>{4, 6});
}
