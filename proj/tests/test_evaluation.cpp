#include "support.hpp"

#include "dde/error.hpp"
#include "dde/evaluation.hpp"

#include <doctest.h>

using namespace dde;

namespace {

double brute_force_min(const Matrix& cost, std::vector<Index>* arg = nullptr) {
  std::vector<Index> perm(static_cast<std::size_t>(cost.rows()));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (std::size_t r = 0; r < perm.size(); ++r) c += cost(static_cast<Index>(r), perm[r]);
    if (c < best) {
      best = c;
      if (arg) *arg = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Builds an estimate whose alignment to `truth` is exactly `planted`.
DdeModel scramble(const DdeModel& truth, const Alignment& planted) {
  DdeModel hat = truth;
  for (std::size_t d = 0; d < truth.B.size(); ++d) {
    const Matrix& B = truth.B[d];
    for (Index r = 0; r < B.rows(); ++r) {
      const Index src = d == 0 ? r : planted.perms[d - 1][static_cast<std::size_t>(r)];
      hat.B[d](src, 0) = B(r, 0);
      for (Index k = 0; k + 1 < B.cols(); ++k) hat.B[d](src, planted.perms[d][static_cast<std::size_t>(k)] + 1) = B(r, k + 1);
    }
  }
  for (Index k = 0; k < truth.p.size(); ++k) hat.p[planted.perms.back()[static_cast<std::size_t>(k)]] = truth.p[k];
  return hat;
}

std::vector<Index> shuffled(Index n, Rng& rng) {
  std::vector<Index> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), 0);
  std::shuffle(v.begin(), v.end(), rng.engine());
  return v;
}

}  // namespace

TEST_CASE("hungarian matches brute force on random costs") {
  Rng rng(31);
  for (int t = 0; t < 40; ++t) {
    Matrix C(6, 6);
    for (Index i = 0; i < C.size(); ++i) C.data()[i] = std::floor(10.0 * rng.uniform());
    std::vector<Index> first;
    const double best = brute_force_min(C, &first);
    const std::vector<Index> perm = hungarian(C);
    CHECK(assignment_cost(C, perm) == doctest::Approx(best).epsilon(1e-12));
    CHECK(perm == first);
  }
  CHECK(hungarian(Matrix::Zero(4, 4)) == std::vector<Index>{0, 1, 2, 3});
  CHECK_THROWS_AS(hungarian(Matrix::Zero(2, 3)), Error);
}

TEST_CASE("align recovers planted latent permutations") {
  Rng rng(12);
  const DdeModel truth = make_benchmark_params(BenchmarkKind::Strict, 18, {6, 2},
                                               ObservedFamily::uniform(FamilyKind::Normal));
  for (int t = 0; t < 10; ++t) {
    const Alignment planted{{shuffled(6, rng), shuffled(2, rng)}};
    const DdeModel hat = scramble(truth, planted);
    const Alignment a = align(hat, truth);
    CHECK(a.perms == planted.perms);
    CHECK(rmse_theta(hat, truth, a) == doctest::Approx(0.0));
    const std::vector<double> acc = accuracy_G(graphs_from_coefficients(hat), graphs_from_coefficients(truth), a);
    CHECK(acc == std::vector<double>{1.0, 1.0});
  }
}

TEST_CASE("layer-one alignment minimises the squared coefficient distance") {
  Rng rng(8);
  const DdeModel truth = make_benchmark_params(BenchmarkKind::Generic, 18, {6},
                                               ObservedFamily::uniform(FamilyKind::Bernoulli));
  for (int t = 0; t < 10; ++t) {
    DdeModel hat = truth;
    for (Index i = 0; i < hat.B[0].size(); ++i) hat.B[0].data()[i] += rng.normal(0.0, 1.5);
    Matrix cost(6, 6);
    for (Index a = 0; a < 6; ++a)
      for (Index b = 0; b < 6; ++b) cost(a, b) = (truth.B[0].col(a + 1) - hat.B[0].col(b + 1)).squaredNorm();
    const Alignment al = align(hat, truth);
    CHECK(assignment_cost(cost, al.perms[0]) == doctest::Approx(brute_force_min(cost)).epsilon(1e-12));
  }
}

TEST_CASE("accuracy and rmse by hand") {
  const DdeModel truth = make_benchmark_params(BenchmarkKind::Strict, 6, {2},
                                               ObservedFamily::uniform(FamilyKind::Normal));
  DdeModel hat = truth;
  hat.B[0](0, 1) = 0.0;  // one edge lost
  hat.B[0](1, 0) += 1.0;
  hat.gamma[2] = 3.0;
  const Alignment id{{{0, 1}}};
  const auto acc = accuracy_G(graphs_from_coefficients(hat), graphs_from_coefficients(truth), id);
  CHECK(acc[0] == doctest::Approx(11.0 / 12.0));
  // 2 proportions + 18 coefficients + 6 dispersions.
  const double expected = std::sqrt((16.0 + 1.0 + 4.0) / 26.0);
  CHECK(rmse_theta(hat, truth, id) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(parameter_count(truth) == 26);
  CHECK(nonzero_parameter_count(hat) == nonzero_parameter_count(truth) - 1);
}

TEST_CASE("ebic adds the size and combinatorial penalties") {
  const DdeModel m = make_benchmark_params(BenchmarkKind::Strict, 6, {2},
                                           ObservedFamily::uniform(FamilyKind::Poisson));
  const Sample s = sample(m, 500, 4);
  const EbicResult r = ebic(m, s.data);
  const double n = static_cast<double>(r.total), k = static_cast<double>(r.df);
  const double log_binom = std::log(std::tgamma(n + 1) / (std::tgamma(k + 1) * std::tgamma(n - k + 1)));
  CHECK(r.total == 20);
  CHECK(r.df == 2 + 6 + 8);
  CHECK(r.loglik == doctest::Approx(loglik(m, s.data)));
  CHECK(r.ebic == doctest::Approx(-2 * r.loglik + k * std::log(500.0) + 2 * log_binom).epsilon(1e-12));
}

TEST_CASE("sequential likelihood-ratio selection") {
  const std::vector<LrtCandidate> c{{{2}, -1000.0, 10}, {{3}, -950.0, 15}, {{4}, -948.0, 20}, {{5}, -900.0, 25}};
  const LrtResult r = lrt_select(c, 0.01);
  CHECK(r.chosen == 1);
  REQUIRE(r.steps.size() == 2);
  CHECK(r.steps[0].rejected);
  CHECK(r.steps[0].statistic == doctest::Approx(100.0));
  CHECK(r.steps[0].critical == doctest::Approx(dde::testing::chi2_critical(5, 0.01)));
  CHECK(!r.steps[1].rejected);

  const std::vector<LrtCandidate> flat{{{2}, -10.0, 5}, {{3}, -2.0, 5}};
  const LrtResult f = lrt_select(flat, 0.01);
  CHECK(f.steps[0].df == 1);
  CHECK(f.chosen == 1);
  CHECK_THROWS_AS(lrt_select(std::vector<LrtCandidate>{}, 0.01), Error);
}

TEST_CASE("posterior mode of a one-latent model") {
  DdeModel m;
  m.K = {1};
  m.J = 2;
  m.family = ObservedFamily::uniform(FamilyKind::Bernoulli);
  m.p = Vector::Constant(1, 0.4);
  Matrix B(2, 2);
  B << -1.0, 2.0, 0.5, -1.5;
  m.B = {B};
  validate(m);
  const auto sig = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  Dataset data{RowMatrix(4, 2)};
  data.Y << 0, 0, 0, 1, 1, 0, 1, 1;
  const PosteriorLatents post = posterior_latents(m, data);
  CHECK(!post.approximate);
  for (Index i = 0; i < 4; ++i) {
    double odds = 0.4 / 0.6;
    for (Index j = 0; j < 2; ++j) {
      const double q1 = sig(B(j, 0) + B(j, 1)), q0 = sig(B(j, 0));
      odds *= data.Y(i, j) > 0.5 ? q1 / q0 : (1 - q1) / (1 - q0);
    }
    CHECK(post.A.layers[0](i, 0) == (odds > 1.0 ? 1 : 0));
  }
}

TEST_CASE("posterior latents recover the benchmark truth") {
  const DdeModel m = make_benchmark_params(BenchmarkKind::Strict, 18, {6, 2},
                                           ObservedFamily::uniform(FamilyKind::Normal));
  const Sample s = sample(m, 2000, 6);
  const PosteriorLatents post = posterior_latents(m, s.data);
  const BinaryMatrix& A = post.A.layers[0];
  CHECK((A.array() == s.latents.layers[0].array()).cast<double>().mean() >= 0.95);
  CHECK(post.A.layers[1].cols() == 2);

  const PosteriorLatents gibbs = posterior_latents(m, s.data, 4, 60, 3);
  CHECK(gibbs.approximate);
  CHECK((gibbs.A.layers[0].array() == A.array()).cast<double>().mean() >= 0.95);
}

TEST_CASE("reconstruction of sharply separated Bernoulli data") {
  DdeModel m = make_benchmark_params(BenchmarkKind::Strict, 18, {6},
                                     ObservedFamily::uniform(FamilyKind::Bernoulli));
  for (Index r = 0; r < 18; ++r) {
    m.B[0](r, 0) = -5.0;
    for (Index k = 1; k <= 6; ++k)
      if (m.B[0](r, k) != 0.0) m.B[0](r, k) = 10.0;
  }
  const Sample s = sample(m, 1000, 2);
  const Matrix Yhat = reconstruct(m, posterior_latents(m, s.data).A);
  Index agree = 0;
  for (Index i = 0; i < Yhat.rows(); ++i)
    for (Index j = 0; j < Yhat.cols(); ++j) agree += (Yhat(i, j) > 0.5) == (s.data.Y(i, j) > 0.5);
  CHECK(static_cast<double>(agree) / static_cast<double>(Yhat.size()) >= 0.99);
  CHECK(Yhat.minCoeff() > 0.0);
  CHECK(Yhat.maxCoeff() < 1.0);
}

TEST_CASE("perplexity by hand") {
  DdeModel m;
  m.K = {1};
  m.J = 3;
  m.family = ObservedFamily::uniform(FamilyKind::Poisson);
  m.p = Vector::Constant(1, 0.5);
  Matrix B(3, 2);
  B << 0.0, 1.0, 1.0, 0.0, 0.5, -0.5;
  m.B = {B};
  validate(m);
  Dataset data{RowMatrix(2, 3)};
  data.Y << 2, 0, 1, 0, 3, 1;
  LatentAssignment A;
  A.layers.emplace_back(BinaryMatrix(2, 1));
  A.layers[0] << 1, 0;
  const auto logshare = [](double a, double b, double c, double x) { return x - std::log(std::exp(a) + std::exp(b) + std::exp(c)); };
  const double num = 2 * logshare(1, 1, 0, 1) + 1 * logshare(1, 1, 0, 0) + 3 * logshare(0, 1, 0.5, 1) + 1 * logshare(0, 1, 0.5, 0.5);
  CHECK(perplexity(m, data, A) == doctest::Approx(std::exp(-num / 7.0)).epsilon(1e-12));

  const DdeModel normal = make_benchmark_params(BenchmarkKind::Strict, 6, {2}, ObservedFamily::uniform(FamilyKind::Normal));
  CHECK_THROWS_AS(perplexity(normal, Dataset{RowMatrix::Zero(1, 6)}, LatentAssignment{{BinaryMatrix::Zero(1, 2)}}), Error);
}

TEST_CASE("held-out perplexity is no better than training perplexity") {
  const DdeModel m = make_benchmark_params(BenchmarkKind::Strict, 18, {6, 2},
                                           ObservedFamily::uniform(FamilyKind::Poisson));
  const Sample s = sample(m, 1000, 5);
  const HeldoutPerplexity h = heldout_perplexity(m, s.data, 0.8, 3);
  CHECK(h.train > 1.0);
  CHECK(h.train <= h.test);
  const HeldoutPerplexity again = heldout_perplexity(m, s.data, 0.8, 3);
  CHECK(again.test == h.test);
}

TEST_CASE("topic metrics on a three-word vocabulary") {
  Matrix B1(3, 3);
  B1 << 0, 3, 1, 0, 1, 2, 0, 2, 0.5;
  Matrix F(3, 3);
  F << 10, 2, 3, 2, 5, 1, 3, 1, 4;
  const TopicMetrics t = topic_metrics(B1, F, 15);
  REQUIRE(t.representatives.size() == 2);
  CHECK(t.representatives[0] == std::vector<Index>{0, 2});
  CHECK(t.representatives[1] == std::vector<Index>{1});
  CHECK(t.similarity == 0);
  CHECK(t.neg_coherence == doctest::Approx(-std::log(4.0 / 10.0) / 2.0).epsilon(1e-12));
  CHECK(t.warnings.empty());

  const TopicMetrics top1 = topic_metrics(B1, F, 1);
  CHECK(top1.representatives[0] == std::vector<Index>{0});
  CHECK(top1.neg_coherence == 0.0);

  Matrix single(3, 2);
  single << 0, 1, 0, 2, 0, -1;
  const Matrix S = topic_scores(single);
  CHECK(S(1, 0) == 2.0);
  CHECK(S(2, 0) == 0.0);
}
