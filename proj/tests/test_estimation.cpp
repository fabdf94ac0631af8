#include "support.hpp"

#include "dde/enumeration.hpp"
#include "dde/error.hpp"
#include "dde/estimation.hpp"
#include "dde/parallel.hpp"

#include <doctest.h>

#include <set>
#include <tuple>

using namespace dde;
using dde::testing::chi2_critical;

namespace {

SpectralInit start_at(const DdeModel& model, const LatentAssignment& A) {
  SpectralInit init;
  init.model0 = model;
  init.A0 = A;
  init.G0 = graphs_from_coefficients(model);
  return init;
}

DdeModel one_latent_bernoulli(Index J, double p, Rng& rng) {
  DdeModel m;
  m.K = {1};
  m.J = J;
  m.family = ObservedFamily::uniform(FamilyKind::Bernoulli);
  m.p = Vector::Constant(1, p);
  Matrix B(J, 2);
  for (Index j = 0; j < J; ++j) {
    B(j, 0) = -1.0 - rng.uniform();
    B(j, 1) = 1.0 + 2.0 * rng.uniform();
  }
  m.B = {B};
  validate(m);
  return m;
}

// Plain two-class Bernoulli mixture EM, written independently of the library.
std::vector<double> mixture_em_trace(const RowMatrix& Y, double pi, Vector theta0, Vector theta1, int iters) {
  const Index N = Y.rows(), J = Y.cols();
  std::vector<double> trace;
  for (int t = 0; t <= iters; ++t) {
    Vector r(N);
    double ll = 0.0;
    for (Index i = 0; i < N; ++i) {
      double l0 = std::log(1 - pi), l1 = std::log(pi);
      for (Index j = 0; j < J; ++j) {
        l0 += Y(i, j) > 0.5 ? std::log(theta0[j]) : std::log1p(-theta0[j]);
        l1 += Y(i, j) > 0.5 ? std::log(theta1[j]) : std::log1p(-theta1[j]);
      }
      const double top = std::max(l0, l1);
      const double lse = top + std::log(std::exp(l0 - top) + std::exp(l1 - top));
      ll += lse;
      r[i] = std::exp(l1 - lse);
    }
    trace.push_back(ll);
    pi = r.mean();
    for (Index j = 0; j < J; ++j) {
      double a1 = 0, b1 = 0, a0 = 0, b0 = 0;
      for (Index i = 0; i < N; ++i) {
        a1 += r[i] * Y(i, j);
        b1 += r[i];
        a0 += (1 - r[i]) * Y(i, j);
        b0 += 1 - r[i];
      }
      theta1[j] = a1 / b1;
      theta0[j] = a0 / b0;
    }
  }
  return trace;
}

RowObjective gaussian_objective(const Matrix& X, const Vector& y, Matrix& gram) {
  gram = X.transpose() * X;
  RowObjective obj;
  obj.kind = FamilyKind::Normal;
  obj.gram = &gram;
  obj.xs1 = X.transpose() * y;
  obj.s2 = y.squaredNorm();
  obj.W = static_cast<double>(X.rows());
  return obj;
}

}  // namespace

TEST_CASE("penalty values") {
  const Penalty tlp{PenaltyKind::TLP, 2.0, 0.5};
  CHECK(penalty_value(tlp, 0.0) == 0.0);
  CHECK(penalty_value(tlp, 0.9) == doctest::Approx(1.0));
  CHECK(penalty_value(tlp, -0.2) == doctest::Approx(0.4));
  CHECK(penalty_value(tlp, -3.0) == doctest::Approx(1.0));
  const Penalty hard{PenaltyKind::HardThreshold, 0.0, 0.6};
  CHECK(penalty_value(hard, 0.0) == 0.0);
  CHECK(penalty_value(hard, -0.01) == doctest::Approx(0.18));
  CHECK(penalty_value(Penalty{}, 5.0) == 0.0);
  CHECK(parse_penalty_kind("tlp") == PenaltyKind::TLP);
  CHECK_THROWS_AS(parse_penalty_kind("lasso"), Error);
}

TEST_CASE("default tuning and selection grid") {
  const Penalty p = default_tuning(10000);
  CHECK(p.kind == PenaltyKind::TLP);
  CHECK(p.lambda == doctest::Approx(10.0));
  CHECK(p.tau == doctest::Approx(0.3));
  const Penalty one = default_tuning(1);
  CHECK(one.lambda == doctest::Approx(1.0));
  CHECK(one.tau == doctest::Approx(3.0));
  CHECK(default_tuning(2000).tau == doctest::Approx(3.0 * std::pow(2000.0, -0.3)));

  const Index N = 4096;
  const auto grid = tuning_grid(N, 2);
  CHECK(grid.size() == 27);
  std::set<std::tuple<double, double, double>> seen;
  for (const auto& entry : grid) {
    REQUIRE(entry.size() == 2);
    CHECK(entry[0].tau == entry[1].tau);
    seen.emplace(entry[0].lambda, entry[1].lambda, entry[0].tau);
  }
  CHECK(seen.size() == 27);
  const double n = static_cast<double>(N);
  for (double l : {std::pow(n, 0.125), std::pow(n, 0.25), std::pow(n, 0.375)})
    CHECK(seen.count({l, l, 2.0 * std::pow(n, -0.25)}) == 1);
}

TEST_CASE("fit configuration validation") {
  FitConfig cfg;
  validate(cfg);
  cfg.gibbs_C = 0;
  CHECK_THROWS_AS(validate(cfg), Error);
  cfg = FitConfig{};
  cfg.step_exponent = 0.4;
  CHECK_THROWS_AS(validate(cfg), Error);
  cfg = FitConfig{};
  cfg.penalties = {Penalty{PenaltyKind::TLP, 1.0, 0.0}};
  CHECK_THROWS_AS(validate(cfg), Error);
  CHECK(resolved_penalties(FitConfig{}, 4000, 3).size() == 3);
}

TEST_CASE("Gaussian row without penalty is least squares") {
  Rng rng(2);
  Matrix X(50, 3);
  Vector y(50);
  for (Index i = 0; i < 50; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = rng.bernoulli(0.5);
    X(i, 2) = rng.bernoulli(0.4);
    y[i] = 0.3 + 1.2 * X(i, 1) - 0.7 * X(i, 2) + rng.normal(0.0, 0.5);
  }
  Matrix gram;
  const RowObjective obj = gaussian_objective(X, y, gram);
  const Vector ols = X.colPivHouseholderQr().solve(y);
  const RowSolution sol = mstep_row(obj, Penalty{}, Vector::Zero(3), 1.0);
  CHECK((sol.beta - ols).norm() < 1e-8);
  const double rss = (y - X * ols).squaredNorm();
  CHECK(sol.gamma == doctest::Approx(std::sqrt(rss / 50.0)).epsilon(1e-8));
}

TEST_CASE("Gaussian row with hard threshold zeroes small least-squares slopes") {
  Rng rng(6);
  Matrix X(80, 4);
  Vector y(80);
  for (Index i = 0; i < 80; ++i) {
    X(i, 0) = 1.0;
    for (Index k = 1; k < 4; ++k) X(i, k) = rng.bernoulli(0.5);
    y[i] = -0.5 + 2.0 * X(i, 1) + 0.05 * X(i, 2) + 0.9 * X(i, 3) + rng.normal(0.0, 0.3);
  }
  Matrix gram;
  const RowObjective obj = gaussian_objective(X, y, gram);
  const Vector ols = X.colPivHouseholderQr().solve(y);
  const double tau = 0.3;
  Vector expected = ols;
  for (Index k = 1; k < 4; ++k)
    if (std::abs(expected[k]) <= tau) expected[k] = 0.0;
  const RowSolution sol = mstep_row(obj, Penalty{PenaltyKind::HardThreshold, 0.0, tau}, Vector::Zero(4), 1.0);
  CHECK(sol.beta[2] == 0.0);
  CHECK((sol.beta - expected).norm() < 1e-10);
  const double rss = (y - X * expected).squaredNorm();
  CHECK(sol.gamma == doctest::Approx(std::sqrt(rss / 80.0)).epsilon(1e-10));
}

TEST_CASE("separable Bernoulli row stops at the box bound") {
  Matrix X(2, 2);
  X << 1, 0, 1, 1;
  RowObjective obj;
  obj.kind = FamilyKind::Bernoulli;
  obj.X = &X;
  obj.w = Vector::Constant(2, 10.0);
  obj.s1 = Vector(2);
  obj.s1 << 0.0, 10.0;
  MStepOptions opts;
  opts.box_bound = 15.0;
  const RowSolution sol = mstep_row(obj, Penalty{}, Vector::Zero(2), 1.0, opts);
  // Slope pinned at the bound; the intercept then balances both cells at -15/2.
  CHECK(sol.beta[1] == doctest::Approx(15.0));
  CHECK(sol.beta[0] == doctest::Approx(-7.5).epsilon(1e-6));
  CHECK(std::isfinite(sol.objective));
}

TEST_CASE("row maximisation never falls below the warm start") {
  Rng rng(8);
  Matrix X(8, 4);
  for (Index c = 0; c < 8; ++c) {
    X(c, 0) = 1.0;
    for (Index k = 0; k < 3; ++k) X(c, k + 1) = config_bit(static_cast<Config>(c), k);
  }
  for (int t = 0; t < 20; ++t) {
    RowObjective obj;
    obj.kind = t % 2 ? FamilyKind::Poisson : FamilyKind::Bernoulli;
    obj.X = &X;
    obj.w = Vector(8);
    obj.s1 = Vector(8);
    for (Index c = 0; c < 8; ++c) {
      obj.w[c] = 5.0 + 20.0 * rng.uniform();
      obj.s1[c] = obj.w[c] * (t % 2 ? 3.0 * rng.uniform() : rng.uniform());
    }
    const Penalty pen{PenaltyKind::TLP, 1.0 + rng.uniform(), 0.3 + rng.uniform()};
    Vector warm(4);
    for (Index k = 0; k < 4; ++k) warm[k] = rng.normal(0.0, 1.0);
    double warm_value = row_q(obj, warm, 1.0);
    for (Index k = 1; k < 4; ++k) warm_value -= penalty_value(pen, warm[k]);
    const RowSolution sol = mstep_row(obj, pen, warm, 1.0);
    CHECK(sol.objective >= warm_value - 1e-9);
  }
}

TEST_CASE("unpenalised EM on one latent matches textbook mixture EM") {
  Rng rng(31);
  const DdeModel truth = one_latent_bernoulli(6, 0.4, rng);
  const Sample s = sample(truth, 2000, 4);

  DdeModel start = truth;
  start.p[0] = 0.55;
  for (Index j = 0; j < 6; ++j) {
    start.B[0](j, 0) = -0.4 - 0.1 * static_cast<double>(j);
    start.B[0](j, 1) = 0.8 + 0.1 * static_cast<double>(j);
  }
  FitConfig cfg;
  cfg.algo = Algorithm::PEM;
  cfg.penalties = {Penalty{}};
  cfg.accelerate = false;
  cfg.max_iter = 15;
  cfg.conv_pem = 1e-12;
  const FitReport rep = fit(s.data, cfg, start_at(start, s.latents));

  Vector t0(6), t1(6);
  for (Index j = 0; j < 6; ++j) {
    t0[j] = sigmoid(start.B[0](j, 0));
    t1[j] = sigmoid(start.B[0](j, 0) + start.B[0](j, 1));
  }
  const auto oracle = mixture_em_trace(s.data.Y, 0.55, t0, t1, 15);
  REQUIRE(rep.objective_trace.size() >= 10);
  for (std::size_t t = 0; t < rep.objective_trace.size(); ++t)
    CHECK(rep.objective_trace[t] == doctest::Approx(oracle[t]).epsilon(1e-9));
}

TEST_CASE("zero iterations return the starting point") {
  Rng rng(1);
  const DdeModel truth = one_latent_bernoulli(5, 0.5, rng);
  const Sample s = sample(truth, 200, 1);
  for (Algorithm algo : {Algorithm::PEM, Algorithm::SAEM}) {
    FitConfig cfg;
    cfg.algo = algo;
    cfg.max_iter = 0;
    const FitReport rep = fit(s.data, cfg, start_at(truth, s.latents));
    CHECK(rep.iters == 0);
    CHECK(rep.model_hat.B[0] == truth.B[0]);
    CHECK(rep.model_hat.p == truth.p);
  }
}

TEST_CASE("penalized EM objective never decreases") {
  const auto family = ObservedFamily::uniform(FamilyKind::Bernoulli);
  const DdeModel truth = make_benchmark_params(BenchmarkKind::Strict, 18, {6, 2}, family);
  for (bool accelerate : {false, true}) {
    const Sample s = sample(truth, 800, accelerate ? 3 : 4);
    FitConfig cfg;
    cfg.algo = Algorithm::PEM;
    cfg.accelerate = accelerate;
    cfg.max_iter = 12;
    cfg.conv_pem = 1e-9;
    const FitReport rep = fit(s.data, cfg, spectral_init(s.data, {6, 2}, family));
    for (std::size_t t = 1; t < rep.objective_trace.size(); ++t)
      CHECK(rep.objective_trace[t] >= rep.objective_trace[t - 1] - 1e-8 * std::abs(rep.objective_trace[t - 1]));
  }
}

TEST_CASE("Gibbs step on one latent draws from the exact posterior") {
  Rng rng(12);
  const DdeModel m = one_latent_bernoulli(4, 0.35, rng);
  const Index N = 100000;
  Eigen::RowVectorXd y(4);
  y << 1, 0, 1, 1;
  Dataset data{RowMatrix(N, 4)};
  for (Index i = 0; i < N; ++i) data.Y.row(i) = y;
  LatentAssignment A;
  A.layers = {BinaryMatrix::Zero(N, 1)};
  const LatentAssignment next = gibbs_sweep(data, m, A, 77);
  const double freq = next.layers[0].cast<double>().mean();

  double l0 = std::log(0.65), l1 = std::log(0.35);
  for (Index j = 0; j < 4; ++j) {
    const double e0 = m.B[0](j, 0), e1 = e0 + m.B[0](j, 1);
    l0 += y[j] > 0.5 ? log_sigmoid(e0) : log_sigmoid(-e0);
    l1 += y[j] > 0.5 ? log_sigmoid(e1) : log_sigmoid(-e1);
  }
  const double exact = 1.0 / (1.0 + std::exp(l0 - l1));
  CHECK(std::abs(freq - exact) < 1e-2);
}

TEST_CASE("Gibbs chain on a two-bit deep model reaches the enumerated joint") {
  DdeModel m;
  m.K = {1, 1};
  m.J = 3;
  m.family = ObservedFamily::uniform(FamilyKind::Normal);
  m.p = Vector::Constant(1, 0.6);
  Matrix B1(3, 2), B2(1, 2);
  B1 << -0.5, 1.5, 0.2, 1.0, 0.0, 0.8;
  B2 << -1.0, 2.0;
  m.B = {B1, B2};
  m.gamma = Vector::Constant(3, 1.0);
  validate(m);

  Eigen::RowVectorXd y(3);
  y << 0.7, 0.9, 0.1;
  const ChainTables tables(m);
  const Vector logpost = joint_log_posterior(tables, y);
  std::vector<double> probs(4);
  for (Index c = 0; c < 4; ++c) probs[static_cast<std::size_t>(c)] = std::exp(logpost[c]);

  const Index N = 20000;
  Dataset data{RowMatrix(N, 3)};
  for (Index i = 0; i < N; ++i) data.Y.row(i) = y;
  LatentAssignment A;
  A.layers = {BinaryMatrix::Zero(N, 1), BinaryMatrix::Zero(N, 1)};
  for (int t = 0; t < 40; ++t) A = gibbs_sweep(data, m, A, 1000 + static_cast<std::uint64_t>(t));
  std::vector<double> counts(4, 0.0);
  for (Index i = 0; i < N; ++i) counts[static_cast<std::size_t>(A.layers[0](i, 0) + 2 * A.layers[1](i, 0))] += 1;
  const auto chi = dde::testing::pearson(counts, probs, static_cast<double>(N));
  CHECK(chi.statistic < chi2_critical(chi.df, 0.01));
}

TEST_CASE("Gibbs with zero slopes samples the top-layer prior") {
  DdeModel m = make_benchmark_params(BenchmarkKind::Strict, 6, {2},
                                     ObservedFamily::uniform(FamilyKind::Bernoulli));
  m.B[0].rightCols(2).setZero();
  m.p << 0.3, 0.8;
  const Index N = 10000;
  const Sample s = sample(m, N, 2);
  LatentAssignment A;
  A.layers = {BinaryMatrix::Zero(N, 2)};
  A = gibbs_sweep(s.data, m, A, 5);
  for (Index k = 0; k < 2; ++k) {
    const double pk = m.p[k];
    CHECK(std::abs(A.layers[0].col(k).cast<double>().mean() - pk) < 3.0 * std::sqrt(pk * (1 - pk) / N));
  }
}

TEST_CASE("SAEM with exact averaging reproduces the EM update") {
  Rng rng(41);
  const DdeModel m = dde::testing::random_bernoulli_model(6, {2, 1}, rng);
  const Sample s = sample(m, 3000, 6);

  FitConfig em;
  em.algo = Algorithm::PEM;
  em.penalties = {Penalty{}};
  em.accelerate = false;
  em.max_iter = 1;
  em.conv_pem = 1e-12;
  const FitReport a = fit(s.data, em, start_at(m, s.latents));

  FitConfig sa;
  sa.algo = Algorithm::SAEM;
  sa.penalties = {Penalty{}};
  sa.max_iter = 1;
  sa.burn_in = 1;
  sa.gibbs_C = 200;
  sa.seed = 3;
  const FitReport b = fit(s.data, sa, start_at(m, s.latents));
  for (std::size_t d = 0; d < 2; ++d) CHECK((a.model_hat.B[d] - b.model_hat.B[d]).cwiseAbs().maxCoeff() < 0.08);
  CHECK(std::abs(a.model_hat.p[0] - b.model_hat.p[0]) < 0.02);
}

TEST_CASE("SAEM is reproducible and independent of the worker count") {
  const auto family = ObservedFamily::uniform(FamilyKind::Normal);
  const DdeModel truth = make_benchmark_params(BenchmarkKind::Strict, 18, {6, 2}, family);
  const Sample s = sample(truth, 600, 12);
  const SpectralInit init = spectral_init(s.data, {6, 2}, family);
  FitConfig cfg;
  cfg.seed = 5;
  FitReport a, b;
  {
    ThreadLimit one(1);
    a = fit(s.data, cfg, init);
  }
  {
    ThreadLimit three(3);
    b = fit(s.data, cfg, init);
  }
  CHECK(a.iters == b.iters);
  CHECK(a.model_hat.B[0] == b.model_hat.B[0]);
  CHECK(a.model_hat.B[1] == b.model_hat.B[1]);
  CHECK(a.latents.layers[1] == b.latents.layers[1]);
  CHECK(a.objective_trace.empty() == false);
  validate(a.model_hat);
}

TEST_CASE("random initialisation ranges") {
  const auto family = ObservedFamily::uniform(FamilyKind::Normal);
  const DdeModel truth = make_benchmark_params(BenchmarkKind::Strict, 18, {6, 2}, family);
  const Sample s = sample(truth, 100, 1);
  const SpectralInit r = random_init(s.data, {6, 2}, family, 9);
  for (const Matrix& B : r.model0.B) {
    CHECK(B.col(0).maxCoeff() <= 0.0);
    CHECK(B.col(0).minCoeff() >= -1.0);
    CHECK(B.rightCols(B.cols() - 1).minCoeff() >= 0.0);
    CHECK(B.rightCols(B.cols() - 1).maxCoeff() <= 1.0);
  }
  CHECK(r.model0.gamma.minCoeff() >= 0.5);
  CHECK(r.model0.gamma.maxCoeff() <= 1.5);
  CHECK(r.A0.layers[0].rows() == 100);
}

TEST_CASE("design statistics blend and merge") {
  DesignStats a(2, {FamilyKind::Bernoulli, FamilyKind::Bernoulli});
  DesignStats b(2, {FamilyKind::Bernoulli, FamilyKind::Bernoulli});
  const double y1[2] = {1, 0}, y2[2] = {1, 1};
  a.add(0b01, 1.0, y1);
  b.add(0b01, 3.0, y2);
  b.add(0b10, 2.0, y1);
  DesignStats c = a;
  c.blend(b, 1.0);
  CHECK(c.total_weight() == doctest::Approx(5.0));
  a.merge(b);
  CHECK(a.total_weight() == doctest::Approx(6.0));
  CHECK(a.weights().sum() == doctest::Approx(6.0));
  CHECK(a.child_sums(0).sum() == doctest::Approx(6.0));
  CHECK(a.child_sums(1).sum() == doctest::Approx(3.0));
}
