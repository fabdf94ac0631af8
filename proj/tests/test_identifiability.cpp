#include "support.hpp"

#include "dde/identifiability.hpp"

#include <doctest.h>

using namespace dde;

namespace {

BinaryMatrix from_rows(std::initializer_list<std::initializer_list<int>> rows) {
  BinaryMatrix G(static_cast<Index>(rows.size()), static_cast<Index>(rows.begin()->size()));
  Index i = 0;
  for (const auto& r : rows) {
    Index j = 0;
    for (int v : r) G(i, j++) = static_cast<std::uint8_t>(v);
    ++i;
  }
  return G;
}

// Can every column be matched to a distinct row of `rows`?
bool saturates(const BinaryMatrix& G, const std::vector<Index>& rows, Index col, std::vector<bool>& used) {
  if (col == G.cols()) return true;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (used[r] || !G(rows[r], col)) continue;
    used[r] = true;
    if (saturates(G, rows, col + 1, used)) return true;
    used[r] = false;
  }
  return false;
}

bool saturates(const BinaryMatrix& G, const std::vector<Index>& rows) {
  std::vector<bool> used(rows.size(), false);
  return saturates(G, rows, 0, used);
}

bool condition_c_oracle(const BinaryMatrix& G) {
  const Index J = G.rows();
  Index total = 1;
  for (Index j = 0; j < J; ++j) total *= 3;
  for (Index code = 0; code < total; ++code) {
    std::vector<Index> parts[3];
    Index c = code;
    for (Index j = 0; j < J; ++j, c /= 3) parts[c % 3].push_back(j);
    bool covered = true;
    for (Index k = 0; k < G.cols() && covered; ++k) {
      bool any = false;
      for (Index j : parts[2]) any = any || G(j, k);
      covered = any;
    }
    if (covered && saturates(G, parts[0]) && saturates(G, parts[1])) return true;
  }
  return false;
}

Index max_matching_oracle(const BinaryMatrix& G) {
  // Largest set of columns that can be matched, by subset enumeration.
  Index best = 0;
  for (Config mask = 0; mask < (Config{1} << G.cols()); ++mask) {
    std::vector<Index> cols;
    for (Index k = 0; k < G.cols(); ++k)
      if (config_bit(mask, k)) cols.push_back(k);
    if (static_cast<Index>(cols.size()) <= best) continue;
    BinaryMatrix sub(G.rows(), static_cast<Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) sub.col(static_cast<Index>(c)) = G.col(cols[c]);
    std::vector<Index> all(static_cast<std::size_t>(G.rows()));
    std::iota(all.begin(), all.end(), 0);
    if (saturates(sub, all)) best = static_cast<Index>(cols.size());
  }
  return best;
}

BinaryMatrix random_graph(Index J, Index K, double density, Rng& rng) {
  BinaryMatrix G(J, K);
  for (Index j = 0; j < J; ++j)
    for (Index k = 0; k < K; ++k) G(j, k) = rng.bernoulli(density);
  return G;
}

}  // namespace

TEST_CASE("condition A on the benchmark graphs") {
  const auto family = ObservedFamily::uniform(FamilyKind::Bernoulli);
  const DdeModel s = make_benchmark_params(BenchmarkKind::Strict, 18, {6, 2}, family);
  const DdeModel g = make_benchmark_params(BenchmarkKind::Generic, 18, {6, 2}, family);
  const ConditionReport a = check_condition_A(graphs_from_coefficients(s).layers[0]);
  CHECK(a.holds == Tristate::Yes);
  REQUIRE(a.pure_children.size() == 6);
  for (Index k = 0; k < 6; ++k)
    CHECK(a.pure_children[static_cast<std::size_t>(k)] == std::vector<Index>{k, k + 6});
  CHECK(check_condition_A(graphs_from_coefficients(g).layers[0]).holds == Tristate::No);
  CHECK(check_condition_A(graphs_from_coefficients(s).layers[0], 3).holds == Tristate::No);
}

TEST_CASE("condition B separates every latent pair") {
  const auto family = ObservedFamily::uniform(FamilyKind::Normal);
  const DdeModel s = make_benchmark_params(BenchmarkKind::Strict, 18, {6, 2}, family);
  std::vector<Index> pure(12);
  std::iota(pure.begin(), pure.end(), 0);
  const ConditionReport r = check_condition_B(s.B[0], pure);
  CHECK(r.holds == Tristate::Yes);

  // Exhaustive pair check on the non-pure block.
  const Matrix slopes = s.B[0].bottomRows(6).rightCols(6);
  bool all_separated = true;
  for (Config a = 0; a < 64; ++a)
    for (Config b = a + 1; b < 64; ++b) {
      bool sep = false;
      for (Index j = 0; j < 6 && !sep; ++j) {
        double diff = 0.0;
        for (Index k = 0; k < 6; ++k) diff += slopes(j, k) * (config_bit(a, k) - config_bit(b, k));
        sep = std::abs(diff) > 1e-12;
      }
      all_separated = all_separated && sep;
    }
  CHECK(all_separated);

  // A third identity block separates trivially.
  Matrix B3 = Matrix::Zero(9, 4);
  for (Index r = 0; r < 9; ++r) B3(r, 1 + r % 3) = 2.0;
  CHECK(check_condition_B(B3, {0, 1, 2, 3, 4, 5}).holds == Tristate::Yes);

  // Remaining rows that only see the sum of two latents cannot tell (1,0) from (0,1).
  Matrix B2 = Matrix::Zero(5, 3);
  B2(0, 1) = B2(1, 2) = B2(2, 1) = B2(3, 2) = 1.0;
  B2(4, 1) = B2(4, 2) = 1.0;
  const ConditionReport no = check_condition_B(B2, {0, 1, 2, 3});
  CHECK(no.holds == Tristate::No);
  REQUIRE(no.violating_pair.has_value());
  const auto [x, y] = *no.violating_pair;
  CHECK(((x == 1 && y == 2) || (x == 2 && y == 1)));
}

TEST_CASE("bipartite matching size equals brute force") {
  Rng rng(17);
  for (int t = 0; t < 30; ++t) {
    const BinaryMatrix G = random_graph(8, 5, 0.25, rng);
    CHECK(max_bipartite_matching(G).size == max_matching_oracle(G));
  }
  const Matching m = max_bipartite_matching(random_graph(8, 5, 0.4, rng));
  for (Index c = 0; c < 5; ++c)
    if (m.col_to_row[static_cast<std::size_t>(c)] >= 0)
      CHECK(m.row_to_col[static_cast<std::size_t>(m.col_to_row[static_cast<std::size_t>(c)])] == c);
}

TEST_CASE("condition C on a dense five-by-two graph") {
  const BinaryMatrix G = from_rows({{1, 1}, {1, 1}, {1, 1}, {1, 1}, {1, 1}});
  const ConditionReport r = check_condition_C(G);
  CHECK(r.holds == Tristate::Yes);
  CHECK(verify_certificate(G, r));
  CHECK(r.I1 == std::vector<Index>{0, 1});
  CHECK(r.I2 == std::vector<Index>{2, 3});
  CHECK(r.I3 == std::vector<Index>{4});

  const BinaryMatrix solid = from_rows({{1, 0}, {0, 1}, {1, 0}, {0, 1}, {1, 1}});
  CHECK(check_condition_C(solid).holds == Tristate::Yes);
  const BinaryMatrix thin = from_rows({{1, 0}, {0, 1}, {1, 0}, {0, 1}});
  CHECK(check_condition_C(thin).holds == Tristate::No);
}

TEST_CASE("condition C holds for the generic benchmark") {
  const DdeModel g = make_benchmark_params(BenchmarkKind::Generic, 18, {6, 2},
                                           ObservedFamily::uniform(FamilyKind::Bernoulli));
  const GraphSet G = graphs_from_coefficients(g);
  for (const auto& L : G.layers) {
    const ConditionReport r = check_condition_C(L);
    CHECK(r.holds == Tristate::Yes);
    CHECK(verify_certificate(L, r));
  }
}

TEST_CASE("condition C agrees with exhaustive partition search") {
  Rng rng(23);
  for (int t = 0; t < 60; ++t) {
    const Index K = 1 + t % 3;
    const Index J = 3 * K + static_cast<Index>(rng.uniform() * 3);
    const BinaryMatrix G = random_graph(J, K, 0.5, rng);
    const ConditionReport r = check_condition_C(G);
    CHECK(r.holds == (condition_c_oracle(G) ? Tristate::Yes : Tristate::No));
    if (r.holds == Tristate::Yes) CHECK(verify_certificate(G, r));
  }
}

TEST_CASE("model assumptions on the benchmark") {
  const DdeModel s = make_benchmark_params(BenchmarkKind::Strict, 18, {6, 2},
                                           ObservedFamily::uniform(FamilyKind::Poisson));
  for (const auto& r : validate_model_assumptions(s)) CHECK(r.holds == Tristate::Yes);

  DdeModel empty = s;
  empty.B[0].col(3).setZero();
  bool flagged = false;
  for (const auto& r : validate_model_assumptions(empty)) flagged = flagged || r.holds == Tristate::No;
  CHECK(flagged);
}
