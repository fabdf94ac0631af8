#include "dde/identifiability.hpp"

#include "dde/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <functional>
#include <queue>

namespace dde {

std::string_view to_string(Tristate t) noexcept {
  switch (t) {
    case Tristate::Yes: return "yes";
    case Tristate::No: return "no";
    case Tristate::Unknown: return "unknown";
  }
  return "unknown";
}

ConditionReport check_condition_A(const BinaryMatrix& G, Index min_pure) {
  ConditionReport rep;
  rep.condition = min_pure >= 3 ? "A3" : "A";
  const Index K = G.cols();
  rep.pure_children.assign(static_cast<std::size_t>(K), {});
  for (Index r = 0; r < G.rows(); ++r) {
    Index ones = 0, at = -1;
    for (Index k = 0; k < K; ++k)
      if (G(r, k)) {
        ++ones;
        at = k;
      }
    if (ones == 1) rep.pure_children[static_cast<std::size_t>(at)].push_back(r);
  }
  rep.holds = Tristate::Yes;
  for (Index k = 0; k < K; ++k) {
    if (static_cast<Index>(rep.pure_children[static_cast<std::size_t>(k)].size()) < min_pure) {
      rep.holds = Tristate::No;
      rep.note = "latent " + std::to_string(k) + " has " +
                 std::to_string(rep.pure_children[static_cast<std::size_t>(k)].size()) +
                 " pure children";
      break;
    }
  }
  return rep;
}

ConditionReport check_condition_B(const Matrix& B, const std::vector<Index>& pure_rows, double tol) {
  ConditionReport rep;
  rep.condition = "B";
  const Index K = B.cols() - 1;
  if (K > 14) {
    rep.holds = Tristate::Unknown;
    rep.note = "pair enumeration is limited to 14 latents";
    return rep;
  }
  std::vector<bool> excluded(static_cast<std::size_t>(B.rows()), false);
  for (Index r : pure_rows)
    if (r >= 0 && r < B.rows()) excluded[static_cast<std::size_t>(r)] = true;
  std::vector<Index> rows;
  for (Index r = 0; r < B.rows(); ++r)
    if (!excluded[static_cast<std::size_t>(r)]) rows.push_back(r);

  std::vector<bool> used(static_cast<std::size_t>(B.rows()), false);
  std::vector<int> delta(static_cast<std::size_t>(K), 0);
  Index total = 1;
  for (Index k = 0; k < K; ++k) total *= 3;
  // Digit k of the base-3 code is coordinate k: 0 -> 0, 1 -> +1, 2 -> -1.
  for (Index code = 1; code < total; ++code) {
    Index c = code;
    int first = 0;
    for (Index k = 0; k < K; ++k) {
      const int digit = static_cast<int>(c % 3);
      c /= 3;
      delta[static_cast<std::size_t>(k)] = digit == 0 ? 0 : (digit == 1 ? 1 : -1);
      if (first == 0) first = delta[static_cast<std::size_t>(k)];
    }
    if (first != 1) continue;
    Index witness = -1;
    for (Index r : rows) {
      double s = 0.0;
      for (Index k = 0; k < K; ++k) s += B(r, k + 1) * delta[static_cast<std::size_t>(k)];
      if (std::abs(s) > tol) {
        witness = r;
        break;
      }
    }
    if (witness < 0) {
      Config a = 0, b = 0;
      for (Index k = 0; k < K; ++k) {
        if (delta[static_cast<std::size_t>(k)] < 0) a |= Config{1} << k;
        if (delta[static_cast<std::size_t>(k)] > 0) b |= Config{1} << k;
      }
      rep.holds = Tristate::No;
      rep.violating_pair = std::make_pair(a, b);
      rep.witness_rows.clear();
      return rep;
    }
    used[static_cast<std::size_t>(witness)] = true;
  }
  for (Index r = 0; r < B.rows(); ++r)
    if (used[static_cast<std::size_t>(r)]) rep.witness_rows.push_back(r);
  rep.holds = Tristate::Yes;
  return rep;
}

Matching max_bipartite_matching(const BinaryMatrix& G, const std::vector<Index>& rows_in) {
  const Index K = G.cols();
  std::vector<Index> rows = rows_in;
  if (rows.empty())
    for (Index r = 0; r < G.rows(); ++r) rows.push_back(r);
  const Index L = static_cast<Index>(rows.size());
  std::vector<std::vector<Index>> adj(static_cast<std::size_t>(L));
  for (Index u = 0; u < L; ++u)
    for (Index k = 0; k < K; ++k)
      if (G(rows[static_cast<std::size_t>(u)], k)) adj[static_cast<std::size_t>(u)].push_back(k);

  constexpr Index kInf = std::numeric_limits<Index>::max();
  std::vector<Index> match_u(static_cast<std::size_t>(L), -1), match_v(static_cast<std::size_t>(K), -1);
  std::vector<Index> dist(static_cast<std::size_t>(L));

  auto bfs = [&] {
    std::queue<Index> q;
    bool found = false;
    for (Index u = 0; u < L; ++u) {
      if (match_u[static_cast<std::size_t>(u)] < 0) {
        dist[static_cast<std::size_t>(u)] = 0;
        q.push(u);
      } else {
        dist[static_cast<std::size_t>(u)] = kInf;
      }
    }
    while (!q.empty()) {
      const Index u = q.front();
      q.pop();
      for (Index v : adj[static_cast<std::size_t>(u)]) {
        const Index w = match_v[static_cast<std::size_t>(v)];
        if (w < 0) {
          found = true;
        } else if (dist[static_cast<std::size_t>(w)] == kInf) {
          dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(u)] + 1;
          q.push(w);
        }
      }
    }
    return found;
  };
  std::function<bool(Index)> dfs = [&](Index u) {
    for (Index v : adj[static_cast<std::size_t>(u)]) {
      const Index w = match_v[static_cast<std::size_t>(v)];
      if (w < 0 || (dist[static_cast<std::size_t>(w)] == dist[static_cast<std::size_t>(u)] + 1 && dfs(w))) {
        match_u[static_cast<std::size_t>(u)] = v;
        match_v[static_cast<std::size_t>(v)] = u;
        return true;
      }
    }
    dist[static_cast<std::size_t>(u)] = kInf;
    return false;
  };

  Matching out;
  while (bfs())
    for (Index u = 0; u < L; ++u)
      if (match_u[static_cast<std::size_t>(u)] < 0 && dfs(u)) ++out.size;

  out.row_to_col.assign(static_cast<std::size_t>(G.rows()), -1);
  out.col_to_row.assign(static_cast<std::size_t>(K), -1);
  for (Index u = 0; u < L; ++u) {
    const Index v = match_u[static_cast<std::size_t>(u)];
    if (v < 0) continue;
    out.row_to_col[static_cast<std::size_t>(rows[static_cast<std::size_t>(u)])] = v;
    out.col_to_row[static_cast<std::size_t>(v)] = rows[static_cast<std::size_t>(u)];
  }
  return out;
}

namespace {

bool covers_all(const BinaryMatrix& G, const std::vector<Index>& rows) {
  for (Index k = 0; k < G.cols(); ++k) {
    bool hit = false;
    for (Index r : rows)
      if (G(r, k)) {
        hit = true;
        break;
      }
    if (!hit) return false;
  }
  return true;
}

// Two disjoint column-saturating matchings on a row set are one matching of
// size 2K into the doubled graph [G G]. Removing rows never helps that
// matching, so I3 is grown as a cover one uncovered column at a time and the
// branch is cut as soon as the doubled matching on the remaining rows fails.
class PartitionSearch {
 public:
  PartitionSearch(const BinaryMatrix& G, Index budget) : G_(G), budget_(budget) {
    R_ = G.rows();
    K_ = G.cols();
    doubled_.resize(R_, 2 * K_);
    doubled_ << G, G;
    in_cover_.assign(static_cast<std::size_t>(R_), false);
    banned_.assign(static_cast<std::size_t>(R_), false);
  }

  // Returns Yes with certificate, No, or Unknown when the budget runs out.
  Tristate run(ConditionReport& rep) {
    found_ = false;
    exhausted_ = false;
    grow();
    if (found_) {
      fill(rep);
      return Tristate::Yes;
    }
    return exhausted_ ? Tristate::Unknown : Tristate::No;
  }

 private:
  void grow() {
    if (found_ || exhausted_) return;
    if (budget_ > 0 && ++nodes_ > budget_) {
      exhausted_ = true;
      return;
    }
    const std::vector<Index> rows = pool();
    if (static_cast<Index>(rows.size()) < 2 * K_) return;
    const Matching m = max_bipartite_matching(doubled_, rows);
    if (m.size < 2 * K_) return;
    // Uncovered column with the fewest rows still allowed into the cover.
    Index best = -1;
    std::vector<Index> best_rows;
    for (Index k = 0; k < K_; ++k) {
      bool covered = false;
      std::vector<Index> rows;
      for (Index r = 0; r < R_; ++r) {
        if (!G_(r, k)) continue;
        if (in_cover_[static_cast<std::size_t>(r)]) {
          covered = true;
          break;
        }
        if (!banned_[static_cast<std::size_t>(r)]) rows.push_back(r);
      }
      if (covered) continue;
      if (best < 0 || rows.size() < best_rows.size()) {
        best = k;
        best_rows = std::move(rows);
      }
    }
    if (best < 0) {
      found_ = true;
      matching_ = m;
      return;
    }
    // The i-th branch puts row i in the cover and keeps rows before it out.
    std::vector<Index> banned_here;
    for (Index r : best_rows) {
      in_cover_[static_cast<std::size_t>(r)] = true;
      grow();
      if (found_ || exhausted_) return;
      in_cover_[static_cast<std::size_t>(r)] = false;
      banned_[static_cast<std::size_t>(r)] = true;
      banned_here.push_back(r);
    }
    for (Index r : banned_here) banned_[static_cast<std::size_t>(r)] = false;
  }

  std::vector<Index> pool() const {
    std::vector<Index> out;
    for (Index r = 0; r < R_; ++r)
      if (!in_cover_[static_cast<std::size_t>(r)]) out.push_back(r);
    return out;
  }

  void fill(ConditionReport& rep) const {
    rep.I1.clear();
    rep.I2.clear();
    rep.I3.clear();
    rep.match1.assign(static_cast<std::size_t>(K_), -1);
    rep.match2.assign(static_cast<std::size_t>(K_), -1);
    for (Index r = 0; r < R_; ++r) {
      const Index c = matching_.row_to_col[static_cast<std::size_t>(r)];
      if (in_cover_[static_cast<std::size_t>(r)] || c < 0) {
        rep.I3.push_back(r);
      } else if (c < K_) {
        rep.I1.push_back(r);
        rep.match1[static_cast<std::size_t>(c)] = r;
      } else {
        rep.I2.push_back(r);
        rep.match2[static_cast<std::size_t>(c - K_)] = r;
      }
    }
  }

  const BinaryMatrix& G_;
  Index budget_;
  Index R_ = 0, K_ = 0;
  BinaryMatrix doubled_;
  std::vector<bool> in_cover_, banned_;
  Matching matching_;
  Index nodes_ = 0;
  bool found_ = false;
  bool exhausted_ = false;
};

}  // namespace

ConditionReport check_condition_C(const BinaryMatrix& G, Index exhaustive_rows, Index node_budget) {
  ConditionReport rep;
  rep.condition = "C";
  const Index R = G.rows();
  const Index K = G.cols();
  if (K == 0) {
    rep.holds = Tristate::Yes;
    for (Index r = 0; r < R; ++r) rep.I3.push_back(r);
    return rep;
  }
  for (Index k = 0; k < K; ++k) {
    if (G.col(k).cast<int>().sum() < 3) {
      rep.holds = Tristate::No;
      rep.note = "column " + std::to_string(k) + " has fewer than three parents-of rows";
      return rep;
    }
  }
  if (R < 2 * K + 1) {
    rep.holds = Tristate::No;
    rep.note = "fewer than 2K+1 rows";
    return rep;
  }
  // Greedy attempt: a maximum matching, then another on the remaining rows.
  const Matching m1 = max_bipartite_matching(G);
  if (m1.size < K) {
    rep.holds = Tristate::No;
    rep.note = "no column-saturating matching exists";
    return rep;
  }
  std::vector<Index> rest;
  std::vector<Index> I1;
  for (Index r = 0; r < R; ++r) {
    if (m1.row_to_col[static_cast<std::size_t>(r)] >= 0)
      I1.push_back(r);
    else
      rest.push_back(r);
  }
  const Matching m2 = max_bipartite_matching(G, rest);
  if (m2.size == K) {
    std::vector<Index> I2, I3;
    for (Index r : rest) {
      if (m2.row_to_col[static_cast<std::size_t>(r)] >= 0)
        I2.push_back(r);
      else
        I3.push_back(r);
    }
    if (covers_all(G, I3)) {
      rep.holds = Tristate::Yes;
      rep.I1 = I1;
      rep.I2 = I2;
      rep.I3 = I3;
      rep.match1 = m1.col_to_row;
      rep.match2 = m2.col_to_row;
      return rep;
    }
  }
  PartitionSearch search(G, R <= exhaustive_rows ? 0 : node_budget);
  rep.holds = search.run(rep);
  if (rep.holds == Tristate::Unknown) rep.note = "search budget exhausted";
  return rep;
}

bool verify_certificate(const BinaryMatrix& G, const ConditionReport& rep) {
  if (rep.holds != Tristate::Yes) return false;
  const Index K = G.cols();
  if (rep.condition == "A" || rep.condition == "A3") {
    const Index need = rep.condition == "A3" ? 3 : 2;
    if (static_cast<Index>(rep.pure_children.size()) != K) return false;
    for (Index k = 0; k < K; ++k) {
      const auto& rows = rep.pure_children[static_cast<std::size_t>(k)];
      if (static_cast<Index>(rows.size()) < need) return false;
      for (Index r : rows)
        if (G.row(r).cast<int>().sum() != 1 || !G(r, k)) return false;
    }
    return true;
  }
  if (rep.condition == "C") {
    std::vector<int> seen(static_cast<std::size_t>(G.rows()), 0);
    for (const auto* set : {&rep.I1, &rep.I2, &rep.I3})
      for (Index r : *set) {
        if (r < 0 || r >= G.rows() || seen[static_cast<std::size_t>(r)]++) return false;
      }
    for (Index r = 0; r < G.rows(); ++r)
      if (!seen[static_cast<std::size_t>(r)]) return false;
    auto check_matching = [&](const std::vector<Index>& set, const std::vector<Index>& match) {
      if (static_cast<Index>(match.size()) != K || static_cast<Index>(set.size()) != K) return false;
      std::vector<bool> used(static_cast<std::size_t>(G.rows()), false);
      for (Index k = 0; k < K; ++k) {
        const Index r = match[static_cast<std::size_t>(k)];
        if (r < 0 || std::find(set.begin(), set.end(), r) == set.end()) return false;
        if (used[static_cast<std::size_t>(r)] || !G(r, k)) return false;
        used[static_cast<std::size_t>(r)] = true;
      }
      return true;
    };
    return check_matching(rep.I1, rep.match1) && check_matching(rep.I2, rep.match2) &&
           covers_all(G, rep.I3);
  }
  return true;
}

std::vector<ConditionReport> validate_model_assumptions(const DdeModel& model) {
  std::vector<ConditionReport> out;
  ConditionReport a;
  a.condition = "1a";
  a.layer = model.depth();
  a.holds = Tristate::Yes;
  for (Index k = 0; k < model.p.size(); ++k)
    if (!(model.p[k] > 0.0 && model.p[k] < 1.0)) {
      a.holds = Tristate::No;
      a.note = "p[" + std::to_string(k) + "] is outside (0, 1)";
      break;
    }
  out.push_back(a);
  const GraphSet graphs = graphs_from_coefficients(model);
  for (Index d = 1; d <= static_cast<Index>(model.B.size()); ++d) {
    const Matrix& B = model.B[static_cast<std::size_t>(d - 1)];
    const BinaryMatrix& G = graphs.layers[static_cast<std::size_t>(d - 1)];
    ConditionReport b;
    b.condition = "1b";
    b.layer = d;
    b.holds = Tristate::Yes;
    for (Index k = 0; k < G.cols(); ++k)
      if (G.col(k).cast<int>().sum() == 0) {
        b.holds = Tristate::No;
        b.note = "latent " + std::to_string(k) + " has no children";
        break;
      }
    out.push_back(b);

    ConditionReport f;
    f.condition = "faithfulness";
    f.layer = d;
    f.holds = Tristate::Yes;
    for (Index r = 0; r < B.rows() && f.holds == Tristate::Yes; ++r)
      for (Index l = 1; l < B.cols(); ++l)
        if (B(r, l) != 0.0 && std::abs(B(r, l)) <= kFileGraphTolerance) {
          f.holds = Tristate::No;
          f.note = "slope (" + std::to_string(r) + ", " + std::to_string(l - 1) +
                   ") is nonzero but numerically negligible";
          break;
        }
    out.push_back(f);

    ConditionReport c;
    c.condition = "1c";
    c.layer = d;
    c.holds = Tristate::Yes;
    for (Index l = 1; l < B.cols(); ++l)
      if (!(B.col(l).sum() > 0.0)) {
        c.holds = Tristate::No;
        c.note = "slope column " + std::to_string(l - 1) + " does not sum to a positive value";
        break;
      }
    out.push_back(c);
  }
  return out;
}

}  // namespace dde
