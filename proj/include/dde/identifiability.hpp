#pragma once

#include "dde/model.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dde {

enum class Tristate { Yes, No, Unknown };
std::string_view to_string(Tristate t) noexcept;

struct ConditionReport {
  std::string condition;  // "A", "A3", "B", "C", "1a", "1b", "1c", "faithfulness"
  Index layer = 0;        // 0 when not tied to a layer
  Tristate holds = Tristate::Unknown;
  std::string note;

  // A: pure-child rows per column.
  std::vector<std::vector<Index>> pure_children;
  // B: rows used as witnesses, or the first indistinguishable pair.
  std::vector<Index> witness_rows;
  std::optional<std::pair<Config, Config>> violating_pair;
  // C: row partition; match_k[c] is the row matched to column c in I_k.
  std::vector<Index> I1, I2, I3;
  std::vector<Index> match1, match2;
};

ConditionReport check_condition_A(const BinaryMatrix& G, Index min_pure = 2);

/// Every pair alpha != alpha' must be separated by a row outside pure_rows:
/// sum_k beta_{j,k} (alpha_k - alpha'_k) != 0 beyond tol. K <= 14.
ConditionReport check_condition_B(const Matrix& B, const std::vector<Index>& pure_rows,
                                  double tol = 1e-12);

struct Matching {
  std::vector<Index> row_to_col;  // -1 when unmatched
  std::vector<Index> col_to_row;
  Index size = 0;
};

/// Hopcroft-Karp over the rows given (all rows when empty).
Matching max_bipartite_matching(const BinaryMatrix& G, const std::vector<Index>& rows = {});

/// Searches for a row partition I1, I2, I3 such that G restricted to I1 and
/// to I2 each have a column-saturating matching and G restricted to I3 has
/// no empty column. Exhaustive up to exhaustive_rows rows; larger graphs get
/// node_budget search nodes before answering unknown.
ConditionReport check_condition_C(const BinaryMatrix& G, Index exhaustive_rows = 16,
                                  Index node_budget = 2'000'000);

/// Re-checks a yes certificate by direct inspection.
bool verify_certificate(const BinaryMatrix& G, const ConditionReport& report);

/// p in (0, 1); no empty graph column; nonzero slopes clear of the file
/// tolerance; positive slope column sums. One report per check and layer.
std::vector<ConditionReport> validate_model_assumptions(const DdeModel& model);

}  // namespace dde
