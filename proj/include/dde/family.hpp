#pragma once

#include "dde/types.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace dde {

class Rng;

enum class FamilyKind { Bernoulli, Poisson, Normal, Lognormal };

std::string_view to_string(FamilyKind kind) noexcept;
FamilyKind parse_family_kind(std::string_view name);

/// True for families carrying a per-column dispersion gamma_j (the standard
/// deviation of the Normal, or of log Y for Lognormal).
bool has_dispersion(FamilyKind kind) noexcept;

/// Mean map mu(g(eta)): logistic, exp, identity (Lognormal: identity on log Y).
double mean_map(FamilyKind kind, double eta) noexcept;
/// Inverse of mean_map; Lognormal expects values already on the log scale.
double inverse_mean_map(FamilyKind kind, double mean) noexcept;
double log_density(FamilyKind kind, double y, double eta, double gamma) noexcept;
bool in_sample_space(FamilyKind kind, double y) noexcept;
double draw(FamilyKind kind, double eta, double gamma, Rng& rng);

/// Scaling constant applied to spectral coefficient estimates.
double default_link_scale(FamilyKind kind) noexcept;

double log_sigmoid(double x) noexcept;
double sigmoid(double x) noexcept;
double log1p_exp(double x) noexcept;

/// Observed-layer family descriptor. Either one kind for every column, or a
/// sequence of contiguous column blocks with their own kinds (e.g. a binary
/// block followed by a lognormal block).
class ObservedFamily {
 public:
  struct Block {
    FamilyKind kind;
    Index count;
  };

  ObservedFamily() = default;
  static ObservedFamily uniform(FamilyKind kind);
  static ObservedFamily blocks(std::vector<Block> blocks);

  bool is_uniform() const noexcept { return blocks_.empty(); }
  FamilyKind uniform_kind() const;
  const std::vector<Block>& block_list() const noexcept { return blocks_; }

  FamilyKind kind(Index column) const;
  /// Width fixed by the block layout; 0 for a uniform family (fits any J).
  Index width() const noexcept;
  void check_width(Index J) const;

  bool has_dispersion() const noexcept;
  bool column_has_dispersion(Index column) const { return dde::has_dispersion(kind(column)); }

  std::vector<FamilyKind> column_kinds(Index J) const;

  bool operator==(const ObservedFamily& other) const noexcept;

 private:
  FamilyKind kind_ = FamilyKind::Normal;
  std::vector<Block> blocks_;
};

}  // namespace dde
