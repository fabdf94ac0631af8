#include "dde/family.hpp"

#include "dde/error.hpp"
#include "dde/rng.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

namespace dde {

std::string_view to_string(FamilyKind kind) noexcept {
  switch (kind) {
    case FamilyKind::Bernoulli: return "bernoulli";
    case FamilyKind::Poisson: return "poisson";
    case FamilyKind::Normal: return "normal";
    case FamilyKind::Lognormal: return "lognormal";
  }
  return "unknown";
}

FamilyKind parse_family_kind(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "bernoulli" || lower == "binary") return FamilyKind::Bernoulli;
  if (lower == "poisson" || lower == "count") return FamilyKind::Poisson;
  if (lower == "normal" || lower == "gaussian") return FamilyKind::Normal;
  if (lower == "lognormal") return FamilyKind::Lognormal;
  fail(ErrorCode::InvalidArgument, "unknown family '" + std::string(name) + "'");
}

bool has_dispersion(FamilyKind kind) noexcept {
  return kind == FamilyKind::Normal || kind == FamilyKind::Lognormal;
}

double log1p_exp(double x) noexcept {
  if (x > 35.0) return x;
  if (x < -35.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double log_sigmoid(double x) noexcept { return -log1p_exp(-x); }

double sigmoid(double x) noexcept {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double mean_map(FamilyKind kind, double eta) noexcept {
  switch (kind) {
    case FamilyKind::Bernoulli: return sigmoid(eta);
    case FamilyKind::Poisson: return std::exp(eta);
    case FamilyKind::Normal:
    case FamilyKind::Lognormal: return eta;
  }
  return eta;
}

double inverse_mean_map(FamilyKind kind, double mean) noexcept {
  switch (kind) {
    case FamilyKind::Bernoulli: return std::log(mean) - std::log1p(-mean);
    case FamilyKind::Poisson: return std::log(mean);
    case FamilyKind::Normal:
    case FamilyKind::Lognormal: return mean;
  }
  return mean;
}

namespace {

double normal_log_density(double x, double mean, double sd) noexcept {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

}  // namespace

double log_density(FamilyKind kind, double y, double eta, double gamma) noexcept {
  switch (kind) {
    case FamilyKind::Bernoulli: return y * eta - log1p_exp(eta);
    case FamilyKind::Poisson: return y * eta - std::exp(eta) - std::lgamma(y + 1.0);
    case FamilyKind::Normal: return normal_log_density(y, eta, gamma);
    case FamilyKind::Lognormal: {
      const double ly = std::log(y);
      return normal_log_density(ly, eta, gamma) - ly;
    }
  }
  return -INFINITY;
}

bool in_sample_space(FamilyKind kind, double y) noexcept {
  if (!std::isfinite(y)) return false;
  switch (kind) {
    case FamilyKind::Bernoulli: return y == 0.0 || y == 1.0;
    case FamilyKind::Poisson: return y >= 0.0 && std::floor(y) == y;
    case FamilyKind::Normal: return true;
    case FamilyKind::Lognormal: return y > 0.0;
  }
  return false;
}

double draw(FamilyKind kind, double eta, double gamma, Rng& rng) {
  switch (kind) {
    case FamilyKind::Bernoulli: return rng.bernoulli(sigmoid(eta)) ? 1.0 : 0.0;
    case FamilyKind::Poisson: return rng.poisson(std::exp(eta));
    case FamilyKind::Normal: return rng.normal(eta, gamma);
    case FamilyKind::Lognormal: return std::exp(rng.normal(eta, gamma));
  }
  return 0.0;
}

double default_link_scale(FamilyKind kind) noexcept {
  return has_dispersion(kind) ? 1.0 : 0.5;
}

ObservedFamily ObservedFamily::uniform(FamilyKind kind) {
  ObservedFamily f;
  f.kind_ = kind;
  return f;
}

ObservedFamily ObservedFamily::blocks(std::vector<Block> blocks) {
  require(!blocks.empty(), ErrorCode::InvalidArgument, "family block list is empty");
  for (const auto& b : blocks)
    require(b.count > 0, ErrorCode::InvalidArgument, "family block sizes must be positive");
  if (blocks.size() == 1) return uniform(blocks.front().kind);
  ObservedFamily f;
  f.kind_ = blocks.front().kind;
  f.blocks_ = std::move(blocks);
  return f;
}

FamilyKind ObservedFamily::uniform_kind() const {
  require(is_uniform(), ErrorCode::Unsupported, "family is mixed; no single kind");
  return kind_;
}

FamilyKind ObservedFamily::kind(Index column) const {
  if (blocks_.empty()) return kind_;
  Index start = 0;
  for (const auto& b : blocks_) {
    if (column < start + b.count) return b.kind;
    start += b.count;
  }
  fail(ErrorCode::Shape, "column " + std::to_string(column) + " outside family blocks");
}

Index ObservedFamily::width() const noexcept {
  Index total = 0;
  for (const auto& b : blocks_) total += b.count;
  return total;
}

void ObservedFamily::check_width(Index J) const {
  if (!blocks_.empty() && width() != J)
    fail(ErrorCode::Shape, "family blocks cover " + std::to_string(width()) +
                               " columns but J = " + std::to_string(J));
}

bool ObservedFamily::has_dispersion() const noexcept {
  if (blocks_.empty()) return dde::has_dispersion(kind_);
  return std::any_of(blocks_.begin(), blocks_.end(),
                     [](const Block& b) { return dde::has_dispersion(b.kind); });
}

std::vector<FamilyKind> ObservedFamily::column_kinds(Index J) const {
  check_width(J);
  std::vector<FamilyKind> out;
  out.reserve(static_cast<std::size_t>(J));
  if (blocks_.empty()) {
    out.assign(static_cast<std::size_t>(J), kind_);
  } else {
    for (const auto& b : blocks_) out.insert(out.end(), static_cast<std::size_t>(b.count), b.kind);
  }
  return out;
}

bool ObservedFamily::operator==(const ObservedFamily& other) const noexcept {
  if (is_uniform() != other.is_uniform()) return false;
  if (is_uniform()) return kind_ == other.kind_;
  if (blocks_.size() != other.blocks_.size()) return false;
  for (std::size_t i = 0; i < blocks_.size(); ++i)
    if (blocks_[i].kind != other.blocks_[i].kind || blocks_[i].count != other.blocks_[i].count)
      return false;
  return true;
}

}  // namespace dde
