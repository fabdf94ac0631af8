#include "dde/estimation.hpp"

#include "dde/enumeration.hpp"
#include "dde/error.hpp"
#include "dde/parallel.hpp"
#include "dde/rng.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

namespace dde {

std::string_view to_string(PenaltyKind kind) noexcept {
  switch (kind) {
    case PenaltyKind::None: return "none";
    case PenaltyKind::TLP: return "tlp";
    case PenaltyKind::HardThreshold: return "hard";
  }
  return "unknown";
}

PenaltyKind parse_penalty_kind(std::string_view name) {
  if (name == "none") return PenaltyKind::None;
  if (name == "tlp") return PenaltyKind::TLP;
  if (name == "hard" || name == "hard-threshold" || name == "hardthreshold")
    return PenaltyKind::HardThreshold;
  fail(ErrorCode::InvalidArgument, "unknown penalty '" + std::string(name) + "'");
}

std::string_view to_string(Algorithm algo) noexcept {
  return algo == Algorithm::PEM ? "pem" : "saem";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "pem") return Algorithm::PEM;
  if (name == "saem") return Algorithm::SAEM;
  fail(ErrorCode::InvalidArgument, "unknown algorithm '" + std::string(name) + "'");
}

double penalty_value(const Penalty& pen, double b) noexcept {
  switch (pen.kind) {
    case PenaltyKind::None: return 0.0;
    case PenaltyKind::TLP: return pen.lambda * std::min(std::abs(b), pen.tau);
    case PenaltyKind::HardThreshold: return b != 0.0 ? 0.5 * pen.tau * pen.tau : 0.0;
  }
  return 0.0;
}

Penalty default_tuning(Index N, Index layer) {
  require(N >= 1, ErrorCode::InvalidArgument, "N must be positive");
  require(layer >= 1, ErrorCode::InvalidArgument, "layer index starts at 1");
  const double n = static_cast<double>(N);
  return {PenaltyKind::TLP, std::pow(n, 0.25), std::max(3.0 * std::pow(n, -0.3), 0.3)};
}

std::vector<std::vector<Penalty>> tuning_grid(Index N, Index D) {
  require(N >= 1 && D >= 1, ErrorCode::InvalidArgument, "N and D must be positive");
  const double n = static_cast<double>(N);
  const double lambdas[3] = {std::pow(n, 0.125), std::pow(n, 0.25), std::pow(n, 0.375)};
  const double taus[3] = {2.0 * std::pow(n, -0.125), 2.0 * std::pow(n, -0.25),
                          2.0 * std::pow(n, -0.375)};
  Index combos = 1;
  for (Index d = 0; d < D; ++d) combos *= 3;
  std::vector<std::vector<Penalty>> grid;
  for (Index c = 0; c < combos; ++c) {
    for (double tau : taus) {
      std::vector<Penalty> per_layer(static_cast<std::size_t>(D));
      Index code = c;
      for (Index d = D - 1; d >= 0; --d) {
        per_layer[static_cast<std::size_t>(d)] = {PenaltyKind::TLP, lambdas[code % 3], tau};
        code /= 3;
      }
      grid.push_back(std::move(per_layer));
    }
  }
  return grid;
}

void validate(const FitConfig& cfg) {
  require(cfg.gibbs_C >= 1, ErrorCode::InvalidArgument, "gibbs_C must be at least 1");
  require(cfg.step_exponent > 0.5 && cfg.step_exponent <= 1.0, ErrorCode::InvalidArgument,
          "step exponent must lie in (0.5, 1]");
  require(cfg.max_iter >= 0, ErrorCode::InvalidArgument, "max_iter must be nonnegative");
  require(cfg.burn_in >= 0, ErrorCode::InvalidArgument, "burn_in must be nonnegative");
  require(cfg.marginal_latent_dim >= 0 && cfg.marginal_latent_dim <= 20, ErrorCode::InvalidArgument,
          "marginal_latent_dim must lie in [0, 20]");
  require(cfg.box_bound > 0.0, ErrorCode::InvalidArgument, "box bound must be positive");
  require(cfg.newton_max_iter >= 1, ErrorCode::InvalidArgument, "newton_max_iter must be positive");
  for (const auto& p : cfg.penalties) {
    require(p.lambda >= 0.0 && std::isfinite(p.lambda), ErrorCode::InvalidArgument,
            "penalty lambda must be finite and nonnegative");
    require(p.tau > 0.0 && std::isfinite(p.tau), ErrorCode::InvalidArgument,
            "penalty tau must be positive");
  }
}

std::vector<Penalty> resolved_penalties(const FitConfig& cfg, Index N, Index D) {
  if (cfg.penalties.empty()) {
    std::vector<Penalty> out;
    for (Index d = 1; d <= D; ++d) out.push_back(default_tuning(N, d));
    return out;
  }
  if (cfg.penalties.size() == 1) return std::vector<Penalty>(static_cast<std::size_t>(D), cfg.penalties[0]);
  require(static_cast<Index>(cfg.penalties.size()) == D, ErrorCode::InvalidArgument,
          "give one penalty per layer (or a single shared one)");
  return cfg.penalties;
}

double total_penalty(const DdeModel& model, const std::vector<Penalty>& penalties) {
  double total = 0.0;
  for (std::size_t d = 0; d < model.B.size(); ++d) {
    const Matrix& B = model.B[d];
    for (Index r = 0; r < B.rows(); ++r)
      for (Index l = 1; l < B.cols(); ++l) total += penalty_value(penalties[d], B(r, l));
  }
  return total;
}

// ---------------------------------------------------------------------------
// Sufficient statistics

namespace {

void fill_design_row(Config key, Index parents, double* x) {
  x[0] = 1.0;
  for (Index k = 0; k < parents; ++k) x[k + 1] = config_bit(key, k);
}

}  // namespace

DesignStats::DesignStats(Index parents, std::vector<FamilyKind> row_kinds)
    : parents_(parents), kinds_(std::move(row_kinds)) {
  for (FamilyKind k : kinds_) {
    if (has_dispersion(k))
      moments_ = true;
    else
      keyed_ = true;
  }
  if (moments_) {
    gram_ = Matrix::Zero(parents + 1, parents + 1);
    xs1_ = Matrix::Zero(parents + 1, rows());
    s2_ = Vector::Zero(rows());
  }
}

Index DesignStats::find_or_add(Config key) {
  auto it = lookup_.find(key);
  if (it != lookup_.end()) return it->second;
  const Index c = size();
  lookup_.emplace(key, c);
  keys_.push_back(key);
  w_.push_back(0.0);
  s1_.resize(s1_.size() + static_cast<std::size_t>(rows()), 0.0);
  return c;
}

void DesignStats::add(Config key, double weight, const double* child) {
  total_ += weight;
  const Index R = rows();
  if (keyed_) {
    const Index c = find_or_add(key);
    w_[static_cast<std::size_t>(c)] += weight;
    double* s = s1_.data() + c * R;
    for (Index r = 0; r < R; ++r) s[r] += weight * child[r];
  }
  if (moments_) {
    const Index m = parents_ + 1;
    double x[kMaxLayerWidth + 1];
    fill_design_row(key, parents_, x);
    for (Index a = 0; a < m; ++a) {
      if (x[a] == 0.0) continue;
      for (Index b = 0; b < m; ++b)
        if (x[b] != 0.0) gram_(a, b) += weight;
    }
    for (Index r = 0; r < R; ++r) {
      if (!has_dispersion(kinds_[static_cast<std::size_t>(r)])) continue;
      const double wy = weight * child[r];
      for (Index a = 0; a < m; ++a)
        if (x[a] != 0.0) xs1_(a, r) += wy;
      s2_[r] += wy * child[r];
    }
  }
}

void DesignStats::add_weighted(Config key, double weight, const double* weighted_child) {
  require(!moments_, ErrorCode::Internal, "weighted adds are only valid for keyed layers");
  total_ += weight;
  const Index c = find_or_add(key);
  w_[static_cast<std::size_t>(c)] += weight;
  double* s = s1_.data() + c * rows();
  for (Index r = 0; r < rows(); ++r) s[r] += weighted_child[r];
}

void DesignStats::blend(const DesignStats& other, double theta) {
  require(other.parents_ == parents_ && other.rows() == rows(), ErrorCode::Internal,
          "statistics shapes differ");
  const double keep = 1.0 - theta;
  total_ = keep * total_ + theta * other.total_;
  if (keyed_) {
    for (double& v : w_) v *= keep;
    for (double& v : s1_) v *= keep;
    const Index R = rows();
    for (Index oc = 0; oc < other.size(); ++oc) {
      const Index c = find_or_add(other.keys_[static_cast<std::size_t>(oc)]);
      w_[static_cast<std::size_t>(c)] += theta * other.w_[static_cast<std::size_t>(oc)];
      for (Index r = 0; r < R; ++r)
        s1_[static_cast<std::size_t>(c * R + r)] += theta * other.s1_[static_cast<std::size_t>(oc * R + r)];
    }
  }
  if (moments_) {
    gram_ = keep * gram_ + theta * other.gram_;
    xs1_ = keep * xs1_ + theta * other.xs1_;
    s2_ = keep * s2_ + theta * other.s2_;
  }
}

void DesignStats::merge(const DesignStats& other) {
  require(other.parents_ == parents_ && other.rows() == rows(), ErrorCode::Internal,
          "statistics shapes differ");
  total_ += other.total_;
  if (keyed_) {
    const Index R = rows();
    for (Index oc = 0; oc < other.size(); ++oc) {
      const Index c = find_or_add(other.keys_[static_cast<std::size_t>(oc)]);
      w_[static_cast<std::size_t>(c)] += other.w_[static_cast<std::size_t>(oc)];
      for (Index r = 0; r < R; ++r)
        s1_[static_cast<std::size_t>(c * R + r)] += other.s1_[static_cast<std::size_t>(oc * R + r)];
    }
  }
  if (moments_) {
    gram_ += other.gram_;
    xs1_ += other.xs1_;
    s2_ += other.s2_;
  }
}

Matrix DesignStats::design() const {
  Matrix X(size(), parents_ + 1);
  double x[kMaxLayerWidth + 1];
  for (Index c = 0; c < size(); ++c) {
    fill_design_row(keys_[static_cast<std::size_t>(c)], parents_, x);
    for (Index a = 0; a <= parents_; ++a) X(c, a) = x[a];
  }
  return X;
}

Vector DesignStats::weights() const {
  return Eigen::Map<const Vector>(w_.data(), size());
}

Vector DesignStats::child_sums(Index row) const {
  Vector out(size());
  for (Index c = 0; c < size(); ++c) out[c] = s1_[static_cast<std::size_t>(c * rows() + row)];
  return out;
}

// ---------------------------------------------------------------------------
// Row M-step

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

double keyed_q(FamilyKind kind, const Matrix& X, const Vector& w, const Vector& s1,
               const Vector& beta) {
  const Vector eta = X * beta;
  double q = 0.0;
  for (Index c = 0; c < eta.size(); ++c) {
    if (w[c] == 0.0 && s1[c] == 0.0) continue;
    const double e = eta[c];
    q += s1[c] * e - w[c] * (kind == FamilyKind::Poisson ? std::exp(e) : log1p_exp(e));
  }
  return q;
}

double moment_rss(const RowObjective& obj, const Vector& beta) {
  const double rss = obj.s2 - 2.0 * beta.dot(obj.xs1) + beta.dot(*obj.gram * beta);
  return std::max(rss, 1e-12 * std::max(obj.W, 1.0));
}

double gaussian_q(double rss, double W, double gamma) {
  return -rss / (2.0 * gamma * gamma) - W * std::log(gamma) - 0.5 * W * kLog2Pi;
}

double profiled_gamma(double rss, double W) { return std::max(std::sqrt(rss / W), 1e-3); }

struct Candidate {
  Vector beta;
  double gamma = 1.0;
  double q = -std::numeric_limits<double>::infinity();
  bool ok = true;
};

class RowSolver {
 public:
  RowSolver(const RowObjective& obj, const MStepOptions& opts)
      : obj_(obj), opts_(opts), dim_(obj.dim()), dispersion_(has_dispersion(obj.kind)) {
    require(dispersion_ ? obj.gram != nullptr : obj.X != nullptr, ErrorCode::Internal,
            "row objective is missing its statistics");
  }

  Index dim() const { return dim_; }
  bool dispersion() const { return dispersion_; }

  // Unpenalized optimum with slopes outside mask fixed at zero.
  Candidate solve(std::uint64_t mask, const Vector& warm) const {
    std::vector<Index> idx{0};
    for (Index k = 0; k + 1 < dim_; ++k)
      if ((mask >> k) & 1u) idx.push_back(k + 1);
    return dispersion_ ? solve_gaussian(idx) : solve_newton(idx, warm);
  }

  Candidate evaluate(const Vector& beta, double gamma) const {
    Candidate c;
    c.beta = beta;
    if (dispersion_) {
      const double rss = moment_rss(obj_, beta);
      c.gamma = gamma;
      c.q = gaussian_q(rss, obj_.W, gamma);
    } else {
      c.q = keyed_q(obj_.kind, *obj_.X, obj_.w, obj_.s1, beta);
    }
    return c;
  }

  Candidate profile(const Vector& beta) const {
    Candidate c;
    c.beta = beta;
    const double rss = moment_rss(obj_, beta);
    c.gamma = profiled_gamma(rss, obj_.W);
    c.q = gaussian_q(rss, obj_.W, c.gamma);
    return c;
  }

 private:
  Candidate solve_gaussian(const std::vector<Index>& idx) const {
    const Index m = static_cast<Index>(idx.size());
    Matrix G(m, m);
    Vector b(m);
    for (Index a = 0; a < m; ++a) {
      b[a] = obj_.xs1[idx[static_cast<std::size_t>(a)]];
      for (Index c = 0; c < m; ++c)
        G(a, c) = (*obj_.gram)(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(c)]);
    }
    Eigen::LDLT<Matrix> ldlt(G);
    Vector sol;
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() &&
        ldlt.vectorD().minCoeff() > 1e-12 * std::max(1.0, ldlt.vectorD().maxCoeff())) {
      sol = ldlt.solve(b);
    } else {
      G.diagonal().array() += 1e-8 * std::max(G.trace(), 1e-12);
      sol = G.ldlt().solve(b);
    }
    Vector beta = Vector::Zero(dim_);
    for (Index a = 0; a < m; ++a)
      beta[idx[static_cast<std::size_t>(a)]] = std::clamp(sol[a], -opts_.box_bound, opts_.box_bound);
    Candidate c = profile(beta);
    c.ok = std::isfinite(c.q);
    return c;
  }

  Candidate solve_newton(const std::vector<Index>& idx, const Vector& warm) const {
    const Index m = static_cast<Index>(idx.size());
    const Matrix& Xf = *obj_.X;
    const Index P = Xf.rows();
    Matrix X(P, m);
    for (Index a = 0; a < m; ++a) X.col(a) = Xf.col(idx[static_cast<std::size_t>(a)]);
    const bool poisson = obj_.kind == FamilyKind::Poisson;
    auto value = [&](const Vector& b) {
      const Vector eta = X * b;
      double q = 0.0;
      for (Index c = 0; c < P; ++c)
        q += obj_.s1[c] * eta[c] - obj_.w[c] * (poisson ? std::exp(eta[c]) : log1p_exp(eta[c]));
      return q;
    };
    const double box = opts_.box_bound;
    Vector b(m);
    for (Index a = 0; a < m; ++a) b[a] = std::clamp(warm[idx[static_cast<std::size_t>(a)]], -box, box);
    double q = value(b);
    bool ok = std::isfinite(q);
    Vector grad(m), mu(P), curv(P);
    for (Index it = 0; ok && it < opts_.newton_max_iter; ++it) {
      const Vector eta = X * b;
      for (Index c = 0; c < P; ++c) {
        if (poisson) {
          mu[c] = std::exp(eta[c]);
          curv[c] = mu[c];
        } else {
          mu[c] = sigmoid(eta[c]);
          curv[c] = mu[c] * (1.0 - mu[c]);
        }
      }
      grad = X.transpose() * (obj_.s1 - obj_.w.cwiseProduct(mu));
      Matrix H = X.transpose() * (obj_.w.cwiseProduct(curv)).asDiagonal() * X;
      H.diagonal().array() += 1e-9 * (1.0 + H.diagonal().maxCoeff());
      // Coordinates held at the box by an outward gradient stay fixed.
      std::vector<Index> free;
      for (Index a = 0; a < m; ++a)
        if (!((b[a] >= box && grad[a] > 0.0) || (b[a] <= -box && grad[a] < 0.0))) free.push_back(a);
      if (free.empty()) break;
      const Index f = static_cast<Index>(free.size());
      Matrix Hf(f, f);
      Vector gf(f);
      for (Index a = 0; a < f; ++a) {
        gf[a] = grad[free[static_cast<std::size_t>(a)]];
        for (Index c = 0; c < f; ++c) Hf(a, c) = H(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(c)]);
      }
      const Vector sf = Hf.ldlt().solve(gf);
      Vector step = Vector::Zero(m);
      for (Index a = 0; a < f; ++a) step[free[static_cast<std::size_t>(a)]] = sf[a];
      if (!step.allFinite()) {
        ok = false;
        break;
      }
      double t = 1.0;
      Vector next;
      double qn = -std::numeric_limits<double>::infinity();
      for (int ls = 0; ls < 40; ++ls) {
        next = (b + t * step).cwiseMax(-box).cwiseMin(box);
        qn = value(next);
        if (qn >= q) break;
        t *= 0.5;
      }
      if (!(qn >= q)) break;
      const double gain = qn - q;
      const double moved = (next - b).lpNorm<Eigen::Infinity>();
      b = next;
      q = qn;
      if (gain <= 1e-10 * (1.0 + std::abs(q)) || moved < 1e-9) break;
    }
    Candidate c;
    c.beta = Vector::Zero(dim_);
    for (Index a = 0; a < m; ++a) c.beta[idx[static_cast<std::size_t>(a)]] = b[a];
    c.q = q;
    c.ok = ok && std::isfinite(q);
    return c;
  }

  const RowObjective& obj_;
  const MStepOptions& opts_;
  Index dim_;
  bool dispersion_;
};

std::uint64_t support_of(const Vector& beta) {
  std::uint64_t mask = 0;
  for (Index k = 0; k + 1 < beta.size(); ++k)
    if (beta[k + 1] != 0.0) mask |= std::uint64_t{1} << k;
  return mask;
}

}  // namespace

double row_q(const RowObjective& obj, const Vector& beta, double gamma) {
  if (has_dispersion(obj.kind)) return gaussian_q(moment_rss(obj, beta), obj.W, gamma);
  return keyed_q(obj.kind, *obj.X, obj.w, obj.s1, beta);
}

RowSolution mstep_row(const RowObjective& obj, const Penalty& pen, const Vector& warm,
                      double warm_gamma, const MStepOptions& opts) {
  RowSolver solver(obj, opts);
  const Index dim = solver.dim();
  const Index K = dim - 1;
  require(warm.size() == dim, ErrorCode::Shape, "warm start has the wrong length");
  require(K <= kMaxLayerWidth, ErrorCode::Capacity, "row is too wide");

  auto slope_penalty = [&](const Vector& beta) {
    double s = 0.0;
    for (Index k = 1; k < dim; ++k) s += penalty_value(pen, beta[k]);
    return s;
  };

  RowSolution out;
  if (solver.dispersion() && pen.kind == PenaltyKind::HardThreshold) {
    Candidate full = solver.solve(K == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << K) - 1, warm);
    Vector beta = full.beta;
    for (Index k = 1; k < dim; ++k)
      if (std::abs(beta[k]) <= pen.tau) beta[k] = 0.0;
    const Candidate c = solver.profile(beta);
    out.beta = c.beta;
    out.gamma = c.gamma;
    out.objective = c.q - slope_penalty(c.beta);
    out.solver_ok = c.ok;
    return out;
  }

  // Objective at the warm start, the reference every candidate must beat.
  Candidate warm_c = solver.dispersion() ? solver.profile(warm) : solver.evaluate(warm, warm_gamma);
  double best_value = warm_c.q - slope_penalty(warm);
  if (!std::isfinite(best_value)) best_value = -std::numeric_limits<double>::infinity();
  Candidate best = warm_c;
  bool solver_ok = true;

  auto pattern_value = [&](std::uint64_t mask, Candidate& cand) {
    cand = solver.solve(mask, warm);
    if (!cand.ok) {
      solver_ok = false;
      return -std::numeric_limits<double>::infinity();
    }
    const int active = std::popcount(mask);
    switch (pen.kind) {
      case PenaltyKind::None: return cand.q;
      case PenaltyKind::HardThreshold: return cand.q - 0.5 * pen.tau * pen.tau * active;
      case PenaltyKind::TLP:
        for (Index k = 0; k < K; ++k)
          if (((mask >> k) & 1u) && std::abs(cand.beta[k + 1]) < pen.tau)
            return -std::numeric_limits<double>::infinity();
        return cand.q - pen.lambda * pen.tau * active;
    }
    return -std::numeric_limits<double>::infinity();
  };
  auto consider = [&](std::uint64_t mask) {
    Candidate cand;
    const double v = pattern_value(mask, cand);
    if (v > best_value) {
      best_value = v;
      best = std::move(cand);
    }
    return v;
  };

  const std::uint64_t all = K == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << K) - 1;
  if (pen.kind == PenaltyKind::None) {
    consider(all);
  } else if (K <= opts.exact_support_dim) {
    for (std::uint64_t mask = 0; mask <= all; ++mask) consider(mask);
  } else {
    // Greedy single-coordinate moves from the warm support.
    std::uint64_t mask = support_of(warm);
    Candidate cand;
    double current = pattern_value(mask, cand);
    if (current > best_value) {
      best_value = current;
      best = cand;
    }
    for (Index pass = 0; pass < 4 * K; ++pass) {
      double best_move = current;
      std::uint64_t best_mask = mask;
      for (Index k = 0; k < K; ++k) {
        const std::uint64_t trial = mask ^ (std::uint64_t{1} << k);
        const double v = consider(trial);
        if (v > best_move + 1e-9) {
          best_move = v;
          best_mask = trial;
        }
      }
      if (best_mask == mask) break;
      mask = best_mask;
      current = best_move;
    }
  }

  out.beta = best.beta;
  out.gamma = solver.dispersion() ? best.gamma : 1.0;
  out.objective = best_value;
  out.solver_ok = solver_ok;
  return out;
}

// ---------------------------------------------------------------------------
// Gibbs sampling

namespace {

struct GibbsPlan {
  const DdeModel* model;
  std::vector<FamilyKind> kinds;
  // children[d-1][l]: rows of B^(d) with a nonzero slope on latent l.
  std::vector<std::vector<std::vector<Index>>> children;
  Vector top_logit;
};

GibbsPlan make_plan(const DdeModel& model) {
  GibbsPlan plan;
  plan.model = &model;
  plan.kinds = model.family.column_kinds(model.J);
  for (const Matrix& B : model.B) {
    std::vector<std::vector<Index>> lists(static_cast<std::size_t>(B.cols() - 1));
    for (Index l = 1; l < B.cols(); ++l)
      for (Index r = 0; r < B.rows(); ++r)
        if (B(r, l) != 0.0) lists[static_cast<std::size_t>(l - 1)].push_back(r);
    plan.children.push_back(std::move(lists));
  }
  plan.top_logit = (model.p.array().log() - (1.0 - model.p.array()).log()).matrix();
  return plan;
}

void gibbs_rows(const GibbsPlan& plan, const RowMatrix& Y, LatentAssignment& A,
                std::uint64_t seed, Index begin, Index end) {
  const DdeModel& model = *plan.model;
  const Index D = model.depth();
  std::vector<Vector> eta(static_cast<std::size_t>(D));  // eta[d-1] = B^(d) [1, a^(d)]
  std::vector<double> gamma(static_cast<std::size_t>(model.J), 1.0);
  for (Index j = 0; j < model.gamma.size(); ++j) gamma[static_cast<std::size_t>(j)] = model.gamma[j];
  for (Index i = begin; i < end; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    for (Index d = 1; d <= D; ++d) {
      const Matrix& B = model.B[static_cast<std::size_t>(d - 1)];
      const auto& a = A.layers[static_cast<std::size_t>(d - 1)];
      Vector e = B.col(0);
      for (Index l = 0; l < a.cols(); ++l)
        if (a(i, l)) e += B.col(l + 1);
      eta[static_cast<std::size_t>(d - 1)] = std::move(e);
    }
    for (Index d = D; d >= 1; --d) {
      auto& a = A.layers[static_cast<std::size_t>(d - 1)];
      const Matrix& B = model.B[static_cast<std::size_t>(d - 1)];
      Vector& child_eta = eta[static_cast<std::size_t>(d - 1)];
      for (Index l = 0; l < a.cols(); ++l) {
        double logit = d == D ? plan.top_logit[l] : eta[static_cast<std::size_t>(d)][l];
        const int cur = a(i, l);
        for (Index r : plan.children[static_cast<std::size_t>(d - 1)][static_cast<std::size_t>(l)]) {
          const double b = B(r, l + 1);
          const double e0 = child_eta[r] - cur * b;
          const double e1 = e0 + b;
          if (d >= 2) {
            const double x = A.layers[static_cast<std::size_t>(d - 2)](i, r);
            logit += x * b - log1p_exp(e1) + log1p_exp(e0);
          } else {
            const FamilyKind kind = plan.kinds[static_cast<std::size_t>(r)];
            const double y = Y(i, r);
            const double g = gamma[static_cast<std::size_t>(r)];
            switch (kind) {
              case FamilyKind::Bernoulli:
                logit += y * b - log1p_exp(e1) + log1p_exp(e0);
                break;
              case FamilyKind::Poisson:
                logit += y * b - std::exp(e1) + std::exp(e0);
                break;
              case FamilyKind::Normal: {
                logit += ((y - e0) * (y - e0) - (y - e1) * (y - e1)) / (2.0 * g * g);
                break;
              }
              case FamilyKind::Lognormal: {
                const double ly = std::log(y);
                logit += ((ly - e0) * (ly - e0) - (ly - e1) * (ly - e1)) / (2.0 * g * g);
                break;
              }
            }
          }
        }
        const int next = rng.uniform() < sigmoid(logit) ? 1 : 0;
        if (next != cur) {
          a(i, l) = static_cast<std::uint8_t>(next);
          child_eta += (next - cur) * B.col(l + 1);
        }
      }
    }
  }
}

void gibbs_in_place(const GibbsPlan& plan, const RowMatrix& Y, LatentAssignment& A,
                    std::uint64_t seed) {
  for_each_chunk(Y.rows(), kRowChunk, [&](Index, Index begin, Index end) {
    gibbs_rows(plan, Y, A, seed, begin, end);
  });
}

void check_latents(const DdeModel& model, const LatentAssignment& A, Index N) {
  require(A.depth() == model.depth(), ErrorCode::Shape, "latent depth does not match the model");
  for (Index d = 1; d <= model.depth(); ++d) {
    const auto& a = A.layers[static_cast<std::size_t>(d - 1)];
    require(a.rows() == N && a.cols() == model.layer_size(d), ErrorCode::Shape,
            "latent layer " + std::to_string(d) + " has the wrong shape");
  }
}

}  // namespace

LatentAssignment gibbs_sweep(const Dataset& data, const DdeModel& model,
                             const LatentAssignment& current, std::uint64_t seed) {
  validate(model);
  require(data.cols() == model.J, ErrorCode::Shape, "dataset width must equal J");
  check_latents(model, current, data.rows());
  LatentAssignment out = current;
  const GibbsPlan plan = make_plan(model);
  gibbs_in_place(plan, data.Y, out, seed);
  return out;
}

// ---------------------------------------------------------------------------
// Initialisation and fitting

SpectralInit random_init(const Dataset& data, const std::vector<Index>& K,
                         const ObservedFamily& family, std::uint64_t seed) {
  require(!K.empty(), ErrorCode::InvalidArgument, "at least one latent layer is required");
  SpectralInit out;
  DdeModel& m = out.model0;
  m.K = K;
  m.J = data.cols();
  m.family = family;
  Rng rng(seed);
  m.p.resize(K.back());
  for (Index k = 0; k < m.p.size(); ++k) m.p[k] = std::clamp(rng.uniform(), 1e-3, 1.0 - 1e-3);
  for (Index d = 1; d <= m.depth(); ++d) {
    Matrix B(m.layer_size(d - 1), m.layer_size(d) + 1);
    for (Index r = 0; r < B.rows(); ++r) {
      B(r, 0) = -rng.uniform();
      for (Index l = 1; l < B.cols(); ++l) B(r, l) = rng.uniform();
    }
    m.B.push_back(std::move(B));
  }
  if (family.has_dispersion()) {
    m.gamma.resize(m.J);
    for (Index j = 0; j < m.J; ++j) m.gamma[j] = 0.5 + rng.uniform();
  }
  validate(m);
  out.A0 = sample_latents(m, data.rows(), derive_seed(seed, 0x5eed));
  out.G0 = graphs_from_coefficients(m);
  return out;
}

namespace {

struct Layout {
  std::vector<std::vector<FamilyKind>> row_kinds;  // per layer d
};

Layout make_layout(const DdeModel& model) {
  Layout out;
  out.row_kinds.push_back(model.family.column_kinds(model.J));
  for (Index d = 2; d <= model.depth(); ++d)
    out.row_kinds.emplace_back(static_cast<std::size_t>(model.layer_size(d - 1)), FamilyKind::Bernoulli);
  return out;
}

// Observed responses on the scale the M-step works with (log for lognormal).
RowMatrix working_responses(const Dataset& data, const std::vector<FamilyKind>& kinds) {
  RowMatrix R = data.Y;
  for (Index j = 0; j < R.cols(); ++j)
    if (kinds[static_cast<std::size_t>(j)] == FamilyKind::Lognormal) R.col(j) = R.col(j).array().log();
  return R;
}

std::vector<DesignStats> empty_stats(const DdeModel& model, const Layout& layout) {
  std::vector<DesignStats> out;
  for (Index d = 1; d <= model.depth(); ++d)
    out.emplace_back(model.layer_size(d), layout.row_kinds[static_cast<std::size_t>(d - 1)]);
  return out;
}

struct MStepResult {
  double objective = 0.0;
  Index failures = 0;
};

MStepResult mstep_all(DdeModel& model, const std::vector<DesignStats>& stats,
                      const Layout& layout, const std::vector<Penalty>& pens,
                      const MStepOptions& opts) {
  MStepResult res;
  for (Index d = 1; d <= model.depth(); ++d) {
    const DesignStats& st = stats[static_cast<std::size_t>(d - 1)];
    Matrix& B = model.B[static_cast<std::size_t>(d - 1)];
    const auto& kinds = layout.row_kinds[static_cast<std::size_t>(d - 1)];
    const Matrix X = st.keyed() ? st.design() : Matrix();
    const Vector w = st.keyed() ? st.weights() : Vector();
    const Index R = B.rows();
    std::vector<RowSolution> sols(static_cast<std::size_t>(R));
    for_each_chunk(R, 1, [&](Index, Index r, Index) {
      RowObjective obj;
      obj.kind = kinds[static_cast<std::size_t>(r)];
      if (has_dispersion(obj.kind)) {
        obj.gram = &st.gram();
        obj.xs1 = st.cross_moments(r);
        obj.s2 = st.child_squares(r);
        obj.W = st.total_weight();
      } else {
        obj.X = &X;
        obj.w = w;
        obj.s1 = st.child_sums(r);
      }
      const Vector warm = B.row(r).transpose();
      const double g = d == 1 && model.gamma.size() ? model.gamma[r] : 1.0;
      sols[static_cast<std::size_t>(r)] = mstep_row(obj, pens[static_cast<std::size_t>(d - 1)], warm, g, opts);
    });
    for (Index r = 0; r < R; ++r) {
      const RowSolution& s = sols[static_cast<std::size_t>(r)];
      if (!s.solver_ok) ++res.failures;
      if (!s.beta.allFinite()) continue;
      B.row(r) = s.beta.transpose();
      if (d == 1 && has_dispersion(kinds[static_cast<std::size_t>(r)])) model.gamma[r] = s.gamma;
      res.objective += s.objective;
    }
  }
  return res;
}

MStepOptions mstep_options(const FitConfig& cfg) {
  return {cfg.box_bound, cfg.newton_max_iter, cfg.exact_support_dim};
}

void check_fit_inputs(const Dataset& data, const FitConfig& cfg, const SpectralInit& init) {
  validate(cfg);
  validate(init.model0);
  validate_dataset(data, init.model0.family);
  require(data.cols() == init.model0.J, ErrorCode::Shape, "dataset width must equal J");
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Config pack_row(const BinaryMatrix& a, Index i) {
  Config c = 0;
  for (Index k = 0; k < a.cols(); ++k)
    if (a(i, k)) c |= Config{1} << k;
  return c;
}

// Exact conditional of latent layer d given the sampled layers d-1 and d+1,
// used for the layer-d statistics when 2^K^(d) is small.
struct LayerConditional {
  bool active = false;
  Matrix eta;       // K^(d-1) x 2^K^(d)
  Vector base;      // sum_k -log(1 + exp(eta(k, c)))
  Matrix bits;      // 2^K^(d) x K^(d)
  Vector top_prior; // log prior per config (top layer only)
};

std::vector<LayerConditional> make_conditionals(const DdeModel& model, Index cap) {
  const Index D = model.depth();
  std::vector<LayerConditional> out(static_cast<std::size_t>(D + 1));
  for (Index d = 2; d <= D; ++d) {
    const Index K = model.layer_size(d);
    if (K > cap) continue;
    LayerConditional& lc = out[static_cast<std::size_t>(d)];
    lc.active = true;
    const Index C = Index{1} << K;
    const Matrix& B = model.B[static_cast<std::size_t>(d - 1)];
    lc.bits.resize(C, K);
    for (Index c = 0; c < C; ++c)
      for (Index k = 0; k < K; ++k) lc.bits(c, k) = config_bit(static_cast<Config>(c), k);
    lc.eta = (lc.bits * B.rightCols(K).transpose()).transpose();
    lc.eta.colwise() += B.col(0);
    lc.base = -lc.eta.unaryExpr([](double x) { return log1p_exp(x); }).colwise().sum().transpose();
    if (d == D) {
      const Vector lp = model.p.array().log().matrix();
      const Vector lq = (1.0 - model.p.array()).log().matrix();
      lc.top_prior = lc.bits * (lp - lq) + Vector::Constant(C, lq.sum());
    }
  }
  return out;
}

// Normalised weights over the configurations of layer d for row i.
void conditional_weights(const DdeModel& model, const LayerConditional& lc, const LatentAssignment& A,
                         Index d, Index i, Vector& w, std::vector<double>& scratch) {
  const auto& child = A.layers[static_cast<std::size_t>(d - 2)];
  const Index rows = child.cols();
  w = lc.base;
  for (Index k = 0; k < rows; ++k)
    if (child(i, k)) w += lc.eta.row(k).transpose();
  if (d == model.depth()) {
    w += lc.top_prior;
  } else {
    const Matrix& Bup = model.B[static_cast<std::size_t>(d)];
    const auto& parent = A.layers[static_cast<std::size_t>(d)];
    const Index K = lc.bits.cols();
    scratch.assign(static_cast<std::size_t>(K), 0.0);
    for (Index l = 0; l < K; ++l) {
      double e = Bup(l, 0);
      for (Index m = 0; m < parent.cols(); ++m)
        if (parent(i, m)) e += Bup(l, m + 1);
      scratch[static_cast<std::size_t>(l)] = e;
    }
    for (Index c = 0; c < w.size(); ++c) {
      double lp = 0.0;
      for (Index l = 0; l < K; ++l) {
        const double e = scratch[static_cast<std::size_t>(l)];
        lp += lc.bits(c, l) * e - log1p_exp(e);
      }
      w[c] += lp;
    }
  }
  const double top = w.maxCoeff();
  w = (w.array() - top).exp().matrix();
  w /= w.sum();
}

double parameter_distance(const DdeModel& a, const DdeModel& b) {
  double s = (a.p - b.p).squaredNorm();
  for (std::size_t d = 0; d < a.B.size(); ++d) s += (a.B[d] - b.B[d]).squaredNorm();
  if (a.gamma.size()) s += (a.gamma - b.gamma).squaredNorm();
  return std::sqrt(s);
}

}  // namespace

namespace {

// Unconstrained coordinates: B entries, log gamma, logit p.
Vector pack_free(const DdeModel& m) {
  Index n = m.gamma.size() + m.p.size();
  for (const Matrix& B : m.B) n += B.size();
  Vector v(n);
  Index at = 0;
  for (const Matrix& B : m.B)
    for (Index j = 0; j < B.rows(); ++j)
      for (Index k = 0; k < B.cols(); ++k) v[at++] = B(j, k);
  for (Index j = 0; j < m.gamma.size(); ++j) v[at++] = std::log(m.gamma[j]);
  for (Index k = 0; k < m.p.size(); ++k) v[at++] = std::log(m.p[k] / (1.0 - m.p[k]));
  return v;
}

// Inverse of pack_free; slopes that are zero in `pattern` stay zero.
DdeModel unpack_free(const Vector& v, const DdeModel& pattern, double box) {
  DdeModel out = pattern;
  Index at = 0;
  for (std::size_t d = 0; d < out.B.size(); ++d)
    for (Index j = 0; j < out.B[d].rows(); ++j)
      for (Index k = 0; k < out.B[d].cols(); ++k, ++at)
        if (k == 0 || pattern.B[d](j, k) != 0.0) out.B[d](j, k) = std::clamp(v[at], -box, box);
  for (Index j = 0; j < out.gamma.size(); ++j) out.gamma[j] = std::exp(std::clamp(v[at++], -30.0, 30.0));
  for (Index k = 0; k < out.p.size(); ++k) out.p[k] = std::clamp(sigmoid(v[at++]), 1e-10, 1.0 - 1e-10);
  return out;
}

struct PemStep {
  std::vector<DesignStats> stats;
  Vector top;
  double objective = 0.0;
};

}  // namespace

FitReport pem_fit(const Dataset& data, const FitConfig& cfg, const SpectralInit& init) {
  const auto start = std::chrono::steady_clock::now();
  check_fit_inputs(data, cfg, init);
  FitReport report;
  report.algo = Algorithm::PEM;
  report.seed = cfg.seed;
  report.model_hat = init.model0;
  DdeModel& model = report.model_hat;
  {
    ChainTables probe(model, cfg.enumeration_cap);
  }
  const Index N = data.rows();
  const Index D = model.depth();
  const auto pens = resolved_penalties(cfg, N, D);
  const double conv = cfg.conv_pem > 0.0 ? cfg.conv_pem : static_cast<double>(N) / 500.0;
  const Layout layout = make_layout(model);
  const RowMatrix R = working_responses(data, layout.row_kinds[0]);
  const MStepOptions opts = mstep_options(cfg);
  const Index chunks = (N + kRowChunk - 1) / kRowChunk;
  const Index Ktop = model.layer_size(D);

  const auto estep = [&](const DdeModel& current) {
    const ChainTables tables(current, cfg.enumeration_cap);
    std::vector<std::vector<DesignStats>> partial(static_cast<std::size_t>(chunks));
    std::vector<Vector> top_means(static_cast<std::size_t>(chunks));
    std::vector<double> lls(static_cast<std::size_t>(chunks), 0.0);
    for_each_chunk(N, kRowChunk, [&](Index c, Index begin, Index end) {
      auto stats = empty_stats(current, layout);
      for (Index d = 1; d <= D; ++d)
        for (Index key = 0; key < tables.num_configs(d); ++key)
          if (stats[static_cast<std::size_t>(d - 1)].keyed())
            stats[static_cast<std::size_t>(d - 1)].find_or_add(static_cast<Config>(key));
      Vector top = Vector::Zero(Ktop);
      double ll_sum = 0.0;
      std::vector<double> child(static_cast<std::size_t>(std::max<Index>(current.J, 64)));
      for (Index i = begin; i < end; ++i) {
        const Vector obs = tables.observation_loglik(data.Y.row(i));
        const auto beta = tables.backward(obs);
        const double ll = log_sum_exp(tables.log_prior(1) + obs);
        ll_sum += ll;
        const Vector q1 = (tables.log_prior(1) + obs).array() - ll;
        for (Index cfg1 = 0; cfg1 < q1.size(); ++cfg1) {
          const double wgt = std::exp(q1[cfg1]);
          if (wgt == 0.0) continue;
          stats[0].add(static_cast<Config>(cfg1), wgt, R.row(i).data());
        }
        for (Index d = 2; d <= D; ++d) {
          const Matrix& T = tables.log_transition(d);
          const Vector& m = tables.log_prior(d);
          const Vector& below = beta[static_cast<std::size_t>(d - 2)];
          const Index rows = current.layer_size(d - 1);
          for (Index cpar = 0; cpar < T.cols(); ++cpar) {
            double wsum = 0.0;
            std::fill(child.begin(), child.begin() + rows, 0.0);
            for (Index r = 0; r < T.rows(); ++r) {
              const double pr = std::exp(m[cpar] + T(r, cpar) + below[r] - ll);
              if (pr == 0.0) continue;
              wsum += pr;
              for (Index k = 0; k < rows; ++k)
                if (config_bit(static_cast<Config>(r), k)) child[static_cast<std::size_t>(k)] += pr;
            }
            stats[static_cast<std::size_t>(d - 1)].add_weighted(static_cast<Config>(cpar), wsum, child.data());
          }
        }
        const Vector qtop = D == 1 ? Vector(q1.array().exp())
                                   : Vector((tables.log_prior(D) + beta[static_cast<std::size_t>(D - 1)]).array() - ll).array().exp().matrix();
        for (Index ctop = 0; ctop < qtop.size(); ++ctop)
          for (Index k = 0; k < Ktop; ++k)
            if (config_bit(static_cast<Config>(ctop), k)) top[k] += qtop[ctop];
      }
      partial[static_cast<std::size_t>(c)] = std::move(stats);
      top_means[static_cast<std::size_t>(c)] = top;
      lls[static_cast<std::size_t>(c)] = ll_sum;
    });
    PemStep out;
    out.stats = std::move(partial[0]);
    out.top = top_means[0];
    for (Index c = 1; c < chunks; ++c) {
      for (Index d = 0; d < D; ++d)
        out.stats[static_cast<std::size_t>(d)].merge(partial[static_cast<std::size_t>(c)][static_cast<std::size_t>(d)]);
      out.top += top_means[static_cast<std::size_t>(c)];
    }
    double ll = 0.0;
    for (double v : lls) ll += v;
    out.objective = ll - total_penalty(current, pens);
    return out;
  };
  const auto mstep = [&](const DdeModel& current, const PemStep& e) {
    DdeModel next = current;
    const MStepResult m = mstep_all(next, e.stats, layout, pens, opts);
    report.solver_failures += m.failures;
    next.p = (e.top / static_cast<double>(N)).cwiseMax(1e-10).cwiseMin(1.0 - 1e-10);
    return next;
  };

  PemStep e0 = estep(model);
  for (Index it = 0;; ++it) {
    if (!std::isfinite(e0.objective))
      fail(ErrorCode::Numeric, "non-finite objective at iteration " + std::to_string(it));
    report.objective_trace.push_back(e0.objective);
    const std::size_t n = report.objective_trace.size();
    if (n >= 2 && std::abs(report.objective_trace[n - 1] - report.objective_trace[n - 2]) < conv) {
      report.converged = true;
      break;
    }
    if (it >= cfg.max_iter) break;

    DdeModel m1 = mstep(model, e0);
    if (!cfg.accelerate) {
      model = std::move(m1);
      e0 = estep(model);
      report.iters = it + 1;
      continue;
    }
    PemStep e1 = estep(m1);
    DdeModel m2 = mstep(m1, e1);
    const Vector x0 = pack_free(model), x1 = pack_free(m1), x2 = pack_free(m2);
    const Vector r = x1 - x0;
    const Vector v = x2 - x1 - r;
    double alpha = v.norm() > 0.0 ? -r.norm() / v.norm() : -1.0;
    DdeModel base = m2;
    PemStep eb;
    bool have_eb = false;
    for (Index tries = 0; alpha < -1.0 && tries < 6; ++tries) {
      DdeModel cand = unpack_free(x0 - 2.0 * alpha * r + alpha * alpha * v, m2, cfg.box_bound);
      PemStep ec = estep(cand);
      if (std::isfinite(ec.objective) && ec.objective >= e0.objective) {
        base = std::move(cand);
        eb = std::move(ec);
        have_eb = true;
        break;
      }
      alpha = 0.5 * (alpha - 1.0);
    }
    if (!have_eb) eb = estep(base);
    model = mstep(base, eb);
    e0 = estep(model);
    report.iters = it + 1;
  }
  report.graphs_hat = graphs_from_coefficients(model);
  report.wallclock_seconds = seconds_since(start);
  return report;
}

FitReport saem_fit(const Dataset& data, const FitConfig& cfg, const SpectralInit& init) {
  const auto start = std::chrono::steady_clock::now();
  check_fit_inputs(data, cfg, init);
  FitReport report;
  report.algo = Algorithm::SAEM;
  report.seed = cfg.seed;
  report.model_hat = init.model0;
  DdeModel& model = report.model_hat;
  const Index N = data.rows();
  const Index D = model.depth();
  check_latents(model, init.A0, N);
  report.latents = init.A0;
  LatentAssignment& A = report.latents;
  const auto pens = resolved_penalties(cfg, N, D);
  const double conv = cfg.conv_saem > 0.0 ? cfg.conv_saem : 0.5 * static_cast<double>(model.layer_size(D));
  const Layout layout = make_layout(model);
  const RowMatrix R = working_responses(data, layout.row_kinds[0]);
  const MStepOptions opts = mstep_options(cfg);
  auto stats = empty_stats(model, layout);
  const double p_lo = 0.5 / static_cast<double>(N);

  std::vector<double> child(static_cast<std::size_t>(std::max<Index>(model.J, 64)));
  std::vector<double> scratch;
  Vector weights;
  for (Index t = 1; t <= cfg.max_iter; ++t) {
    const std::uint64_t seed_t = derive_seed(cfg.seed, static_cast<std::uint64_t>(t));
    auto counts = empty_stats(model, layout);
    const double unit = 1.0 / static_cast<double>(cfg.gibbs_C);
    const GibbsPlan plan = make_plan(model);
    const auto conditionals = make_conditionals(model, cfg.marginal_latent_dim);
    const LayerConditional& top_cond = conditionals[static_cast<std::size_t>(D)];
    Vector top_sum = Vector::Zero(model.layer_size(D));
    for (Index c = 0; c < cfg.gibbs_C; ++c) {
      gibbs_in_place(plan, data.Y, A, derive_seed(seed_t, static_cast<std::uint64_t>(c)));
      for (Index i = 0; i < N; ++i) {
        counts[0].add(pack_row(A.layers[0], i), unit, R.row(i).data());
        for (Index d = 2; d <= D; ++d) {
          const auto& below = A.layers[static_cast<std::size_t>(d - 2)];
          const LayerConditional& lc = conditionals[static_cast<std::size_t>(d)];
          DesignStats& st = counts[static_cast<std::size_t>(d - 1)];
          if (!lc.active) {
            for (Index k = 0; k < below.cols(); ++k) child[static_cast<std::size_t>(k)] = below(i, k);
            st.add(pack_row(A.layers[static_cast<std::size_t>(d - 1)], i), unit, child.data());
            continue;
          }
          conditional_weights(model, lc, A, d, i, weights, scratch);
          for (Index cfg_d = 0; cfg_d < weights.size(); ++cfg_d) {
            const double wc = weights[cfg_d] * unit;
            if (wc == 0.0) continue;
            for (Index k = 0; k < below.cols(); ++k) child[static_cast<std::size_t>(k)] = wc * below(i, k);
            st.add_weighted(static_cast<Config>(cfg_d), wc, child.data());
          }
          if (d == D) top_sum += top_cond.bits.transpose() * weights * unit;
        }
      }
    }
    if (!top_cond.active) top_sum = A.layers.back().cast<double>().colwise().sum().transpose();
    const double theta = t <= cfg.burn_in ? 1.0 : std::pow(static_cast<double>(t - cfg.burn_in), -cfg.step_exponent);
    for (Index d = 0; d < D; ++d)
      stats[static_cast<std::size_t>(d)].blend(counts[static_cast<std::size_t>(d)], theta);

    const DdeModel previous = model;
    const MStepResult m = mstep_all(model, stats, layout, pens, opts);
    report.solver_failures += m.failures;
    const Vector means = top_sum / static_cast<double>(N);
    model.p = means.cwiseMax(p_lo).cwiseMin(1.0 - p_lo);
    double prior_term = 0.0;
    for (Index k = 0; k < model.p.size(); ++k)
      prior_term += static_cast<double>(N) *
                    (means[k] * std::log(model.p[k]) + (1.0 - means[k]) * std::log1p(-model.p[k]));
    report.objective_trace.push_back(m.objective + prior_term);
    report.iters = t;
    if (t > cfg.burn_in && parameter_distance(model, previous) < conv) {
      report.converged = true;
      break;
    }
  }
  report.graphs_hat = graphs_from_coefficients(model);
  report.wallclock_seconds = seconds_since(start);
  return report;
}

FitReport fit(const Dataset& data, const FitConfig& cfg, const SpectralInit& init) {
  return cfg.algo == Algorithm::PEM ? pem_fit(data, cfg, init) : saem_fit(data, cfg, init);
}

}  // namespace dde
