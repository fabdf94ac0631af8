#pragma once

#include "dde/model.hpp"
#include "dde/rng.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

namespace dde::testing {

inline double chi2_critical(double df, double alpha) {
  return boost::math::quantile(boost::math::complement(boost::math::chi_squared(df), alpha));
}

// Pearson statistic with sparse cells pooled into one bin (expected < 5).
struct Chi2 {
  double statistic = 0.0;
  double df = 0.0;
};

inline Chi2 pearson(const std::vector<double>& observed, const std::vector<double>& probs, double n) {
  Chi2 out;
  double pooled_obs = 0.0, pooled_exp = 0.0;
  Index bins = 0;
  for (std::size_t c = 0; c < probs.size(); ++c) {
    const double e = probs[c] * n;
    if (e < 5.0) {
      pooled_obs += observed[c];
      pooled_exp += e;
      continue;
    }
    out.statistic += (observed[c] - e) * (observed[c] - e) / e;
    ++bins;
  }
  if (pooled_exp > 0.0) {
    out.statistic += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / std::max(pooled_exp, 1e-300);
    ++bins;
  }
  out.df = static_cast<double>(bins - 1);
  return out;
}

inline Config row_code(const RowMatrix& Y, Index i) {
  Config c = 0;
  for (Index j = 0; j < Y.cols(); ++j)
    if (Y(i, j) != 0.0) c |= Config{1} << j;
  return c;
}

// Random Bernoulli model with nonnegative-sum slope columns.
inline DdeModel random_bernoulli_model(Index J, const std::vector<Index>& K, Rng& rng) {
  DdeModel m;
  m.K = K;
  m.J = J;
  m.family = ObservedFamily::uniform(FamilyKind::Bernoulli);
  m.p = Vector(K.back());
  for (Index k = 0; k < m.p.size(); ++k) m.p[k] = 0.2 + 0.6 * rng.uniform();
  for (Index d = 1; d <= m.depth(); ++d) {
    const Index rows = m.layer_size(d - 1), cols = m.layer_size(d);
    Matrix B(rows, cols + 1);
    for (Index r = 0; r < rows; ++r) {
      B(r, 0) = -1.5 + 1.5 * rng.uniform();
      for (Index c = 1; c <= cols; ++c) B(r, c) = 0.5 + 2.5 * rng.uniform();
    }
    m.B.push_back(B);
  }
  validate(m);
  return m;
}

}  // namespace dde::testing
