#include "mosaic/cardinality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mosaic {

std::vector<double> esf_all(std::span<const double> values) {
  const std::size_t m = values.size();
  std::vector<double> sigma(m + 1, 0.0);
  sigma[0] = 1.0;
  for (std::size_t i = 0; i < m; ++i) {
    // In-place downward sweep keeps the recurrence on one row.
    for (std::size_t n = std::min(i + 1, m); n >= 1; --n) {
      sigma[n] += values[i] * sigma[n - 1];
    }
  }
  return sigma;
}

double esf(std::span<const double> values, int degree) {
  if (degree < 0) {
    throw std::invalid_argument("esf: degree must be nonnegative");
  }
  const int m = static_cast<int>(values.size());
  if (degree == 0) return 1.0;
  if (degree > m) return 0.0;
  std::vector<double> sigma(static_cast<std::size_t>(degree) + 1, 0.0);
  sigma[0] = 1.0;
  for (int i = 0; i < m; ++i) {
    for (int n = std::min(i + 1, degree); n >= 1; --n) {
      sigma[n] += values[i] * sigma[n - 1];
    }
  }
  return sigma[degree];
}

CardinalityDistribution mb_cardinality(const BernoulliSet& b, int n_max) {
  if (n_max < 0) {
    throw std::invalid_argument("mb_cardinality: n_max must be nonnegative");
  }
  std::vector<double> odds;
  odds.reserve(b.existence.size());
  double survive_all = 1.0;  // prod_j (1 - r_j)
  for (double r : b.existence) {
    if (!(r >= 0.0) || !(r <= 1.0)) {
      throw std::invalid_argument(
          "mb_cardinality: existence probability outside [0,1]: " +
          std::to_string(r));
    }
    if (r >= 1.0) r = 1.0 - kExistenceClamp;
    survive_all *= 1.0 - r;
    odds.push_back(r / (1.0 - r));
  }
  const std::vector<double> sigma = esf_all(odds);

  CardinalityDistribution p;
  p.probs.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
  const int top = std::min<int>(n_max, static_cast<int>(odds.size()));
  for (int n = 0; n <= top; ++n) {
    p.probs[static_cast<std::size_t>(n)] = survive_all * sigma[n];
  }
  double lost = 0.0;
  for (std::size_t n = static_cast<std::size_t>(n_max) + 1; n < sigma.size();
       ++n) {
    lost += survive_all * sigma[n];
  }
  if (lost > 1e-12) p.normalize();
  return p;
}

CardinalityDistribution convolve_cardinality(
    const std::vector<CardinalityDistribution>& ps, int n_max) {
  if (n_max < 0) {
    throw std::invalid_argument(
        "convolve_cardinality: n_max must be nonnegative");
  }
  // Accumulate the full-length convolution, truncate once at the end so the
  // operation is order-independent up to floating-point rounding.
  std::vector<double> acc{1.0};
  for (const auto& p : ps) {
    std::vector<double> next(acc.size() + p.probs.size() - 1, 0.0);
    for (std::size_t i = 0; i < acc.size(); ++i) {
      if (acc[i] == 0.0) continue;
      for (std::size_t j = 0; j < p.probs.size(); ++j) {
        next[i + j] += acc[i] * p.probs[j];
      }
    }
    acc = std::move(next);
  }
  CardinalityDistribution out;
  out.probs.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
  const std::size_t top = std::min(acc.size(), out.probs.size());
  std::copy(acc.begin(), acc.begin() + static_cast<std::ptrdiff_t>(top),
            out.probs.begin());
  if (!(out.sum() > 0.0)) {
    // All retained mass underflowed: the inputs place essentially all
    // probability above n_max, and the renormalized truncation collapses
    // to a point mass at the cap.
    return CardinalityDistribution::delta(n_max, n_max);
  }
  out.normalize();
  return out;
}

double expected_cardinality(const CardinalityDistribution& p) {
  double mean = 0.0;
  for (std::size_t n = 1; n < p.probs.size(); ++n) {
    mean += static_cast<double>(n) * p.probs[n];
  }
  return mean;
}

int map_cardinality(const CardinalityDistribution& p) {
  if (p.probs.empty()) {
    throw std::invalid_argument("map_cardinality: empty distribution");
  }
  std::size_t best = 0;
  for (std::size_t n = 1; n < p.probs.size(); ++n) {
    if (p.probs[n] > p.probs[best]) best = n;  // strict: ties keep smaller n
  }
  return static_cast<int>(best);
}

CardinalityDistribution poisson_cardinality(double mu, int n_max) {
  if (mu < 0.0 || !std::isfinite(mu)) {
    throw std::invalid_argument("poisson_cardinality: invalid mean " +
                                std::to_string(mu));
  }
  CardinalityDistribution p;
  p.probs.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
  if (mu == 0.0) {
    p.probs[0] = 1.0;
    return p;
  }
  // Log-space so that means far above n_max degrade to a point mass at the
  // cap instead of underflowing every retained term.
  const double log_mu = std::log(mu);
  std::vector<double> log_terms(static_cast<std::size_t>(n_max) + 1);
  double max_term = -std::numeric_limits<double>::infinity();
  for (int n = 0; n <= n_max; ++n) {
    const double term =
        -mu + static_cast<double>(n) * log_mu - std::lgamma(n + 1.0);
    log_terms[static_cast<std::size_t>(n)] = term;
    max_term = std::max(max_term, term);
  }
  for (int n = 0; n <= n_max; ++n) {
    p.probs[static_cast<std::size_t>(n)] =
        std::exp(log_terms[static_cast<std::size_t>(n)] - max_term);
  }
  p.normalize();
  return p;
}

}  // namespace mosaic
