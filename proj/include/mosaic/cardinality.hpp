#pragma once

#include <span>

#include "mosaic/types.hpp"

namespace mosaic {

/// Elementary symmetric function of the given degree: the sum over all
/// degree-sized subsets of products of the inputs. Degree 0 returns 1,
/// degrees above the input count return 0. Computed by the O(m*n) DP
/// recurrence sigma(m,n) = sigma(m-1,n) + beta_m * sigma(m-1,n-1), never
/// by subset enumeration.
double esf(std::span<const double> values, int degree);

/// All ESF degrees 0..m in one DP pass; entry n equals esf(values, n).
std::vector<double> esf_all(std::span<const double> values);

/// Cardinality distribution of a multi-Bernoulli set:
///   p(n) = prod_j (1 - r_j) * sigma_n(r_1/(1-r_1), ..., r_M/(1-r_M)),
/// zero-padded or truncated to n_max; renormalized when the truncated mass
/// exceeds 1e-12. Rejects existence probabilities outside [0,1].
CardinalityDistribution mb_cardinality(const BernoulliSet& b,
                                       int n_max = kMaxTargets);

/// Discrete convolution p_1 * ... * p_G, truncated at n_max and renormalized.
CardinalityDistribution convolve_cardinality(
    const std::vector<CardinalityDistribution>& ps, int n_max = kMaxTargets);

/// Mean target count sum_n n p(n).
double expected_cardinality(const CardinalityDistribution& p);

/// argmax_n p(n); ties break toward the smaller count.
int map_cardinality(const CardinalityDistribution& p);

/// Poisson(mu) law truncated to n = 0..n_max and renormalized.
CardinalityDistribution poisson_cardinality(double mu, int n_max = kMaxTargets);

}  // namespace mosaic
