#pragma once

#include "mosaic/types.hpp"

namespace mosaic {

/// log N(x; mean, cov) through an SPD factorization; throws NumericError on a
/// covariance that fails the factorization.
double gaussian_log_pdf(const Vector& x, const Vector& mean, const Matrix& cov);

double gaussian_pdf(const Vector& x, const Vector& mean, const Matrix& cov);

/// Pointwise evaluation of the mixture intensity sum_p w_p N(x; m_p, P_p).
double gm_evaluate(const GMIntensity& v, const Vector& x);

/// Returns the mixture with every weight multiplied by factor.
GMIntensity gm_scale(GMIntensity v, double factor);

/// Concatenation of two mixtures (sum of intensities).
GMIntensity gm_concat(GMIntensity a, const GMIntensity& b);

struct GmReduceParams {
  double prune_threshold{1e-5};
  double merge_threshold{4.0};  // squared Mahalanobis
  int max_components{40};
};

/// Mixture reduction: drop components below prune_threshold, greedily merge
/// components within the squared Mahalanobis merge_threshold of the current
/// highest-weight component (moment-preserving merge), then keep the
/// max_components largest weights. Merging preserves mass; pruned and capped
/// mass is discarded without renormalization.
GMIntensity gm_reduce(const GMIntensity& v, double prune_threshold,
                      double merge_threshold, int max_components);

GMIntensity gm_reduce(const GMIntensity& v, const GmReduceParams& params);

}  // namespace mosaic
