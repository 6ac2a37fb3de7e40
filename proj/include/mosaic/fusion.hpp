#pragma once

#include "mosaic/types.hpp"

namespace mosaic {

enum class FusionRule { Gci, Aa };

/// Per-node fusion weights; pairwise fusion uses (omega, 1 - omega).
struct FusionWeights {
  std::vector<double> weights;

  static FusionWeights pairwise(double omega);
  /// Throws ConfigError unless every weight is in (0,1) and the sum is
  /// 1 within 1e-12.
  void validate() const;
};

/// Result of the closed-form geometric average of two Gaussian mixtures:
/// the unnormalized all-pairs mixture and its scalar mass C (the integral
/// of the weighted geometric mean of the inputs).
struct GciGmResult {
  GMIntensity mixture;
  double mass{0.0};
};

/// All-pairs GM geometric-average fusion. Each fused component carries
///   P_pq = [w P_p^-1 + (1-w) P_q^-1]^-1,
///   m_pq = P_pq [w P_p^-1 m_p + (1-w) P_q^-1 m_q],
/// and a weight combining the input weights, the two kappa(w, P)
/// normalizers and the Gaussian agreement factor
/// N(m_p - m_q; 0, P_p/w + P_q/(1-w)). Inputs must be nonempty.
GciGmResult gci_fuse_gm(const GMIntensity& a, const GMIntensity& b,
                        double omega);

/// Geometric-average fusion of cardinality distributions:
///   p(n) proportional to pa(n)^w * pb(n)^(1-w) * C^n
/// computed in log space, with 0^0 = 1 and zero-forcing: a zero in either
/// input forces a zero in the output. Throws NumericError when every term
/// vanishes.
CardinalityDistribution gci_fuse_cardinality(const CardinalityDistribution& pa,
                                             const CardinalityDistribution& pb,
                                             double omega, double mass_c);

/// Geometric-average fusion of two IID cluster densities. Location densities
/// are fused through gci_fuse_gm on the normalized intensities, the
/// cardinality through gci_fuse_cardinality with the resulting mass, and the
/// fused intensity is the normalized mixture scaled by the fused mean count.
/// Empty inputs collapse to the empty density (the C -> 0 limit).
IIDClusterDensity gci_fuse(const IIDClusterDensity& a,
                           const IIDClusterDensity& b, double omega);

/// Arithmetic-average fusion: intensity w*v_a + (1-w)*v_b by concatenation
/// of scaled components, cardinality w*p_a + (1-w)*p_b. Exact.
IIDClusterDensity aa_fuse(const IIDClusterDensity& a,
                          const IIDClusterDensity& b, double omega);

}  // namespace mosaic
