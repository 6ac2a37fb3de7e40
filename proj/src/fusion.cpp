#include "mosaic/fusion.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "mosaic/cardinality.hpp"
#include "mosaic/gm.hpp"

namespace mosaic {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // log(2*pi)

void check_omega(double omega) {
  if (!(omega > 0.0) || !(omega < 1.0)) {
    throw std::invalid_argument("fusion weight must lie in (0,1), got " +
                                std::to_string(omega));
  }
}

struct ComponentFactors {
  Matrix precision;       // P^-1
  Vector precision_mean;  // P^-1 m
  double log_det;         // log det P
};

ComponentFactors factorize(const GaussianComponent& gc) {
  Eigen::LLT<Matrix> llt(gc.covariance);
  if (llt.info() != Eigen::Success) {
    throw NumericError("gci_fuse_gm: component covariance is not positive definite");
  }
  ComponentFactors f;
  const Matrix identity =
      Matrix::Identity(gc.covariance.rows(), gc.covariance.cols());
  f.precision = llt.solve(identity);
  f.precision = 0.5 * (f.precision + f.precision.transpose());
  f.precision_mean = f.precision * gc.mean;
  f.log_det = 0.0;
  for (Eigen::Index i = 0; i < gc.covariance.rows(); ++i) {
    f.log_det += 2.0 * std::log(llt.matrixL()(i, i));
  }
  return f;
}

// log kappa(w, P) = d/2 [(1-w) log(2*pi) - log w] + (1-w)/2 log det P
double log_kappa(double w, double log_det, double dim) {
  return 0.5 * dim * ((1.0 - w) * kLog2Pi - std::log(w)) +
         0.5 * (1.0 - w) * log_det;
}

}  // namespace

FusionWeights FusionWeights::pairwise(double omega) {
  check_omega(omega);
  return FusionWeights{{omega, 1.0 - omega}};
}

void FusionWeights::validate() const {
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0) || !(w < 1.0)) {
      throw ConfigError("fusion weight outside (0,1): " + std::to_string(w));
    }
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ConfigError("fusion weights must sum to 1, got " +
                      std::to_string(total));
  }
}

GciGmResult gci_fuse_gm(const GMIntensity& a, const GMIntensity& b,
                        double omega) {
  check_omega(omega);
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("gci_fuse_gm: both mixtures must be nonempty");
  }
  const double dim = static_cast<double>(a.components.front().mean.size());

  std::vector<ComponentFactors> fa, fb;
  fa.reserve(a.size());
  fb.reserve(b.size());
  for (const auto& gc : a.components) fa.push_back(factorize(gc));
  for (const auto& gc : b.components) fb.push_back(factorize(gc));

  GciGmResult result;
  result.mixture.components.reserve(a.size() * b.size());
  for (std::size_t p = 0; p < a.size(); ++p) {
    const auto& ca = a.components[p];
    if (ca.weight <= 0.0) continue;
    const double lk_a = log_kappa(omega, fa[p].log_det, dim);
    for (std::size_t q = 0; q < b.size(); ++q) {
      const auto& cb = b.components[q];
      if (cb.weight <= 0.0) continue;

      const Matrix fused_precision =
          omega * fa[p].precision + (1.0 - omega) * fb[q].precision;
      Eigen::LLT<Matrix> llt(fused_precision);
      if (llt.info() != Eigen::Success) {
        throw NumericError("gci_fuse_gm: fused precision is not positive definite");
      }
      GaussianComponent fused;
      fused.covariance = llt.solve(
          Matrix::Identity(fused_precision.rows(), fused_precision.cols()));
      fused.covariance = 0.5 * (fused.covariance + fused.covariance.transpose());
      fused.mean = fused.covariance * (omega * fa[p].precision_mean +
                                       (1.0 - omega) * fb[q].precision_mean);

      const Matrix spread =
          ca.covariance / omega + cb.covariance / (1.0 - omega);
      const double log_agreement =
          gaussian_log_pdf(ca.mean, cb.mean, spread);
      const double log_weight = omega * std::log(ca.weight) +
                                (1.0 - omega) * std::log(cb.weight) + lk_a +
                                log_kappa(1.0 - omega, fb[q].log_det, dim) +
                                log_agreement;
      fused.weight = std::exp(log_weight);
      result.mass += fused.weight;
      result.mixture.components.push_back(std::move(fused));
    }
  }
  return result;
}

CardinalityDistribution gci_fuse_cardinality(const CardinalityDistribution& pa,
                                             const CardinalityDistribution& pb,
                                             double omega, double mass_c) {
  check_omega(omega);
  if (mass_c < 0.0 || !std::isfinite(mass_c)) {
    throw std::invalid_argument("gci_fuse_cardinality: invalid mass " +
                                std::to_string(mass_c));
  }
  const std::size_t size = std::max(pa.probs.size(), pb.probs.size());
  const double log_c = std::log(mass_c);  // -inf when mass_c == 0

  std::vector<double> log_terms(size, -std::numeric_limits<double>::infinity());
  double max_term = -std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < size; ++n) {
    const double a = n < pa.probs.size() ? pa.probs[n] : 0.0;
    const double b = n < pb.probs.size() ? pb.probs[n] : 0.0;
    if (a <= 0.0 || b <= 0.0) continue;  // zero-forcing
    if (mass_c == 0.0 && n > 0) continue;  // C^n with 0^0 = 1
    const double term = omega * std::log(a) + (1.0 - omega) * std::log(b) +
                        (n > 0 ? static_cast<double>(n) * log_c : 0.0);
    log_terms[n] = term;
    max_term = std::max(max_term, term);
  }
  if (!std::isfinite(max_term)) {
    throw NumericError(
        "gci_fuse_cardinality: degenerate fusion, all terms vanish");
  }
  CardinalityDistribution out;
  out.probs.assign(size, 0.0);
  for (std::size_t n = 0; n < size; ++n) {
    if (std::isfinite(log_terms[n])) {
      out.probs[n] = std::exp(log_terms[n] - max_term);
    }
  }
  out.normalize();
  return out;
}

IIDClusterDensity gci_fuse(const IIDClusterDensity& a,
                           const IIDClusterDensity& b, double omega) {
  check_omega(omega);
  const double mass_a = a.intensity.mass();
  const double mass_b = b.intensity.mass();
  const int n_max =
      std::max(a.cardinality.max_n(), b.cardinality.max_n());
  if (a.intensity.empty() || b.intensity.empty() || mass_a <= 0.0 ||
      mass_b <= 0.0) {
    return IIDClusterDensity::empty_density(n_max);
  }
  // Fuse the normalized location densities so that the scalar mass is the
  // integral of the geometric mean of two unit-mass densities.
  const GciGmResult fused = gci_fuse_gm(gm_scale(a.intensity, 1.0 / mass_a),
                                        gm_scale(b.intensity, 1.0 / mass_b),
                                        omega);
  // The exact integral of a weighted geometric mean of two unit-mass
  // densities never exceeds 1 (Hoelder); the all-pairs closed form can
  // overshoot for overlapping mixtures, so cap the cardinality tilt.
  const double card_mass = std::min(fused.mass, 1.0);
  CardinalityDistribution card =
      gci_fuse_cardinality(a.cardinality, b.cardinality, omega, card_mass);
  IIDClusterDensity out;
  if (fused.mass > 0.0) {
    const double mean = expected_cardinality(card);
    out.intensity = gm_scale(fused.mixture, mean / fused.mass);
  }
  out.cardinality = std::move(card);
  return out;
}

IIDClusterDensity aa_fuse(const IIDClusterDensity& a,
                          const IIDClusterDensity& b, double omega) {
  check_omega(omega);
  IIDClusterDensity out;
  out.intensity = gm_concat(gm_scale(a.intensity, omega),
                            gm_scale(b.intensity, 1.0 - omega));
  const std::size_t size =
      std::max(a.cardinality.probs.size(), b.cardinality.probs.size());
  out.cardinality.probs.assign(size, 0.0);
  for (std::size_t n = 0; n < size; ++n) {
    const double pa = n < a.cardinality.probs.size() ? a.cardinality.probs[n] : 0.0;
    const double pb = n < b.cardinality.probs.size() ? b.cardinality.probs[n] : 0.0;
    out.cardinality.probs[n] = omega * pa + (1.0 - omega) * pb;
  }
  return out;
}

}  // namespace mosaic
