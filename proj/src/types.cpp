#include "mosaic/types.hpp"

#include <cmath>

namespace mosaic {

void validate_component(const GaussianComponent& gc) {
  if (!(gc.weight >= 0.0)) {
    throw NumericError("gaussian component has negative weight " +
                       std::to_string(gc.weight));
  }
  if (gc.mean.size() != gc.covariance.rows() ||
      gc.covariance.rows() != gc.covariance.cols()) {
    throw NumericError("gaussian component has inconsistent dimensions");
  }
  const double scale = std::max(1.0, gc.covariance.cwiseAbs().maxCoeff());
  const double asym = (gc.covariance - gc.covariance.transpose())
                          .cwiseAbs()
                          .maxCoeff();
  if (asym > 1e-9 * scale) {
    throw NumericError("gaussian component covariance is not symmetric");
  }
  Eigen::LLT<Matrix> llt(gc.covariance);
  if (llt.info() != Eigen::Success) {
    throw NumericError("gaussian component covariance is not positive definite");
  }
}

double GMIntensity::mass() const {
  double total = 0.0;
  for (const auto& gc : components) total += gc.weight;
  return total;
}

CardinalityDistribution CardinalityDistribution::delta(int n, int n_max) {
  if (n < 0 || n > n_max) {
    throw std::invalid_argument("cardinality delta outside [0, n_max]");
  }
  CardinalityDistribution p;
  p.probs.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
  p.probs[static_cast<std::size_t>(n)] = 1.0;
  return p;
}

double CardinalityDistribution::sum() const {
  double total = 0.0;
  for (double v : probs) total += v;
  return total;
}

void CardinalityDistribution::normalize() {
  const double total = sum();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw NumericError("cardinality distribution has no mass to normalize");
  }
  for (double& v : probs) v /= total;
}

BernoulliSet BernoulliSet::from_weights(const std::vector<double>& weights) {
  BernoulliSet b;
  b.existence.reserve(weights.size());
  for (double w : weights) {
    if (w < 0.0) {
      throw NumericError("existence probability from negative weight " +
                         std::to_string(w));
    }
    b.existence.push_back(w >= 1.0 ? 1.0 - kExistenceClamp : w);
  }
  return b;
}

IIDClusterDensity IIDClusterDensity::empty_density(int n_max) {
  IIDClusterDensity d;
  d.cardinality = CardinalityDistribution::delta(0, n_max);
  return d;
}

}  // namespace mosaic
