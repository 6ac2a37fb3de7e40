#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mosaic {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Numeric failure inside a filter or fusion step (singular covariance,
/// degenerate normalization, ...). The CLI maps this to exit code 3.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid scenario or configuration input. The CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Cardinality vectors run over n = 0..kMaxTargets unless stated otherwise.
inline constexpr int kMaxTargets = 20;

/// Existence probabilities derived from GM weights >= 1 are clamped to
/// 1 - kExistenceClamp so the Bernoulli odds r/(1-r) stay finite. Weights
/// above 1 can appear after arithmetic-average feedback.
inline constexpr double kExistenceClamp = 1e-6;

/// Weighted Gaussian component: the atom of every intensity function.
/// For tracking scenarios the mean is [px, vx, py, vy] (m, m/s).
struct GaussianComponent {
  double weight{0.0};
  Vector mean;
  Matrix covariance;
};

/// Checks weight >= 0, covariance symmetry (1e-9 relative) and positive
/// definiteness. Throws NumericError naming the violated condition.
void validate_component(const GaussianComponent& gc);

/// Gaussian-mixture intensity v(x); the empty mixture is the zero intensity.
struct GMIntensity {
  std::vector<GaussianComponent> components;

  /// Integral of the intensity, i.e. the sum of component weights.
  double mass() const;
  bool empty() const { return components.empty(); }
  std::size_t size() const { return components.size(); }
};

/// Probability vector over target counts n = 0..max_n().
struct CardinalityDistribution {
  std::vector<double> probs;

  static CardinalityDistribution delta(int n, int n_max = kMaxTargets);

  double sum() const;
  /// Scales to unit mass; throws NumericError if the total mass is zero.
  void normalize();
  int max_n() const { return static_cast<int>(probs.size()) - 1; }
};

/// Existence probabilities of independent Bernoulli components, each in (0,1).
struct BernoulliSet {
  std::vector<double> existence;

  /// Builds a Bernoulli set from GM weights. Weights >= 1 are clamped to
  /// 1 - kExistenceClamp; negative weights are rejected.
  static BernoulliSet from_weights(const std::vector<double>& weights);
};

/// IID cluster process summarized by (cardinality distribution, intensity).
/// When consistent, intensity mass equals the cardinality mean.
struct IIDClusterDensity {
  CardinalityDistribution cardinality;
  GMIntensity intensity;

  /// Zero intensity with all probability mass on n = 0.
  static IIDClusterDensity empty_density(int n_max = kMaxTargets);
};

}  // namespace mosaic
