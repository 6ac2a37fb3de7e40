#pragma once

#include "mosaic/cardinality.hpp"
#include "mosaic/gm.hpp"
#include "mosaic/types.hpp"

namespace mosaic {

/// Nearly-constant-velocity motion model on [px, vx, py, vy] with
/// white-acceleration process noise. The transition and noise matrices are
/// the standard per-axis blocks
///   A2 = [1 Ts; 0 1],  Q2 = sigma_w^2 [Ts^4/4 Ts^3/2; Ts^3/2 Ts^2].
struct MotionModel {
  double sampling_interval{1.0};  // Ts (s)
  double noise_intensity{5.0};    // sigma_w (m/s^2)
  double survival_prob{0.95};     // pS

  Matrix transition() const;     // 4x4 A
  Matrix process_noise() const;  // 4x4 Q (positive semidefinite)
};

/// Circular field-of-view centered at the sensor.
struct FovCircle {
  Eigen::Vector2d center{0.0, 0.0};
  double radius{0.0};

  bool contains(const Eigen::Vector2d& point) const {
    return (point - center).squaredNorm() <= radius * radius;
  }
};

enum class SensorKind {
  RangeBearing,    // z = [atan2(dx, dy), range] + noise
  LinearPosition,  // z = [px, py] + noise (test surrogate)
};

struct SensorModel {
  Eigen::Vector2d position{0.0, 0.0};
  double sigma_bearing{0.017453292519943295};  // rad (1 degree)
  double sigma_range{5.0};                     // m
  FovCircle fov;
  double detection_prob{0.95};  // pD0 inside the FoV, zero outside
  SensorKind kind{SensorKind::RangeBearing};

  /// Detection probability at a state: pD0 * 1_FoV(position(x)).
  double pd_at(const Vector& state) const;
  Eigen::Vector2d predict_measurement(const Vector& state) const;
  /// Measurement Jacobian at the state (first-order linearization).
  Eigen::Matrix<double, 2, 4> jacobian(const Vector& state) const;
  Eigen::Matrix2d noise() const;  // R = diag(sigma_theta^2, sigma_r^2)
  /// Measurement residual z - h(x), with the bearing component wrapped.
  Eigen::Vector2d residual(const Eigen::Vector2d& z, const Vector& state) const;
};

/// Poisson clutter, uniform over the FoV image in measurement space.
struct ClutterModel {
  double mean_count{15.0};  // lambda_c per scan

  /// Spatial clutter density c(z); the intensity is mean_count * c(z).
  double spatial_density(const SensorModel& sensor) const;
};

/// Measurement-driven birth: every measurement from the previous scan seeds
/// one newborn component, total newborn mass `rate` per frame, newborn
/// cardinality Poisson(rate).
struct BirthModel {
  double rate{0.15};
  Eigen::Vector4d pb_sqrt_diag{50.0, 20.0, 50.0, 20.0};  // P_b = diag(.)^2

  GMIntensity components_from(const std::vector<Eigen::Vector2d>& measurements,
                              const SensorModel& sensor) const;
};

/// Birth input for one prediction step, already instantiated from the
/// previous scan's measurements.
struct BirthInput {
  GMIntensity intensity;
  double poisson_rate{0.0};
};

/// CPHD prediction: components survive with pS (mean/covariance propagated
/// through the motion model), birth components are appended, and the
/// cardinality is the pS-binomial thinning of the prior convolved with the
/// Poisson birth cardinality.
IIDClusterDensity cphd_predict(const IIDClusterDensity& prior,
                               const MotionModel& motion,
                               const BirthInput& birth,
                               int n_max = kMaxTargets);

/// GM-CPHD measurement update with the ESF-based cardinality corrector.
/// The nonlinear range/bearing likelihood is linearized at each component
/// mean; the detection probability is evaluated at each component mean.
IIDClusterDensity cphd_update(const IIDClusterDensity& pred,
                              const std::vector<Eigen::Vector2d>& measurements,
                              const SensorModel& sensor,
                              const ClutterModel& clutter,
                              int n_max = kMaxTargets);

/// GM-PHD prediction (Poisson special case); the cardinality slot carries
/// Poisson(predicted mass) truncated to n_max.
IIDClusterDensity phd_predict(const IIDClusterDensity& prior,
                              const MotionModel& motion,
                              const BirthInput& birth, int n_max = kMaxTargets);

/// GM-PHD update; the cardinality slot carries Poisson(updated mass).
IIDClusterDensity phd_update(const IIDClusterDensity& pred,
                             const std::vector<Eigen::Vector2d>& measurements,
                             const SensorModel& sensor,
                             const ClutterModel& clutter,
                             int n_max = kMaxTargets);

}  // namespace mosaic
