#include "mosaic/filter.hpp"

#include <cmath>
#include <numbers>

namespace mosaic {

namespace {

double wrap_angle(double a) {
  a = std::fmod(a + std::numbers::pi, 2.0 * std::numbers::pi);
  if (a < 0.0) a += 2.0 * std::numbers::pi;
  return a - std::numbers::pi;
}

// Linearized per-component update terms shared by the PHD and CPHD paths.
struct UpdateTerms {
  Eigen::Vector2d predicted;             // eta_j = h(m_j)
  Eigen::Matrix2d innovation_cov;        // S_j
  Eigen::Matrix<double, 4, 2> gain;      // K_j
  Matrix updated_cov;                    // (I - K_j H_j) P_j
  double pd{0.0};
  double log_norm{0.0};                  // log of 1/(2*pi*sqrt(det S))
  Eigen::Matrix2d innovation_precision;  // S_j^-1
};

UpdateTerms make_terms(const GaussianComponent& gc, const SensorModel& sensor,
                       std::size_t index) {
  UpdateTerms t;
  t.pd = sensor.pd_at(gc.mean);
  t.predicted = sensor.predict_measurement(gc.mean);
  const Eigen::Matrix<double, 2, 4> jac = sensor.jacobian(gc.mean);
  const Eigen::Matrix2d s =
      jac * gc.covariance * jac.transpose() + sensor.noise();
  const double det = s.determinant();
  if (!(det > 0.0) || !std::isfinite(det)) {
    throw NumericError("singular innovation covariance at component " +
                       std::to_string(index));
  }
  t.innovation_cov = s;
  t.innovation_precision = s.inverse();
  t.gain = gc.covariance * jac.transpose() * t.innovation_precision;
  t.updated_cov = (Matrix::Identity(4, 4) - t.gain * jac) * gc.covariance;
  t.updated_cov = 0.5 * (t.updated_cov + t.updated_cov.transpose());
  t.log_norm = -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(det);
  return t;
}

double measurement_likelihood(const UpdateTerms& t, const Eigen::Vector2d& r) {
  return std::exp(t.log_norm - 0.5 * r.dot(t.innovation_precision * r));
}

GMIntensity predict_intensity(const GMIntensity& prior,
                              const MotionModel& motion,
                              const BirthInput& birth) {
  const Matrix a = motion.transition();
  const Matrix q = motion.process_noise();
  GMIntensity predicted;
  predicted.components.reserve(prior.size() + birth.intensity.size());
  for (const auto& gc : prior.components) {
    GaussianComponent p;
    p.weight = motion.survival_prob * gc.weight;
    p.mean = a * gc.mean;
    p.covariance = a * gc.covariance * a.transpose() + q;
    predicted.components.push_back(std::move(p));
  }
  return gm_concat(std::move(predicted), birth.intensity);
}

// Survival thinning: p_surv(j) = sum_{l>=j} C(l,j) pS^j (1-pS)^(l-j) p(l).
CardinalityDistribution thin_cardinality(const CardinalityDistribution& p,
                                         double ps) {
  if (ps >= 1.0) return p;
  CardinalityDistribution out;
  out.probs.assign(p.probs.size(), 0.0);
  const int top = p.max_n();
  for (int l = 0; l <= top; ++l) {
    const double pl = p.probs[static_cast<std::size_t>(l)];
    if (pl == 0.0) continue;
    // binomial(l, j) pS^j (1-pS)^(l-j), built iteratively over j
    double term = std::pow(1.0 - ps, l);
    for (int j = 0; j <= l; ++j) {
      out.probs[static_cast<std::size_t>(j)] += pl * term;
      if (j < l) {
        term *= ps / (1.0 - ps) * static_cast<double>(l - j) /
                static_cast<double>(j + 1);
      }
    }
  }
  return out;
}

}  // namespace

Matrix MotionModel::transition() const {
  const double ts = sampling_interval;
  Matrix a = Matrix::Identity(4, 4);
  a(0, 1) = ts;
  a(2, 3) = ts;
  return a;
}

Matrix MotionModel::process_noise() const {
  const double ts = sampling_interval;
  const double s2 = noise_intensity * noise_intensity;
  Matrix q = Matrix::Zero(4, 4);
  const double t4 = ts * ts * ts * ts / 4.0;
  const double t3 = ts * ts * ts / 2.0;
  const double t2 = ts * ts;
  q(0, 0) = t4;
  q(0, 1) = t3;
  q(1, 0) = t3;
  q(1, 1) = t2;
  q(2, 2) = t4;
  q(2, 3) = t3;
  q(3, 2) = t3;
  q(3, 3) = t2;
  return s2 * q;
}

double SensorModel::pd_at(const Vector& state) const {
  const Eigen::Vector2d pos(state(0), state(2));
  return fov.contains(pos) ? detection_prob : 0.0;
}

Eigen::Vector2d SensorModel::predict_measurement(const Vector& state) const {
  if (kind == SensorKind::LinearPosition) {
    return {state(0), state(2)};
  }
  const double dx = state(0) - position(0);
  const double dy = state(2) - position(1);
  return {std::atan2(dx, dy), std::sqrt(dx * dx + dy * dy)};
}

Eigen::Matrix<double, 2, 4> SensorModel::jacobian(const Vector& state) const {
  Eigen::Matrix<double, 2, 4> jac = Eigen::Matrix<double, 2, 4>::Zero();
  if (kind == SensorKind::LinearPosition) {
    jac(0, 0) = 1.0;
    jac(1, 2) = 1.0;
    return jac;
  }
  const double dx = state(0) - position(0);
  const double dy = state(2) - position(1);
  const double r2 = dx * dx + dy * dy;
  const double r = std::sqrt(r2);
  if (!(r > 0.0)) {
    throw NumericError("measurement jacobian undefined at the sensor position");
  }
  jac(0, 0) = dy / r2;
  jac(0, 2) = -dx / r2;
  jac(1, 0) = dx / r;
  jac(1, 2) = dy / r;
  return jac;
}

Eigen::Matrix2d SensorModel::noise() const {
  Eigen::Matrix2d r = Eigen::Matrix2d::Zero();
  if (kind == SensorKind::LinearPosition) {
    r(0, 0) = sigma_range * sigma_range;
    r(1, 1) = sigma_range * sigma_range;
    return r;
  }
  r(0, 0) = sigma_bearing * sigma_bearing;
  r(1, 1) = sigma_range * sigma_range;
  return r;
}

Eigen::Vector2d SensorModel::residual(const Eigen::Vector2d& z,
                                      const Vector& state) const {
  Eigen::Vector2d r = z - predict_measurement(state);
  if (kind == SensorKind::RangeBearing) r(0) = wrap_angle(r(0));
  return r;
}

double ClutterModel::spatial_density(const SensorModel& sensor) const {
  if (sensor.kind == SensorKind::LinearPosition) {
    const double area =
        std::numbers::pi * sensor.fov.radius * sensor.fov.radius;
    return 1.0 / area;
  }
  // Uniform over the polar rectangle [-pi, pi) x [0, radius].
  return 1.0 / (2.0 * std::numbers::pi * sensor.fov.radius);
}

GMIntensity BirthModel::components_from(
    const std::vector<Eigen::Vector2d>& measurements,
    const SensorModel& sensor) const {
  GMIntensity birth;
  if (measurements.empty() || rate <= 0.0) return birth;
  const double weight = rate / static_cast<double>(measurements.size());
  const Matrix cov = pb_sqrt_diag.cwiseProduct(pb_sqrt_diag).asDiagonal();
  birth.components.reserve(measurements.size());
  for (const auto& z : measurements) {
    GaussianComponent gc;
    gc.weight = weight;
    gc.mean = Vector::Zero(4);
    if (sensor.kind == SensorKind::LinearPosition) {
      gc.mean(0) = z(0);
      gc.mean(2) = z(1);
    } else {
      gc.mean(0) = z(1) * std::sin(z(0)) + sensor.position(0);
      gc.mean(2) = z(1) * std::cos(z(0)) + sensor.position(1);
    }
    gc.covariance = cov;
    birth.components.push_back(std::move(gc));
  }
  return birth;
}

IIDClusterDensity cphd_predict(const IIDClusterDensity& prior,
                               const MotionModel& motion,
                               const BirthInput& birth, int n_max) {
  IIDClusterDensity out;
  out.intensity = predict_intensity(prior.intensity, motion, birth);
  CardinalityDistribution thinned =
      thin_cardinality(prior.cardinality, motion.survival_prob);
  out.cardinality = convolve_cardinality(
      {std::move(thinned), poisson_cardinality(birth.poisson_rate, n_max)},
      n_max);
  return out;
}

IIDClusterDensity phd_predict(const IIDClusterDensity& prior,
                              const MotionModel& motion,
                              const BirthInput& birth, int n_max) {
  IIDClusterDensity out;
  out.intensity = predict_intensity(prior.intensity, motion, birth);
  out.cardinality = poisson_cardinality(out.intensity.mass(), n_max);
  return out;
}

IIDClusterDensity cphd_update(const IIDClusterDensity& pred,
                              const std::vector<Eigen::Vector2d>& measurements,
                              const SensorModel& sensor,
                              const ClutterModel& clutter, int n_max) {
  const std::size_t count = pred.intensity.size();
  const double mu = pred.intensity.mass();
  if (count == 0 || mu <= 0.0) {
    // Nothing to localize; the update cannot reshape a zero intensity.
    return pred;
  }
  const std::size_t m = measurements.size();
  const double lambda = clutter.mean_count;
  const double density = clutter.spatial_density(sensor);

  std::vector<UpdateTerms> terms;
  terms.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    terms.push_back(make_terms(pred.intensity.components[j], sensor, j));
  }

  // phi = <1 - pD, v> / <1, v>, evaluated at the component means.
  double miss_mass = 0.0;
  for (std::size_t j = 0; j < count; ++j) {
    miss_mass += (1.0 - terms[j].pd) * pred.intensity.components[j].weight;
  }
  const double phi = miss_mass / mu;

  // Per-measurement likelihoods and the normalized ESF inputs
  // Lambda(z) = <v, pD q(z)> / (c(z) <1, v>).
  std::vector<std::vector<double>> likelihood(m, std::vector<double>(count));
  std::vector<double> xi(m, 0.0);
  for (std::size_t z = 0; z < m; ++z) {
    double dot = 0.0;
    for (std::size_t j = 0; j < count; ++j) {
      const double q = measurement_likelihood(
          terms[j], sensor.residual(measurements[z],
                                    pred.intensity.components[j].mean));
      likelihood[z][j] = q;
      dot += terms[j].pd * pred.intensity.components[j].weight * q;
    }
    xi[z] = dot / (density * mu);
  }

  const std::vector<double> esf_full = esf_all(xi);

  // Upsilon^u(n) up to the common factor exp(-lambda) and mu^-u:
  //   sum_j lambda^(M-j) perm(n, j+u) phi^(n-(j+u)) esf_j
  // with 0^0 = 1 throughout.
  auto upsilon = [&](int u, int n, const std::vector<double>& esf,
                     std::size_t meas_count) {
    double total = 0.0;
    const int j_top = std::min<int>(static_cast<int>(meas_count), n - u);
    for (int j = 0; j <= j_top; ++j) {
      const int taken = j + u;
      double perm = 1.0;
      for (int t = 0; t < taken; ++t) perm *= static_cast<double>(n - t);
      const int miss_pow = n - taken;
      const double phi_pow =
          miss_pow == 0 ? 1.0 : std::pow(phi, static_cast<double>(miss_pow));
      const int clutter_pow = static_cast<int>(meas_count) - j;
      const double lam_pow =
          clutter_pow == 0
              ? 1.0
              : std::pow(lambda, static_cast<double>(clutter_pow));
      total += lam_pow * perm * phi_pow * esf[static_cast<std::size_t>(j)];
    }
    return total;
  };

  const int top_n = pred.cardinality.max_n();
  double den = 0.0;   // <Upsilon^0[Z], p>
  double num1 = 0.0;  // <Upsilon^1[Z], p> * mu (the mu^-1 is applied below)
  std::vector<double> updated_card(static_cast<std::size_t>(top_n) + 1, 0.0);
  for (int n = 0; n <= top_n; ++n) {
    const double pn = pred.cardinality.probs[static_cast<std::size_t>(n)];
    const double u0 = upsilon(0, n, esf_full, m);
    updated_card[static_cast<std::size_t>(n)] = u0 * pn;
    den += u0 * pn;
    num1 += upsilon(1, n, esf_full, m) * pn;
  }
  if (!(den > 0.0) || !std::isfinite(den)) {
    throw NumericError("cphd_update: degenerate cardinality normalization");
  }

  IIDClusterDensity out;
  out.cardinality.probs = std::move(updated_card);
  out.cardinality.normalize();
  if (static_cast<int>(out.cardinality.probs.size()) !=
      static_cast<int>(n_max) + 1) {
    out.cardinality.probs.resize(static_cast<std::size_t>(n_max) + 1, 0.0);
    out.cardinality.normalize();
  }

  // Misdetection components scaled by <Ups^1, p> / (mu <Ups^0, p>).
  const double miss_factor = num1 / (mu * den);
  out.intensity.components.reserve(count * (m + 1));
  for (std::size_t j = 0; j < count; ++j) {
    const auto& gc = pred.intensity.components[j];
    const double weight = miss_factor * (1.0 - terms[j].pd) * gc.weight;
    if (weight <= 0.0) continue;
    out.intensity.components.push_back({weight, gc.mean, gc.covariance});
  }

  // Detection components, one block per measurement.
  std::vector<double> xi_minus;
  xi_minus.reserve(m > 0 ? m - 1 : 0);
  for (std::size_t z = 0; z < m; ++z) {
    xi_minus.clear();
    for (std::size_t other = 0; other < m; ++other) {
      if (other != z) xi_minus.push_back(xi[other]);
    }
    const std::vector<double> esf_minus = esf_all(xi_minus);
    double num1_z = 0.0;  // <Upsilon^1[Z \ z], p> * mu
    for (int n = 0; n <= top_n; ++n) {
      num1_z += upsilon(1, n, esf_minus, m - 1) *
                pred.cardinality.probs[static_cast<std::size_t>(n)];
    }
    const double block_factor = num1_z / (mu * den * density);
    for (std::size_t j = 0; j < count; ++j) {
      const auto& gc = pred.intensity.components[j];
      const double weight =
          block_factor * terms[j].pd * gc.weight * likelihood[z][j];
      if (weight <= 0.0) continue;
      GaussianComponent upd;
      upd.weight = weight;
      upd.mean = gc.mean + terms[j].gain *
                               sensor.residual(measurements[z], gc.mean);
      upd.covariance = terms[j].updated_cov;
      out.intensity.components.push_back(std::move(upd));
    }
  }
  return out;
}

IIDClusterDensity phd_update(const IIDClusterDensity& pred,
                             const std::vector<Eigen::Vector2d>& measurements,
                             const SensorModel& sensor,
                             const ClutterModel& clutter, int n_max) {
  const std::size_t count = pred.intensity.size();
  if (count == 0) return pred;
  const double clutter_intensity =
      clutter.mean_count * clutter.spatial_density(sensor);

  std::vector<UpdateTerms> terms;
  terms.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    terms.push_back(make_terms(pred.intensity.components[j], sensor, j));
  }

  IIDClusterDensity out;
  out.intensity.components.reserve(count * (measurements.size() + 1));
  for (std::size_t j = 0; j < count; ++j) {
    const auto& gc = pred.intensity.components[j];
    const double weight = (1.0 - terms[j].pd) * gc.weight;
    if (weight <= 0.0) continue;
    out.intensity.components.push_back({weight, gc.mean, gc.covariance});
  }
  for (const auto& z : measurements) {
    std::vector<double> detect(count, 0.0);
    double total = clutter_intensity;
    for (std::size_t j = 0; j < count; ++j) {
      const auto& gc = pred.intensity.components[j];
      detect[j] = terms[j].pd * gc.weight *
                  measurement_likelihood(terms[j], sensor.residual(z, gc.mean));
      total += detect[j];
    }
    if (!(total > 0.0)) {
      throw NumericError("phd_update: zero likelihood denominator");
    }
    for (std::size_t j = 0; j < count; ++j) {
      if (detect[j] <= 0.0) continue;
      const auto& gc = pred.intensity.components[j];
      GaussianComponent upd;
      upd.weight = detect[j] / total;
      upd.mean = gc.mean + terms[j].gain * sensor.residual(z, gc.mean);
      upd.covariance = terms[j].updated_cov;
      out.intensity.components.push_back(std::move(upd));
    }
  }
  out.cardinality = poisson_cardinality(out.intensity.mass(), n_max);
  return out;
}

}  // namespace mosaic
