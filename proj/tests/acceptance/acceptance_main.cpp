// Acceptance suite: one self-contained check per shipped guarantee, each
// printed as a PASS/FAIL line. Exits nonzero when any check fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mosaic/cardinality.hpp"
#include "mosaic/filter.hpp"
#include "mosaic/fusion.hpp"
#include "mosaic/gm.hpp"
#include "mosaic/metrics.hpp"
#include "mosaic/robust_fusion.hpp"
#include "mosaic/scenario.hpp"

namespace fs = std::filesystem;
using namespace mosaic;

namespace {

constexpr int kThreads = 2;

struct Outcome {
  bool pass{true};
  std::string detail;

  void require(bool condition, const std::string& message) {
    if (!condition) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += message;
    }
  }
  void note(const std::string& message) {
    if (!detail.empty()) detail += "; ";
    detail += message;
  }
};

std::string fmt(double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.3f", v);
  return buffer;
}

GaussianComponent make_gc2(double weight, double x, double y,
                           double var = 1.0) {
  GaussianComponent gc;
  gc.weight = weight;
  gc.mean = Vector::Zero(2);
  gc.mean << x, y;
  gc.covariance = var * Matrix::Identity(2, 2);
  return gc;
}

Matrix random_spd2(std::mt19937& rng) {
  std::uniform_real_distribution<double> entry(-0.8, 0.8);
  Matrix l = Matrix::Identity(2, 2);
  l(0, 0) = 1.0 + std::abs(entry(rng));
  l(1, 0) = entry(rng);
  l(1, 1) = 1.0 + std::abs(entry(rng));
  return l * l.transpose();
}

double esf_enumerate(const std::vector<double>& values, int degree) {
  const int m = static_cast<int>(values.size());
  if (degree == 0) return 1.0;
  if (degree > m) return 0.0;
  double total = 0.0;
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    if (static_cast<int>(__builtin_popcount(mask)) != degree) continue;
    double prod = 1.0;
    for (int i = 0; i < m; ++i) {
      if (mask & (1u << i)) prod *= values[static_cast<std::size_t>(i)];
    }
    total += prod;
  }
  return total;
}

// --- 1: cardinality algebra against enumeration oracles ---------------------

Outcome criterion_cardinality_algebra() {
  Outcome out;
  std::mt19937 rng(101);
  std::uniform_int_distribution<int> size(0, 12);

  // ESF: integer-valued inputs make both routes exact, so equality is exact.
  std::uniform_int_distribution<int> ivalue(1, 9);
  for (int trial = 0; trial < 500 && out.pass; ++trial) {
    std::vector<double> values(static_cast<std::size_t>(size(rng)));
    for (auto& v : values) v = static_cast<double>(ivalue(rng));
    const auto all = esf_all(values);
    for (int n = 0; n <= static_cast<int>(values.size()); ++n) {
      out.require(all[static_cast<std::size_t>(n)] == esf_enumerate(values, n),
                  "esf_all mismatch vs subset enumeration");
    }
  }

  // Multi-Bernoulli cardinality vs explicit outcome enumeration.
  std::uniform_real_distribution<double> prob(0.001, 0.999);
  for (int trial = 0; trial < 500 && out.pass; ++trial) {
    const int m = size(rng);
    std::vector<double> r(static_cast<std::size_t>(m));
    for (auto& v : r) v = prob(rng);
    const auto p = mb_cardinality(BernoulliSet{r});
    std::vector<double> ref(p.probs.size(), 0.0);
    for (unsigned mask = 0; mask < (1u << m); ++mask) {
      double pr = 1.0;
      int count = 0;
      for (int i = 0; i < m; ++i) {
        if (mask & (1u << i)) {
          pr *= r[static_cast<std::size_t>(i)];
          ++count;
        } else {
          pr *= 1.0 - r[static_cast<std::size_t>(i)];
        }
      }
      ref[static_cast<std::size_t>(count)] += pr;
    }
    for (std::size_t n = 0; n < p.probs.size(); ++n) {
      out.require(std::abs(p.probs[n] - ref[n]) <= 1e-10,
                  "mb_cardinality deviates from outcome enumeration");
    }
  }

  // Convolution vs the direct double sum.
  std::uniform_real_distribution<double> mass(0.0, 1.0);
  for (int trial = 0; trial < 500 && out.pass; ++trial) {
    CardinalityDistribution a, b;
    a.probs.assign(6, 0.0);
    b.probs.assign(7, 0.0);
    for (auto& v : a.probs) v = mass(rng);
    for (auto& v : b.probs) v = mass(rng);
    a.normalize();
    b.normalize();
    const auto conv = convolve_cardinality({a, b});
    std::vector<double> ref(conv.probs.size(), 0.0);
    for (std::size_t i = 0; i < a.probs.size(); ++i) {
      for (std::size_t j = 0; j < b.probs.size(); ++j) {
        ref[i + j] += a.probs[i] * b.probs[j];
      }
    }
    for (std::size_t n = 0; n < conv.probs.size(); ++n) {
      out.require(std::abs(conv.probs[n] - ref[n]) <= 1e-12,
                  "convolution deviates from the double sum");
    }
  }
  return out;
}

// --- 2: fusion rule identities ----------------------------------------------

Outcome criterion_fusion_identities() {
  Outcome out;
  IIDClusterDensity d;
  d.intensity.components.push_back(make_gc2(0.9, 3.0, -2.0, 2.0));
  d.cardinality = mb_cardinality(BernoulliSet::from_weights({0.9}));

  auto grid_l1 = [](const GMIntensity& a, const GMIntensity& b) {
    double total = 0.0;
    Vector x(2);
    const double extent = 15.0;
    const int cells = 160;
    const double step = 2.0 * extent / cells;
    for (int i = 0; i < cells; ++i) {
      for (int j = 0; j < cells; ++j) {
        x << -extent + (i + 0.5) * step, -extent + (j + 0.5) * step;
        total += std::abs(gm_evaluate(a, x) - gm_evaluate(b, x)) * step * step;
      }
    }
    return total;
  };

  const auto gci = gci_fuse(d, d, 0.5);
  out.require(grid_l1(gm_scale(gci.intensity, 1.0 / gci.intensity.mass()),
                      gm_scale(d.intensity, 1.0 / 0.9)) < 1e-6,
              "GCI idempotence grid L1 >= 1e-6");
  const auto aa = aa_fuse(d, d, 0.5);
  out.require(grid_l1(aa.intensity, d.intensity) < 1e-6,
              "AA idempotence grid L1 >= 1e-6");

  std::mt19937 rng(202);
  std::uniform_real_distribution<double> w(0.1, 0.9);
  std::uniform_real_distribution<double> pos(-10.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    IIDClusterDensity a, b;
    a.intensity.components.push_back(make_gc2(w(rng), pos(rng), pos(rng)));
    b.intensity.components.push_back(make_gc2(w(rng), pos(rng), pos(rng)));
    b.intensity.components.push_back(make_gc2(w(rng), pos(rng), pos(rng)));
    a.cardinality = mb_cardinality(
        BernoulliSet::from_weights({a.intensity.components[0].weight}));
    b.cardinality = mb_cardinality(BernoulliSet::from_weights(
        {b.intensity.components[0].weight, b.intensity.components[1].weight}));
    const double omega = w(rng);
    const auto fused = aa_fuse(a, b, omega);
    out.require(std::abs(fused.intensity.mass() -
                         (omega * a.intensity.mass() +
                          (1.0 - omega) * b.intensity.mass())) <= 1e-12,
                "AA mass linearity violated");
    out.require(std::abs(expected_cardinality(fused.cardinality) -
                         (omega * expected_cardinality(a.cardinality) +
                          (1.0 - omega) * expected_cardinality(b.cardinality))) <=
                    1e-12,
                "AA cardinality mean linearity violated");
  }

  for (int trial = 0; trial < 100; ++trial) {
    GaussianComponent ca = make_gc2(1.0, pos(rng), pos(rng));
    ca.covariance = random_spd2(rng);
    GaussianComponent cb = make_gc2(1.0, pos(rng), pos(rng));
    cb.covariance = random_spd2(rng);
    const double omega = w(rng);
    GMIntensity va, vb;
    va.components = {ca};
    vb.components = {cb};
    const auto fused = gci_fuse_gm(va, vb, omega);
    const Matrix reconstructed = omega * ca.covariance.inverse() +
                                 (1.0 - omega) * cb.covariance.inverse();
    out.require((fused.mixture.components[0].covariance.inverse() -
                 reconstructed)
                        .norm() <= 1e-9,
                "GCI fused precision additivity beyond 1e-9");
  }
  return out;
}

// --- 3: partition validity over randomized pairs ----------------------------

Outcome criterion_partition_validity() {
  Outcome out;
  std::mt19937 rng(303);
  std::uniform_real_distribution<double> pos(-40.0, 40.0);
  std::uniform_int_distribution<int> count(0, 6);
  int nonempty = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<GMIntensity> nodes(2);
    for (auto& node : nodes) {
      const int n = count(rng);
      for (int i = 0; i < n; ++i) {
        GaussianComponent gc = make_gc2(0.5, pos(rng), pos(rng));
        gc.covariance = random_spd2(rng);
        node.components.push_back(std::move(gc));
      }
    }
    if (nodes[0].empty() && nodes[1].empty()) continue;
    ++nonempty;
    const auto part = cluster_components(nodes, 8.0);
    out.require(partition_is_valid(part, nodes),
                "partition violates a gating condition");
    std::size_t total = 0;
    for (const auto& c : part.clusters) total += c.size();
    out.require(total == nodes[0].size() + nodes[1].size(),
                "partition does not cover every component exactly once");
    if (!out.pass) break;
  }
  out.note(std::to_string(nonempty) + " scenes checked");
  return out;
}

// --- 4: cross-cluster confidence ellipsoids are disjoint --------------------

Outcome criterion_ellipsoid_disjointness() {
  Outcome out;
  std::mt19937 rng(404);
  std::uniform_real_distribution<double> pos(-25.0, 25.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double rho = 12.0;
  const double delta = rho / 4.0;
  int tested = 0;
  while (tested < 200 && out.pass) {
    std::vector<GMIntensity> nodes(2);
    for (auto& node : nodes) {
      for (int i = 0; i < 3; ++i) {
        GaussianComponent gc = make_gc2(0.5, pos(rng), pos(rng));
        gc.covariance = random_spd2(rng);
        node.components.push_back(std::move(gc));
      }
    }
    const auto part = cluster_components(nodes, rho);
    if (part.clusters.size() < 2) continue;
    for (std::size_t g = 0; g < part.clusters.size() && tested < 200; ++g) {
      for (std::size_t h = g + 1; h < part.clusters.size() && tested < 200;
           ++h) {
        const auto& ia = part.clusters[g].front();
        const auto& ib = part.clusters[h].front();
        const auto& a = nodes[static_cast<std::size_t>(ia.node)]
                            .components[static_cast<std::size_t>(ia.comp)];
        const auto& b = nodes[static_cast<std::size_t>(ib.node)]
                            .components[static_cast<std::size_t>(ib.comp)];
        const Matrix la = Eigen::LLT<Matrix>(a.covariance).matrixL();
        const Matrix prec_b = b.covariance.inverse();
        for (int s = 0; s < 10000; ++s) {
          Vector dir(2);
          dir << gauss(rng), gauss(rng);
          dir.normalize();
          const Vector x =
              a.mean + la * (std::sqrt(delta * unit(rng)) * dir);
          const Vector diff = x - b.mean;
          if (diff.dot(prec_b * diff) <= delta) {
            out.require(false, "sampled point falls in both ellipsoids");
            break;
          }
        }
        ++tested;
      }
    }
  }
  out.note(std::to_string(tested) + " cross-cluster pairs sampled");
  return out;
}

// --- 5: L1 approximation bound ----------------------------------------------

Outcome criterion_l1_bound() {
  Outcome out;
  std::mt19937 rng(505);
  std::uniform_real_distribution<double> pos(-30.0, 30.0);
  std::uniform_real_distribution<double> w(0.2, 0.9);
  for (int trial = 0; trial < 100 && out.pass; ++trial) {
    std::vector<GMIntensity> nodes(2);
    for (auto& node : nodes) {
      for (int i = 0; i < 2; ++i) {
        GaussianComponent gc = make_gc2(w(rng), pos(rng), pos(rng));
        gc.covariance = random_spd2(rng);
        node.components.push_back(std::move(gc));
      }
    }
    const double rho = 16.0;
    const auto part = cluster_components(nodes, rho);
    const auto report =
        approximation_error_bound(nodes, part, rho / 4.0, true, 200);
    for (const auto& entry : report.entries) {
      out.require(entry.l1_numeric >= 0.0, "numeric L1 not computed");
      out.require(entry.l1_numeric <= entry.bound + 1e-3,
                  "numeric L1 " + fmt(entry.l1_numeric) + " exceeds bound " +
                      fmt(entry.bound) + " + 1e-3");
    }
  }

  // Bound shrinks as the gate grows (delta = rho/4 throughout).
  std::vector<GMIntensity> nodes(2);
  nodes[0].components.push_back(make_gc2(0.6, 0.0, 0.0));
  nodes[0].components.push_back(make_gc2(0.7, 40.0, 0.0));
  nodes[1].components.push_back(make_gc2(0.8, 0.5, 0.5));
  double previous = 2.0;
  for (const double rho : {10.0, 40.0, 160.0}) {
    const auto part = cluster_components(nodes, rho);
    const auto report = approximation_error_bound(nodes, part, rho / 4.0);
    const double bound = report.entries.front().bound;
    out.require(bound < previous,
                "bound did not shrink when rho grew to " + fmt(rho));
    previous = bound;
  }
  out.require(previous < 0.3, "bound at rho=160 not small");
  return out;
}

// --- 6: the disjoint fields-of-view cardinality fix -------------------------

Outcome criterion_disjoint_fov_fix() {
  Outcome out;
  auto single = [](double weight, double x, double y) {
    IIDClusterDensity d;
    d.intensity.components.push_back(make_gc2(weight, x, y));
    d.cardinality = mb_cardinality(BernoulliSet::from_weights({weight}));
    return d;
  };
  const auto a = single(0.9, 0.0, 0.0);
  const auto b = single(0.9, 400.0, 0.0);

  const auto naive_gci = gci_fuse(a, b, 0.5);
  out.require(map_cardinality(naive_gci.cardinality) == 0,
              "plain GCI should lose both exclusive targets");

  const auto naive_aa = aa_fuse(a, b, 0.5);
  out.require(std::abs(expected_cardinality(naive_aa.cardinality) - 0.9) <=
                  1e-12,
              "plain AA expected cardinality should dilute to 0.9");

  for (const auto rule : {FusionRule::Gci, FusionRule::Aa}) {
    const auto fused = robust_fuse(a, b, rule, 0.5, 20.0);
    out.require(map_cardinality(fused.cardinality) == 2,
                "clustered fusion should keep both targets");
    out.require(fused.intensity.size() == 2 &&
                    fused.intensity.components[0].weight == 0.9 &&
                    fused.intensity.components[1].weight == 0.9,
                "clustered fusion should preserve the original components");
  }
  return out;
}

// --- 7/8/9: Monte Carlo ordering studies -------------------------------------

ScenarioConfig base_scenario() {
  const fs::path path = fs::path(MOSAIC_SCENARIO_DIR) / "default.json";
  ScenarioConfig config = load_scenario(path.string());
  config.run.mc_runs = 25;
  return config;
}

void set_pd0(ScenarioConfig& config, double pd0) {
  for (auto& node : config.network.nodes) node.pd0 = pd0;
}

const MethodResult& method_of(const ExperimentResult& result,
                              const std::string& name) {
  for (const auto& method : result.methods) {
    if (method.method == name) return method;
  }
  throw std::runtime_error("method missing from results: " + name);
}

double mean_of(const std::vector<double>& values) {
  double total = 0.0;
  for (double v : values) total += v;
  return values.empty() ? 0.0 : total / static_cast<double>(values.size());
}

double stderr_of(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  const double mean = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (static_cast<double>(values.size()) *
                         (static_cast<double>(values.size()) - 1.0)));
}

std::vector<double> per_run_window_mean(
    const std::vector<std::vector<double>>& per_run_per_scan, int from_scan) {
  std::vector<double> out;
  for (const auto& run : per_run_per_scan) {
    double total = 0.0;
    int count = 0;
    for (std::size_t k = static_cast<std::size_t>(from_scan); k < run.size();
         ++k) {
      total += run[k];
      ++count;
    }
    out.push_back(count > 0 ? total / count : 0.0);
  }
  return out;
}

struct StudyResults {
  ExperimentResult high_pd;           // pd0 = 0.95, all six methods
  std::vector<double> sweep_pd;       // sweep values
  std::vector<ExperimentResult> sweep;  // cphd-gci / cphd-aa per value
};

StudyResults run_studies() {
  StudyResults results;
  const std::vector<MethodSpec> all_methods{
      {FilterKind::Cphd, false, FusionRule::Gci},
      {FilterKind::Phd, false, FusionRule::Gci},
      {FilterKind::Cphd, true, FusionRule::Gci},
      {FilterKind::Cphd, true, FusionRule::Aa},
      {FilterKind::Phd, true, FusionRule::Gci},
      {FilterKind::Phd, true, FusionRule::Aa},
  };
  ScenarioConfig config = base_scenario();
  set_pd0(config, 0.95);
  results.high_pd = run_experiment(config, all_methods, kThreads);

  const std::vector<MethodSpec> fused_cphd{
      {FilterKind::Cphd, true, FusionRule::Gci},
      {FilterKind::Cphd, true, FusionRule::Aa},
  };
  results.sweep_pd = {0.55, 0.65, 0.75, 0.85, 0.95};
  for (const double pd : results.sweep_pd) {
    if (pd == 0.95) {
      results.sweep.push_back(results.high_pd);
      continue;
    }
    ScenarioConfig swept = base_scenario();
    set_pd0(swept, pd);
    results.sweep.push_back(run_experiment(swept, fused_cphd, kThreads));
  }
  return results;
}

Outcome criterion_high_pd_ordering(const StudyResults& results,
                                   const ScenarioConfig& config) {
  Outcome out;
  const auto& r = results.high_pd;
  const double local = time_average(method_of(r, "cphd-local").ospa_per_run);
  const double gci = time_average(method_of(r, "cphd-gci").ospa_per_run);
  const double aa = time_average(method_of(r, "cphd-aa").ospa_per_run);
  const double phd_gci = time_average(method_of(r, "phd-gci").ospa_per_run);
  const double phd_aa = time_average(method_of(r, "phd-aa").ospa_per_run);

  out.note("local=" + fmt(local) + " gci=" + fmt(gci) + " aa=" + fmt(aa) +
           " phd-gci=" + fmt(phd_gci) + " phd-aa=" + fmt(phd_aa));
  out.require(gci <= 0.8 * local, "CPHD-GCI not 20% below local CPHD");
  out.require(aa <= 0.8 * local, "CPHD-AA not 20% below local CPHD");
  out.require(gci <= phd_gci, "CPHD-GCI worse than PHD-GCI");
  out.require(aa <= phd_aa, "CPHD-AA worse than PHD-AA");

  const int window_start = config.run.scans - 30;
  double truth_mean = 0.0;
  for (int k = window_start; k < config.run.scans; ++k) {
    truth_mean += r.true_cardinality[static_cast<std::size_t>(k)];
  }
  truth_mean /= 30.0;
  for (const char* name : {"cphd-gci", "cphd-aa"}) {
    const double est = mean_of(per_run_window_mean(
        method_of(r, name).card_per_run, window_start));
    out.require(std::abs(est - truth_mean) <= 0.5,
                std::string(name) + " mean cardinality " + fmt(est) +
                    " not within 0.5 of " + fmt(truth_mean));
  }
  return out;
}

Outcome criterion_low_pd_ordering(const StudyResults& results,
                                  const ScenarioConfig& config) {
  Outcome out;
  const auto& r = results.sweep[1];  // pd0 = 0.65
  const auto gci_runs = per_run_time_average(
      method_of(r, "cphd-gci").ospa_per_run);
  const auto aa_runs =
      per_run_time_average(method_of(r, "cphd-aa").ospa_per_run);
  std::vector<double> diff;
  for (std::size_t i = 0; i < gci_runs.size(); ++i) {
    diff.push_back(gci_runs[i] - aa_runs[i]);
  }
  const double gap = mean_of(diff);
  const double gap_se = stderr_of(diff);
  out.note("gci-aa gap=" + fmt(gap) + " se=" + fmt(gap_se));
  out.require(gap >= gap_se,
              "CPHD-AA not better than CPHD-GCI by one standard error");

  const int window_start = config.run.scans - 30;
  double truth_mean = 0.0;
  for (int k = window_start; k < config.run.scans; ++k) {
    truth_mean += r.true_cardinality[static_cast<std::size_t>(k)];
  }
  truth_mean /= 30.0;
  const auto card_runs = per_run_window_mean(
      method_of(r, "cphd-gci").card_per_run, window_start);
  const double est = mean_of(card_runs);
  const double est_se = stderr_of(card_runs);
  out.note("gci final-30 card=" + fmt(est) + " truth=" + fmt(truth_mean) +
           " se=" + fmt(est_se));
  out.require(est <= truth_mean - est_se,
              "CPHD-GCI does not underestimate cardinality by one SE");
  return out;
}

Outcome criterion_detection_sweep(const StudyResults& results) {
  Outcome out;
  std::string table;
  std::vector<double> gaps;
  for (std::size_t i = 0; i < results.sweep_pd.size(); ++i) {
    const auto& r = results.sweep[i];
    const double gci = time_average(method_of(r, "cphd-gci").ospa_per_run);
    const double aa = time_average(method_of(r, "cphd-aa").ospa_per_run);
    gaps.push_back(gci - aa);
    if (!table.empty()) table += " ";
    table += fmt(results.sweep_pd[i]) + ":" + fmt(gci - aa);
  }
  out.note("gci-aa gaps " + table);
  out.require(gaps[0] > 0.0, "gap not positive at pd0=0.55");
  out.require(gaps[1] > 0.0, "gap not positive at pd0=0.65");
  out.require(gaps[4] <= 0.0, "gap not non-positive at pd0=0.95");
  return out;
}

// --- 10: single-target Kalman equivalence -----------------------------------

Outcome criterion_kalman_equivalence() {
  Outcome out;
  SensorModel sensor;
  sensor.kind = SensorKind::LinearPosition;
  sensor.sigma_range = 3.0;
  sensor.fov = FovCircle{{0.0, 0.0}, 1e6};
  sensor.detection_prob = 1.0;
  ClutterModel clutter{0.0};
  MotionModel motion;
  motion.noise_intensity = 1.0;

  const Matrix a = motion.transition();
  const Matrix q = motion.process_noise();
  Eigen::Matrix<double, 2, 4> h = Eigen::Matrix<double, 2, 4>::Zero();
  h(0, 0) = 1.0;
  h(1, 2) = 1.0;
  const Eigen::Matrix2d r_mat = 9.0 * Eigen::Matrix2d::Identity();

  std::mt19937 rng(707);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector truth = Vector::Zero(4);
  truth << 0.0, 2.0, 0.0, -1.0;

  Vector kf_mean = Vector::Zero(4);
  kf_mean << 1.0, 1.5, -1.0, 0.0;
  Matrix kf_cov = 50.0 * Matrix::Identity(4, 4);

  IIDClusterDensity density;
  density.intensity.components.push_back({1.0, kf_mean, kf_cov});
  density.cardinality = CardinalityDistribution::delta(1);

  double worst = 0.0;
  for (int scan = 0; scan < 50; ++scan) {
    truth = a * truth;
    const Eigen::Vector2d z(truth(0) + 3.0 * gauss(rng),
                            truth(2) + 3.0 * gauss(rng));
    kf_mean = a * kf_mean;
    kf_cov = a * kf_cov * a.transpose() + q;
    const Eigen::Matrix2d s = h * kf_cov * h.transpose() + r_mat;
    const Eigen::Matrix<double, 4, 2> k = kf_cov * h.transpose() * s.inverse();
    kf_mean = kf_mean + k * (z - h * kf_mean);
    kf_cov = (Matrix::Identity(4, 4) - k * h) * kf_cov;

    density = cphd_predict(density, motion, BirthInput{{}, 0.0});
    density = cphd_update(density, {z}, sensor, clutter);
    if (density.intensity.size() != 1) {
      out.require(false, "posterior is not a single component");
      break;
    }
    worst = std::max(worst,
                     (density.intensity.components[0].mean - kf_mean).norm());
    worst = std::max(
        worst,
        (density.intensity.components[0].covariance - kf_cov).norm());
  }
  out.note("max deviation " + fmt(worst * 1e9) + "e-9");
  out.require(worst <= 1e-6, "CPHD deviates from the Kalman reference");
  return out;
}

// --- 11: byte-identical reruns ----------------------------------------------

Outcome criterion_determinism() {
  Outcome out;
  const fs::path scenario = fs::path(MOSAIC_SCENARIO_DIR) / "default.json";
  const fs::path work = fs::temp_directory_path() / "mosaic_acceptance_det";
  fs::remove_all(work);
  fs::create_directories(work);
  const std::string base = std::string(MOSAIC_CLI_PATH) + " run --config " +
                           scenario.string() +
                           " --override run.mc_runs=2 --override run.scans=12";
  const std::string run_a =
      base + " --out " + (work / "a").string() + " --threads 2 > /dev/null 2>&1";
  const std::string run_b =
      base + " --out " + (work / "b").string() + " --threads 1 > /dev/null 2>&1";
  out.require(std::system(run_a.c_str()) == 0, "first CLI run failed");
  out.require(std::system(run_b.c_str()) == 0, "second CLI run failed");
  for (const char* name :
       {"ospa_per_scan.csv", "cardinality_per_scan.csv", "summary.csv"}) {
    std::ifstream fa(work / "a" / name), fb(work / "b" / name);
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    out.require(fa.good() && fb.good() && sa.str() == sb.str() &&
                    !sa.str().empty(),
                std::string(name) + " differs between reruns");
  }
  return out;
}

}  // namespace

int main() {
  std::vector<std::pair<std::string, std::function<Outcome()>>> fast{
      {"cardinality algebra matches enumeration oracles",
       criterion_cardinality_algebra},
      {"fusion rule identities", criterion_fusion_identities},
      {"cluster partitions satisfy both gating conditions",
       criterion_partition_validity},
      {"cross-cluster confidence ellipsoids are disjoint",
       criterion_ellipsoid_disjointness},
      {"sub-intensity L1 error within the analytic bound", criterion_l1_bound},
      {"disjoint fields-of-view cardinality fix", criterion_disjoint_fov_fix},
  };

  int failures = 0;
  int index = 1;
  auto report = [&](const std::string& label, const Outcome& outcome) {
    std::printf("[%s] %2d: %s%s%s\n", outcome.pass ? "PASS" : "FAIL", index,
                label.c_str(), outcome.detail.empty() ? "" : " -- ",
                outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
    ++index;
  };

  for (const auto& [label, fn] : fast) report(label, fn());

  const ScenarioConfig config = base_scenario();
  const StudyResults studies = run_studies();
  report("high detection probability ordering (25 MC runs)",
         criterion_high_pd_ordering(studies, config));
  report("low detection probability ordering (25 MC runs)",
         criterion_low_pd_ordering(studies, config));
  report("detection probability sweep crossover",
         criterion_detection_sweep(studies));
  report("single-target Kalman equivalence", criterion_kalman_equivalence());
  report("byte-identical reruns", criterion_determinism());

  if (failures > 0) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
