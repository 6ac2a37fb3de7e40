#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "mosaic/filter.hpp"
#include "mosaic/fusion.hpp"
#include "mosaic/metrics.hpp"
#include "mosaic/robust_fusion.hpp"
#include "mosaic/types.hpp"

namespace mosaic {

inline constexpr const char* kToolVersion = "0.1.0";

enum class FilterKind { Phd, Cphd };

struct NodeConfig {
  Eigen::Vector2d position{0.0, 0.0};
  double fov_radius{0.0};
  double sigma_r{5.0};
  double sigma_theta{0.017453292519943295};  // rad
  double pd0{0.95};
};

struct NetworkConfig {
  std::vector<NodeConfig> nodes;
  std::vector<std::pair<int, int>> arcs;  // (j, i): node i receives from j
};

struct MotionConfig {
  double Ts{1.0};
  double sigma_w{5.0};
  double ps{0.95};
  /// Process-noise intensity used when simulating the true tracks; negative
  /// means "same as sigma_w".
  double truth_sigma_w{-1.0};
};

struct ClutterConfig {
  double lambda_c{15.0};
};

struct BirthConfig {
  double rate{0.15};
  Eigen::Vector4d pb_diag{50.0, 20.0, 50.0, 20.0};
};

struct TargetConfig {
  Eigen::Vector4d initial_state{0.0, 0.0, 0.0, 0.0};
  int birth_scan{0};
  /// First scan at which the target no longer exists; negative means the
  /// target survives to the end of the run.
  int death_scan{-1};
};

struct RunConfig {
  int scans{100};
  int mc_runs{25};
  int consensus_steps{3};
  FusionRule rule{FusionRule::Gci};
  FilterKind filter{FilterKind::Cphd};
  double rho{20.0};
  double omega{0.5};
  std::uint64_t seed{1};
  int n_max{kMaxTargets};
  GmReduceParams reduce;
  OspaParams ospa;
};

struct ScenarioConfig {
  NetworkConfig network;
  MotionConfig motion;
  ClutterConfig clutter;
  BirthConfig birth;
  std::vector<TargetConfig> targets;
  RunConfig run;
};

/// Loads and parses a scenario file; throws ConfigError with a field-level
/// message on schema problems.
ScenarioConfig load_scenario(const std::string& path);
ScenarioConfig parse_scenario(const std::string& json_text);

/// Applies a dotted-path override such as "run.mc_runs=2" to the raw JSON
/// text of a scenario; "network.pd0" broadcasts to every node. The value is
/// parsed as JSON when possible, otherwise taken as a string.
std::string apply_override(const std::string& json_text,
                           const std::string& key_value);

/// Structural checks beyond the schema (positive radii, arcs referencing
/// existing nodes, nonnegative rates, ...). Returns human-readable problems.
std::vector<std::string> validate_scenario(const ScenarioConfig& config);

/// Canonical 64-bit hash of the scenario (FNV-1a over the canonical JSON
/// serialization); recorded in the run manifest.
std::uint64_t config_hash(const ScenarioConfig& config);
std::string canonical_json(const ScenarioConfig& config);

// ---------------------------------------------------------------------------
// Random streams: one independent stream per (run, node), derived from the
// master seed by splitmix64 so that runs and nodes never share draws.

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                          std::uint64_t b);
inline std::mt19937_64 make_stream(std::uint64_t master, std::uint64_t run,
                                   std::uint64_t node) {
  return std::mt19937_64(derive_seed(master, run + 1, node + 1));
}
inline std::mt19937_64 make_truth_stream(std::uint64_t master) {
  return std::mt19937_64(derive_seed(master, 0, 0));
}

// ---------------------------------------------------------------------------

struct NetworkGraph {
  std::vector<SensorModel> sensors;
  std::vector<std::vector<int>> in_neighbors;  // sorted ascending
};

NetworkGraph build_network(const ScenarioConfig& config);

/// True target states per scan, ordered by target id within each scan.
struct GroundTruth {
  std::vector<std::vector<Eigen::Vector4d>> states;  // [scan][target]
  std::vector<int> cardinality;                      // [scan]

  std::vector<Eigen::Vector2d> positions(int scan) const;
};

/// Simulates the true tracks; deterministic given the seed. Targets follow
/// the constant-velocity dynamics with sampled white-acceleration noise of
/// intensity truth_sigma_w (exactly linear when it is zero).
GroundTruth generate_truth(const ScenarioConfig& config, std::uint64_t seed);

/// One node's measurement set for one scan: per in-FoV target a
/// Bernoulli(pd0) detection with noisy range/bearing, plus Poisson clutter
/// uniform over the FoV image in measurement space.
std::vector<Eigen::Vector2d> generate_scan(const GroundTruth& truth, int scan,
                                           const SensorModel& sensor,
                                           const ClutterConfig& clutter,
                                           std::mt19937_64& rng);

/// One synchronous consensus round: every node fuses its density pairwise
/// (omega = 1/2 each) with each in-neighbor's pre-round density, in
/// ascending neighbor order. PHD densities fuse intensity-only; the
/// cardinality slot is refreshed as Poisson(mass).
std::vector<IIDClusterDensity> run_consensus_step(
    const std::vector<IIDClusterDensity>& states, const NetworkGraph& graph,
    FilterKind filter, FusionRule rule, double omega, double rho,
    const GmReduceParams& reduce, int n_max);

// ---------------------------------------------------------------------------

struct MethodSpec {
  FilterKind filter{FilterKind::Cphd};
  bool fused{true};
  FusionRule rule{FusionRule::Gci};

  std::string name() const;  // e.g. "cphd-gci", "phd-local"
  static MethodSpec from_run_config(const RunConfig& run);
};

struct MethodResult {
  std::string method;
  /// Node-averaged OSPA and MAP-cardinality estimates, indexed [run][scan].
  std::vector<std::vector<double>> ospa_per_run;
  std::vector<std::vector<double>> card_per_run;
};

struct ExperimentResult {
  std::vector<double> true_cardinality;  // per scan
  std::vector<MethodResult> methods;
};

/// Runs the full Monte Carlo experiment: truth is shared across runs,
/// measurement noise is independent per run, and every method is evaluated
/// on identical per-run measurement data. Runs execute in a worker pool;
/// results are deterministic regardless of thread count.
ExperimentResult run_experiment(const ScenarioConfig& config,
                                const std::vector<MethodSpec>& methods,
                                int threads = 1);

/// Per-scan mean over runs.
std::vector<double> mean_over_runs(
    const std::vector<std::vector<double>>& per_run_per_scan);

/// Mean over runs and scans.
double time_average(const std::vector<std::vector<double>>& per_run_per_scan);

/// Per-run mean over scans (for Monte Carlo standard errors).
std::vector<double> per_run_time_average(
    const std::vector<std::vector<double>>& per_run_per_scan);

}  // namespace mosaic
