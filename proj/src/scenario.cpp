#include "mosaic/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "mosaic/cardinality.hpp"

namespace mosaic {

namespace {

using nlohmann::json;

[[noreturn]] void config_fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

const json& require(const json& j, const char* key, const std::string& path) {
  const auto it = j.find(key);
  if (it == j.end()) config_fail(path + "." + key, "missing field");
  return *it;
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) config_fail(path, "expected a number");
  return j.get<double>();
}

int as_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) config_fail(path, "expected an integer");
  return j.get<int>();
}

double opt_number(const json& j, const char* key, double fallback,
                  const std::string& path) {
  const auto it = j.find(key);
  return it == j.end() ? fallback : as_number(*it, path + "." + key);
}

int opt_int(const json& j, const char* key, int fallback,
            const std::string& path) {
  const auto it = j.find(key);
  return it == j.end() ? fallback : as_int(*it, path + "." + key);
}

Eigen::Vector2d as_vec2(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) {
    config_fail(path, "expected an array of 2 numbers");
  }
  return {as_number(j[0], path + "[0]"), as_number(j[1], path + "[1]")};
}

Eigen::Vector4d as_vec4(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 4) {
    config_fail(path, "expected an array of 4 numbers");
  }
  Eigen::Vector4d v;
  for (int i = 0; i < 4; ++i) {
    v(i) = as_number(j[static_cast<std::size_t>(i)],
                     path + "[" + std::to_string(i) + "]");
  }
  return v;
}

ScenarioConfig parse_json(const json& root) {
  ScenarioConfig config;

  const json& network = require(root, "network", "");
  const json& nodes = require(network, "nodes", "network");
  if (!nodes.is_array() || nodes.empty()) {
    config_fail("network.nodes", "expected a nonempty array");
  }
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string path = "network.nodes[" + std::to_string(i) + "]";
    const json& n = nodes[i];
    NodeConfig node;
    node.position = as_vec2(require(n, "position", path), path + ".position");
    node.fov_radius = as_number(require(n, "fov_radius", path), path + ".fov_radius");
    node.sigma_r = opt_number(n, "sigma_r", node.sigma_r, path);
    node.sigma_theta = opt_number(n, "sigma_theta", node.sigma_theta, path);
    node.pd0 = opt_number(n, "pd0", node.pd0, path);
    config.network.nodes.push_back(node);
  }
  const json& arcs = require(network, "arcs", "network");
  if (!arcs.is_array()) config_fail("network.arcs", "expected an array");
  for (std::size_t i = 0; i < arcs.size(); ++i) {
    const std::string path = "network.arcs[" + std::to_string(i) + "]";
    const json& a = arcs[i];
    if (!a.is_array() || a.size() != 2) {
      config_fail(path, "expected an [from, to] pair");
    }
    config.network.arcs.emplace_back(as_int(a[0], path + "[0]"),
                                     as_int(a[1], path + "[1]"));
  }

  const json& motion = require(root, "motion", "");
  config.motion.Ts = as_number(require(motion, "Ts", "motion"), "motion.Ts");
  config.motion.sigma_w =
      as_number(require(motion, "sigma_w", "motion"), "motion.sigma_w");
  config.motion.ps = as_number(require(motion, "ps", "motion"), "motion.ps");
  config.motion.truth_sigma_w =
      opt_number(motion, "truth_sigma_w", -1.0, "motion");

  const json& clutter = require(root, "clutter", "");
  config.clutter.lambda_c =
      as_number(require(clutter, "lambda_c", "clutter"), "clutter.lambda_c");

  const json& birth = require(root, "birth", "");
  config.birth.rate = as_number(require(birth, "rate", "birth"), "birth.rate");
  config.birth.pb_diag =
      as_vec4(require(birth, "Pb_diag", "birth"), "birth.Pb_diag");

  const json& targets = require(root, "targets", "");
  if (!targets.is_array()) config_fail("targets", "expected an array");
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const std::string path = "targets[" + std::to_string(i) + "]";
    const json& t = targets[i];
    TargetConfig target;
    target.initial_state =
        as_vec4(require(t, "initial_state", path), path + ".initial_state");
    target.birth_scan = opt_int(t, "birth_scan", 0, path);
    target.death_scan = opt_int(t, "death_scan", -1, path);
    config.targets.push_back(target);
  }

  const json& run = require(root, "run", "");
  config.run.scans = as_int(require(run, "scans", "run"), "run.scans");
  config.run.mc_runs = as_int(require(run, "mc_runs", "run"), "run.mc_runs");
  config.run.consensus_steps =
      as_int(require(run, "consensus_steps", "run"), "run.consensus_steps");
  const json& rule = require(run, "rule", "run");
  if (!rule.is_string() || (rule != "gci" && rule != "aa")) {
    config_fail("run.rule", "expected \"gci\" or \"aa\"");
  }
  config.run.rule = rule == "gci" ? FusionRule::Gci : FusionRule::Aa;
  const json& filter = require(run, "filter", "run");
  if (!filter.is_string() || (filter != "phd" && filter != "cphd")) {
    config_fail("run.filter", "expected \"phd\" or \"cphd\"");
  }
  config.run.filter = filter == "cphd" ? FilterKind::Cphd : FilterKind::Phd;
  config.run.rho = as_number(require(run, "rho", "run"), "run.rho");
  config.run.omega = as_number(require(run, "omega", "run"), "run.omega");
  const json& seed = require(run, "seed", "run");
  if (!seed.is_number_unsigned() && !seed.is_number_integer()) {
    config_fail("run.seed", "expected an integer seed");
  }
  config.run.seed = seed.get<std::uint64_t>();
  config.run.n_max = opt_int(run, "n_max", kMaxTargets, "run");
  config.run.reduce.prune_threshold =
      opt_number(run, "prune_threshold", 1e-5, "run");
  config.run.reduce.merge_threshold =
      opt_number(run, "merge_threshold", 4.0, "run");
  config.run.reduce.max_components = opt_int(run, "max_components", 40, "run");
  config.run.ospa.cutoff = opt_number(run, "ospa_cutoff", 600.0, "run");
  config.run.ospa.order = opt_number(run, "ospa_order", 1.0, "run");
  return config;
}

json to_json(const ScenarioConfig& config) {
  json nodes = json::array();
  for (const auto& n : config.network.nodes) {
    nodes.push_back({{"position", {n.position(0), n.position(1)}},
                     {"fov_radius", n.fov_radius},
                     {"sigma_r", n.sigma_r},
                     {"sigma_theta", n.sigma_theta},
                     {"pd0", n.pd0}});
  }
  json arcs = json::array();
  for (const auto& [from, to] : config.network.arcs) {
    arcs.push_back({from, to});
  }
  json targets = json::array();
  for (const auto& t : config.targets) {
    targets.push_back({{"initial_state",
                        {t.initial_state(0), t.initial_state(1),
                         t.initial_state(2), t.initial_state(3)}},
                       {"birth_scan", t.birth_scan},
                       {"death_scan", t.death_scan}});
  }
  return json{
      {"network", {{"nodes", nodes}, {"arcs", arcs}}},
      {"motion",
       {{"Ts", config.motion.Ts},
        {"sigma_w", config.motion.sigma_w},
        {"ps", config.motion.ps},
        {"truth_sigma_w", config.motion.truth_sigma_w}}},
      {"clutter", {{"lambda_c", config.clutter.lambda_c}}},
      {"birth",
       {{"rate", config.birth.rate},
        {"Pb_diag",
         {config.birth.pb_diag(0), config.birth.pb_diag(1),
          config.birth.pb_diag(2), config.birth.pb_diag(3)}}}},
      {"targets", targets},
      {"run",
       {{"scans", config.run.scans},
        {"mc_runs", config.run.mc_runs},
        {"consensus_steps", config.run.consensus_steps},
        {"rule", config.run.rule == FusionRule::Gci ? "gci" : "aa"},
        {"filter", config.run.filter == FilterKind::Cphd ? "cphd" : "phd"},
        {"rho", config.run.rho},
        {"omega", config.run.omega},
        {"seed", config.run.seed},
        {"n_max", config.run.n_max},
        {"prune_threshold", config.run.reduce.prune_threshold},
        {"merge_threshold", config.run.reduce.merge_threshold},
        {"max_components", config.run.reduce.max_components},
        {"ospa_cutoff", config.run.ospa.cutoff},
        {"ospa_order", config.run.ospa.order}}}};
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
  }
  return parse_json(root);
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str());
}

std::string apply_override(const std::string& json_text,
                           const std::string& key_value) {
  const auto eq = key_value.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override must have the form KEY=VALUE: " + key_value);
  }
  const std::string key = key_value.substr(0, eq);
  const std::string raw = key_value.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;  // plain string, e.g. run.rule=aa
  }

  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
  }

  if (key == "network.pd0") {
    // Convenience broadcast: one detection probability for every node.
    if (!root.contains("network") || !root["network"].contains("nodes")) {
      throw ConfigError("override network.pd0: scenario has no network.nodes");
    }
    for (auto& node : root["network"]["nodes"]) node["pd0"] = value;
    return root.dump();
  }

  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= key.size()) {
    const auto dot = key.find('.', start);
    if (dot == std::string::npos) {
      parts.push_back(key.substr(start));
      break;
    }
    parts.push_back(key.substr(start, dot - start));
    start = dot + 1;
  }
  json* cursor = &root;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (parts[i].empty()) throw ConfigError("override has an empty path segment: " + key);
    cursor = &((*cursor)[parts[i]]);
  }
  if (parts.back().empty()) {
    throw ConfigError("override has an empty path segment: " + key);
  }
  (*cursor)[parts.back()] = value;
  return root.dump();
}

std::vector<std::string> validate_scenario(const ScenarioConfig& config) {
  std::vector<std::string> problems;
  const int node_count = static_cast<int>(config.network.nodes.size());
  for (int i = 0; i < node_count; ++i) {
    const auto& n = config.network.nodes[static_cast<std::size_t>(i)];
    const std::string path = "network.nodes[" + std::to_string(i) + "]";
    if (!(n.fov_radius > 0.0)) problems.push_back(path + ".fov_radius must be positive");
    if (!(n.sigma_r > 0.0)) problems.push_back(path + ".sigma_r must be positive");
    if (!(n.sigma_theta > 0.0)) problems.push_back(path + ".sigma_theta must be positive");
    if (!(n.pd0 > 0.0) || n.pd0 > 1.0) problems.push_back(path + ".pd0 must lie in (0,1]");
  }
  for (std::size_t i = 0; i < config.network.arcs.size(); ++i) {
    const auto& [from, to] = config.network.arcs[i];
    if (from < 0 || from >= node_count || to < 0 || to >= node_count) {
      problems.push_back("network.arcs[" + std::to_string(i) +
                         "] references an unknown node");
    }
  }
  if (!(config.motion.Ts > 0.0)) problems.push_back("motion.Ts must be positive");
  if (config.motion.sigma_w < 0.0) problems.push_back("motion.sigma_w must be nonnegative");
  if (!(config.motion.ps > 0.0) || config.motion.ps > 1.0) {
    problems.push_back("motion.ps must lie in (0,1]");
  }
  if (config.clutter.lambda_c < 0.0) problems.push_back("clutter.lambda_c must be nonnegative");
  if (config.birth.rate < 0.0) problems.push_back("birth.rate must be nonnegative");
  for (int i = 0; i < 4; ++i) {
    if (!(config.birth.pb_diag(i) > 0.0)) {
      problems.push_back("birth.Pb_diag entries must be positive");
      break;
    }
  }
  for (std::size_t i = 0; i < config.targets.size(); ++i) {
    const auto& t = config.targets[i];
    const std::string path = "targets[" + std::to_string(i) + "]";
    if (t.birth_scan < 0 || t.birth_scan >= config.run.scans) {
      problems.push_back(path + ".birth_scan outside the run horizon");
    }
    if (t.death_scan >= 0 && t.death_scan <= t.birth_scan) {
      problems.push_back(path + ".death_scan must exceed birth_scan");
    }
  }
  if (config.run.scans <= 0) problems.push_back("run.scans must be positive");
  if (config.run.mc_runs <= 0) problems.push_back("run.mc_runs must be positive");
  if (config.run.consensus_steps < 0) {
    problems.push_back("run.consensus_steps must be nonnegative");
  }
  if (!(config.run.rho > 0.0)) problems.push_back("run.rho must be positive");
  if (!(config.run.omega > 0.0) || !(config.run.omega < 1.0)) {
    problems.push_back("run.omega must lie in (0,1)");
  }
  if (config.run.n_max < 1) problems.push_back("run.n_max must be at least 1");
  if (!(config.run.ospa.cutoff > 0.0)) problems.push_back("run.ospa_cutoff must be positive");
  if (!(config.run.ospa.order >= 1.0)) problems.push_back("run.ospa_order must be at least 1");
  return problems;
}

std::string canonical_json(const ScenarioConfig& config) {
  return to_json(config).dump();
}

std::uint64_t config_hash(const ScenarioConfig& config) {
  // FNV-1a over the canonical serialization.
  const std::string text = canonical_json(config);
  std::uint64_t hash = 1469598103934665603ull;
  for (const char c : text) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 1099511628211ull;
  }
  return hash;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                          std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(master) ^ a) ^ b);
}

NetworkGraph build_network(const ScenarioConfig& config) {
  NetworkGraph graph;
  const std::size_t node_count = config.network.nodes.size();
  graph.sensors.reserve(node_count);
  for (const auto& n : config.network.nodes) {
    SensorModel sensor;
    sensor.position = n.position;
    sensor.sigma_bearing = n.sigma_theta;
    sensor.sigma_range = n.sigma_r;
    sensor.fov = FovCircle{n.position, n.fov_radius};
    sensor.detection_prob = n.pd0;
    sensor.kind = SensorKind::RangeBearing;
    graph.sensors.push_back(sensor);
  }
  graph.in_neighbors.assign(node_count, {});
  for (const auto& [from, to] : config.network.arcs) {
    if (from < 0 || to < 0 || from >= static_cast<int>(node_count) ||
        to >= static_cast<int>(node_count)) {
      throw ConfigError("network.arcs references an unknown node");
    }
    graph.in_neighbors[static_cast<std::size_t>(to)].push_back(from);
  }
  for (auto& neighbors : graph.in_neighbors) {
    std::sort(neighbors.begin(), neighbors.end());
    neighbors.erase(std::unique(neighbors.begin(), neighbors.end()),
                    neighbors.end());
  }
  return graph;
}

std::vector<Eigen::Vector2d> GroundTruth::positions(int scan) const {
  std::vector<Eigen::Vector2d> out;
  const auto& at = states[static_cast<std::size_t>(scan)];
  out.reserve(at.size());
  for (const auto& x : at) out.emplace_back(x(0), x(2));
  return out;
}

GroundTruth generate_truth(const ScenarioConfig& config, std::uint64_t seed) {
  const int scans = config.run.scans;
  const double ts = config.motion.Ts;
  const double sigma = config.motion.truth_sigma_w >= 0.0
                           ? config.motion.truth_sigma_w
                           : config.motion.sigma_w;
  MotionModel motion;
  motion.sampling_interval = ts;
  const Matrix a = motion.transition();

  std::mt19937_64 rng = make_truth_stream(seed);
  std::normal_distribution<double> accel(0.0, 1.0);

  GroundTruth truth;
  truth.states.assign(static_cast<std::size_t>(scans), {});
  truth.cardinality.assign(static_cast<std::size_t>(scans), 0);
  for (const auto& target : config.targets) {
    const int death = target.death_scan < 0 ? scans : target.death_scan;
    Eigen::Vector4d state = target.initial_state;
    for (int k = target.birth_scan; k < std::min(death, scans); ++k) {
      if (k > target.birth_scan) {
        state = a * state;
        if (sigma > 0.0) {
          // White-acceleration kick: the exact square root of the CV
          // process-noise block per axis.
          const double ax = sigma * accel(rng);
          const double ay = sigma * accel(rng);
          state(0) += 0.5 * ts * ts * ax;
          state(1) += ts * ax;
          state(2) += 0.5 * ts * ts * ay;
          state(3) += ts * ay;
        }
      }
      truth.states[static_cast<std::size_t>(k)].push_back(state);
      truth.cardinality[static_cast<std::size_t>(k)] += 1;
    }
  }
  return truth;
}

std::vector<Eigen::Vector2d> generate_scan(const GroundTruth& truth, int scan,
                                           const SensorModel& sensor,
                                           const ClutterConfig& clutter,
                                           std::mt19937_64& rng) {
  if (scan < 0 || scan >= static_cast<int>(truth.states.size())) {
    throw std::out_of_range("generate_scan: scan index outside the horizon");
  }
  std::vector<Eigen::Vector2d> measurements;
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  for (const auto& state : truth.states[static_cast<std::size_t>(scan)]) {
    const Eigen::Vector2d pos(state(0), state(2));
    if (!sensor.fov.contains(pos)) continue;
    if (coin(rng) >= sensor.detection_prob) continue;
    Vector full(4);
    full << state(0), state(1), state(2), state(3);
    Eigen::Vector2d z = sensor.predict_measurement(full);
    if (sensor.kind == SensorKind::RangeBearing) {
      z(0) += sensor.sigma_bearing * gauss(rng);
      z(1) += sensor.sigma_range * gauss(rng);
      z(0) = std::remainder(z(0), 2.0 * std::numbers::pi);
    } else {
      z(0) += sensor.sigma_range * gauss(rng);
      z(1) += sensor.sigma_range * gauss(rng);
    }
    measurements.push_back(z);
  }

  std::poisson_distribution<int> count(clutter.lambda_c);
  const int clutter_count = clutter.lambda_c > 0.0 ? count(rng) : 0;
  std::uniform_real_distribution<double> angle(-std::numbers::pi,
                                               std::numbers::pi);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int c = 0; c < clutter_count; ++c) {
    if (sensor.kind == SensorKind::RangeBearing) {
      // Uniform over the polar rectangle, matching the update model.
      measurements.emplace_back(angle(rng), unit(rng) * sensor.fov.radius);
    } else {
      const double phi = angle(rng);
      const double radius = sensor.fov.radius * std::sqrt(unit(rng));
      measurements.emplace_back(sensor.fov.center(0) + radius * std::cos(phi),
                                sensor.fov.center(1) + radius * std::sin(phi));
    }
  }
  return measurements;
}

std::vector<IIDClusterDensity> run_consensus_step(
    const std::vector<IIDClusterDensity>& states, const NetworkGraph& graph,
    FilterKind filter, FusionRule rule, double omega, double rho,
    const GmReduceParams& reduce, int n_max) {
  std::vector<IIDClusterDensity> next;
  next.reserve(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    IIDClusterDensity acc = states[i];
    for (const int j : graph.in_neighbors[i]) {
      const IIDClusterDensity& other = states[static_cast<std::size_t>(j)];
      if (filter == FilterKind::Cphd) {
        acc = robust_fuse(acc, other, rule, omega, rho, reduce, n_max);
      } else {
        GMIntensity fused = robust_fuse_intensity(acc.intensity,
                                                  other.intensity, rule, omega,
                                                  rho, reduce);
        acc.cardinality = poisson_cardinality(fused.mass(), n_max);
        acc.intensity = std::move(fused);
      }
    }
    next.push_back(std::move(acc));
  }
  return next;
}

std::string MethodSpec::name() const {
  std::string base = filter == FilterKind::Cphd ? "cphd" : "phd";
  if (!fused) return base + "-local";
  return base + (rule == FusionRule::Gci ? "-gci" : "-aa");
}

MethodSpec MethodSpec::from_run_config(const RunConfig& run) {
  return MethodSpec{run.filter, run.consensus_steps > 0, run.rule};
}

namespace {

struct NodeState {
  IIDClusterDensity density;
  std::vector<Eigen::Vector2d> pending_birth;
};

void local_step(NodeState& state, const std::vector<Eigen::Vector2d>& meas,
                const SensorModel& sensor, const MotionModel& motion,
                const BirthModel& birth, const ClutterModel& clutter,
                FilterKind kind, const GmReduceParams& reduce, int n_max) {
  BirthInput birth_input{birth.components_from(state.pending_birth, sensor),
                         birth.rate};
  IIDClusterDensity predicted =
      kind == FilterKind::Cphd
          ? cphd_predict(state.density, motion, birth_input, n_max)
          : phd_predict(state.density, motion, birth_input, n_max);
  IIDClusterDensity posterior =
      kind == FilterKind::Cphd
          ? cphd_update(predicted, meas, sensor, clutter, n_max)
          : phd_update(predicted, meas, sensor, clutter, n_max);
  posterior.intensity = gm_reduce(posterior.intensity, reduce);
  if (kind == FilterKind::Phd) {
    posterior.cardinality =
        poisson_cardinality(posterior.intensity.mass(), n_max);
  }
  state.density = std::move(posterior);
  state.pending_birth = meas;
}

}  // namespace

ExperimentResult run_experiment(const ScenarioConfig& config,
                                const std::vector<MethodSpec>& methods,
                                int threads) {
  const auto problems = validate_scenario(config);
  if (!problems.empty()) {
    throw ConfigError("invalid scenario: " + problems.front());
  }
  const int scans = config.run.scans;
  const int runs = config.run.mc_runs;
  const NetworkGraph graph = build_network(config);
  const std::size_t node_count = graph.sensors.size();
  const GroundTruth truth = generate_truth(config, config.run.seed);

  MotionModel motion;
  motion.sampling_interval = config.motion.Ts;
  motion.noise_intensity = config.motion.sigma_w;
  motion.survival_prob = config.motion.ps;
  BirthModel birth;
  birth.rate = config.birth.rate;
  birth.pb_sqrt_diag = config.birth.pb_diag;
  ClutterModel clutter;
  clutter.mean_count = config.clutter.lambda_c;

  ExperimentResult result;
  result.true_cardinality.assign(static_cast<std::size_t>(scans), 0.0);
  for (int k = 0; k < scans; ++k) {
    result.true_cardinality[static_cast<std::size_t>(k)] =
        static_cast<double>(truth.cardinality[static_cast<std::size_t>(k)]);
  }
  for (const auto& method : methods) {
    MethodResult mr;
    mr.method = method.name();
    mr.ospa_per_run.assign(static_cast<std::size_t>(runs),
                           std::vector<double>(static_cast<std::size_t>(scans), 0.0));
    mr.card_per_run = mr.ospa_per_run;
    result.methods.push_back(std::move(mr));
  }

  std::mutex error_mutex;
  int first_error_run = -1;
  std::string error_message;

  auto record_error = [&](int run, const std::string& message) {
    std::lock_guard<std::mutex> lock(error_mutex);
    if (first_error_run < 0 || run < first_error_run) {
      first_error_run = run;
      error_message = message;
    }
  };

  auto simulate_run = [&](int run) {
    // Measurement data shared by every method in this run.
    std::vector<std::vector<std::vector<Eigen::Vector2d>>> data(
        node_count,
        std::vector<std::vector<Eigen::Vector2d>>(static_cast<std::size_t>(scans)));
    for (std::size_t node = 0; node < node_count; ++node) {
      std::mt19937_64 rng = make_stream(config.run.seed,
                                        static_cast<std::uint64_t>(run), node);
      for (int k = 0; k < scans; ++k) {
        data[node][static_cast<std::size_t>(k)] = generate_scan(
            truth, k, graph.sensors[node], config.clutter, rng);
      }
    }

    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      const MethodSpec& method = methods[mi];
      std::vector<NodeState> states(node_count);
      for (auto& s : states) {
        s.density = IIDClusterDensity::empty_density(config.run.n_max);
      }
      for (int k = 0; k < scans; ++k) {
        for (std::size_t node = 0; node < node_count; ++node) {
          try {
            local_step(states[node], data[node][static_cast<std::size_t>(k)],
                       graph.sensors[node], motion, birth, clutter,
                       method.filter, config.run.reduce, config.run.n_max);
          } catch (const std::exception& e) {
            throw NumericError("run " + std::to_string(run) + " scan " +
                               std::to_string(k) + " node " +
                               std::to_string(node) + ": " + e.what());
          }
        }
        if (method.fused) {
          std::vector<IIDClusterDensity> densities;
          densities.reserve(node_count);
          for (const auto& s : states) densities.push_back(s.density);
          for (int step = 0; step < config.run.consensus_steps; ++step) {
            try {
              densities = run_consensus_step(
                  densities, graph, method.filter, method.rule,
                  config.run.omega, config.run.rho, config.run.reduce,
                  config.run.n_max);
            } catch (const std::exception& e) {
              throw NumericError("run " + std::to_string(run) + " scan " +
                                 std::to_string(k) + " consensus step " +
                                 std::to_string(step) + ": " + e.what());
            }
          }
          for (std::size_t node = 0; node < node_count; ++node) {
            states[node].density = std::move(densities[node]);
          }
        }
        const std::vector<Eigen::Vector2d> truth_pos = truth.positions(k);
        double ospa_sum = 0.0;
        double card_sum = 0.0;
        for (std::size_t node = 0; node < node_count; ++node) {
          const auto estimates = extract_estimates(states[node].density);
          ospa_sum += ospa(estimates, truth_pos, config.run.ospa);
          card_sum += static_cast<double>(
              map_cardinality(states[node].density.cardinality));
        }
        auto& mr = result.methods[mi];
        mr.ospa_per_run[static_cast<std::size_t>(run)][static_cast<std::size_t>(k)] =
            ospa_sum / static_cast<double>(node_count);
        mr.card_per_run[static_cast<std::size_t>(run)][static_cast<std::size_t>(k)] =
            card_sum / static_cast<double>(node_count);
      }
    }
  };

  const int workers = std::max(1, threads);
  if (workers == 1) {
    for (int run = 0; run < runs; ++run) {
      simulate_run(run);
    }
  } else {
    std::atomic<int> next_run{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&]() {
        for (;;) {
          const int run = next_run.fetch_add(1);
          if (run >= runs) return;
          try {
            simulate_run(run);
          } catch (const std::exception& e) {
            record_error(run, e.what());
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (first_error_run >= 0) throw NumericError(error_message);
  }
  return result;
}

std::vector<double> mean_over_runs(
    const std::vector<std::vector<double>>& per_run_per_scan) {
  if (per_run_per_scan.empty()) return {};
  const std::size_t scans = per_run_per_scan.front().size();
  std::vector<double> mean(scans, 0.0);
  for (const auto& run : per_run_per_scan) {
    for (std::size_t k = 0; k < scans; ++k) mean[k] += run[k];
  }
  for (double& v : mean) v /= static_cast<double>(per_run_per_scan.size());
  return mean;
}

double time_average(const std::vector<std::vector<double>>& per_run_per_scan) {
  const std::vector<double> per_scan = mean_over_runs(per_run_per_scan);
  if (per_scan.empty()) return 0.0;
  double total = 0.0;
  for (double v : per_scan) total += v;
  return total / static_cast<double>(per_scan.size());
}

std::vector<double> per_run_time_average(
    const std::vector<std::vector<double>>& per_run_per_scan) {
  std::vector<double> out;
  out.reserve(per_run_per_scan.size());
  for (const auto& run : per_run_per_scan) {
    double total = 0.0;
    for (double v : run) total += v;
    out.push_back(run.empty() ? 0.0 : total / static_cast<double>(run.size()));
  }
  return out;
}

}  // namespace mosaic
