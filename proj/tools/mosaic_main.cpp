#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mosaic/cardinality.hpp"
#include "mosaic/scenario.hpp"

namespace {

namespace fs = std::filesystem;
using mosaic::ConfigError;
using mosaic::NumericError;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

std::string fmt(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.6f", value);
  return buffer;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  int threads{2};
  std::uint64_t seed{0};
  bool seed_set{false};
};

void add_common(CLI::App* cmd, CommonOptions& options) {
  cmd->add_option("--config", options.config_path, "Scenario file (JSON)")
      ->required();
  cmd->add_option("--override", options.overrides,
                  "Dotted-path override KEY=VALUE (repeatable)");
  cmd->add_option("--out", options.out_dir,
                  "Output directory (default: $MOSAIC_OUT_DIR or .)");
  cmd->add_option("--threads", options.threads, "Worker threads for MC runs");
  cmd->add_option("--seed", options.seed, "Master seed override")
      ->each([&options](const std::string&) { options.seed_set = true; });
}

fs::path resolve_out_dir(const CommonOptions& options) {
  if (!options.out_dir.empty()) return options.out_dir;
  if (const char* env = std::getenv("MOSAIC_OUT_DIR"); env && *env) return env;
  return ".";
}

mosaic::ScenarioConfig load_with_overrides(const CommonOptions& options) {
  std::string text = read_file(options.config_path);
  for (const auto& override_kv : options.overrides) {
    text = mosaic::apply_override(text, override_kv);
  }
  if (options.seed_set) {
    text = mosaic::apply_override(text,
                                  "run.seed=" + std::to_string(options.seed));
  }
  mosaic::ScenarioConfig config = mosaic::parse_scenario(text);
  const auto problems = mosaic::validate_scenario(config);
  if (!problems.empty()) {
    std::ostringstream message;
    message << "invalid scenario:";
    for (const auto& p : problems) message << "\n  " << p;
    throw ConfigError(message.str());
  }
  return config;
}

double mean_pd0(const mosaic::ScenarioConfig& config) {
  double total = 0.0;
  for (const auto& n : config.network.nodes) total += n.pd0;
  return config.network.nodes.empty()
             ? 0.0
             : total / static_cast<double>(config.network.nodes.size());
}

struct RunOutputs {
  fs::path ospa_csv;
  fs::path card_csv;
  fs::path summary_csv;
  fs::path manifest;
  std::vector<std::pair<std::string, double>> summary;  // (method, time avg)
};

RunOutputs execute_run(const mosaic::ScenarioConfig& config,
                       const fs::path& out_dir, int threads) {
  const auto started = std::chrono::steady_clock::now();
  const std::vector<mosaic::MethodSpec> methods{
      mosaic::MethodSpec::from_run_config(config.run)};
  const mosaic::ExperimentResult result =
      mosaic::run_experiment(config, methods, threads);

  fs::create_directories(out_dir);
  RunOutputs outputs;
  outputs.ospa_csv = out_dir / "ospa_per_scan.csv";
  outputs.card_csv = out_dir / "cardinality_per_scan.csv";
  outputs.summary_csv = out_dir / "summary.csv";
  outputs.manifest = out_dir / "manifest.json";

  const int scans = config.run.scans;
  {
    std::ofstream ospa(outputs.ospa_csv);
    ospa << "scan,method,mean_ospa\n";
    std::ofstream card(outputs.card_csv);
    card << "scan,method,mean_est_card,true_card\n";
    std::vector<std::vector<double>> ospa_means, card_means;
    for (const auto& method : result.methods) {
      ospa_means.push_back(mosaic::mean_over_runs(method.ospa_per_run));
      card_means.push_back(mosaic::mean_over_runs(method.card_per_run));
    }
    for (int k = 0; k < scans; ++k) {
      for (std::size_t m = 0; m < result.methods.size(); ++m) {
        ospa << (k + 1) << ',' << result.methods[m].method << ','
             << fmt(ospa_means[m][static_cast<std::size_t>(k)]) << '\n';
        card << (k + 1) << ',' << result.methods[m].method << ','
             << fmt(card_means[m][static_cast<std::size_t>(k)]) << ','
             << fmt(result.true_cardinality[static_cast<std::size_t>(k)])
             << '\n';
      }
    }
  }
  {
    std::ofstream summary(outputs.summary_csv);
    summary << "method,pd0,time_avg_ospa\n";
    for (const auto& method : result.methods) {
      const double avg = mosaic::time_average(method.ospa_per_run);
      summary << method.method << ',' << fmt(mean_pd0(config)) << ','
              << fmt(avg) << '\n';
      outputs.summary.emplace_back(method.method, avg);
    }
  }
  {
    const auto elapsed = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - started)
                             .count();
    char hash_hex[32];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                  static_cast<unsigned long long>(mosaic::config_hash(config)));
    nlohmann::json manifest{
        {"config_hash", hash_hex},
        {"seed", config.run.seed},
        {"tool_version", mosaic::kToolVersion},
        {"outputs",
         {{"ospa_per_scan", outputs.ospa_csv.string()},
          {"cardinality_per_scan", outputs.card_csv.string()},
          {"summary", outputs.summary_csv.string()}}},
        {"duration_seconds", elapsed},
    };
    std::ofstream out(outputs.manifest);
    out << manifest.dump(2) << '\n';
  }
  return outputs;
}

std::string resolve_sweep_param(const std::string& param) {
  if (param == "pd0") return "network.pd0";
  if (param.find('.') != std::string::npos) return param;
  return "run." + param;
}

int cmd_run(const CommonOptions& options) {
  const auto config = load_with_overrides(options);
  const auto outputs =
      execute_run(config, resolve_out_dir(options), options.threads);
  for (const auto& [method, avg] : outputs.summary) {
    std::cout << method << " time_avg_ospa=" << fmt(avg) << '\n';
  }
  std::cout << "wrote " << outputs.ospa_csv.string() << ", "
            << outputs.card_csv.string() << ", " << outputs.summary_csv.string()
            << ", " << outputs.manifest.string() << '\n';
  return kExitOk;
}

int cmd_sweep(const CommonOptions& options, const std::string& param,
              const std::vector<std::string>& values) {
  if (values.empty()) {
    throw ConfigError("sweep requires a nonempty --values list");
  }
  const std::string key = resolve_sweep_param(param);
  const fs::path out_root = resolve_out_dir(options);
  fs::create_directories(out_root);
  std::ofstream sweep(out_root / "sweep.csv");
  sweep << "value,method,time_avg_ospa\n";
  for (const auto& value : values) {
    CommonOptions per_value = options;
    per_value.overrides.push_back(key + "=" + value);
    const auto config = load_with_overrides(per_value);
    const fs::path sub = out_root / ("sweep_" + param + "_" + value);
    const auto outputs = execute_run(config, sub, options.threads);
    for (const auto& [method, avg] : outputs.summary) {
      sweep << value << ',' << method << ',' << fmt(avg) << '\n';
      std::cout << param << "=" << value << " " << method
                << " time_avg_ospa=" << fmt(avg) << '\n';
    }
  }
  std::cout << "wrote " << (out_root / "sweep.csv").string() << '\n';
  return kExitOk;
}

int cmd_validate(const CommonOptions& options) {
  std::string text = read_file(options.config_path);
  for (const auto& override_kv : options.overrides) {
    text = mosaic::apply_override(text, override_kv);
  }
  const auto config = mosaic::parse_scenario(text);
  const auto problems = mosaic::validate_scenario(config);
  if (problems.empty()) {
    std::cout << "ok: " << options.config_path << " ("
              << config.network.nodes.size() << " nodes, "
              << config.targets.size() << " targets, " << config.run.scans
              << " scans)\n";
    return kExitOk;
  }
  for (const auto& p : problems) std::cerr << "invalid: " << p << '\n';
  return kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mosaic: distributed multi-target tracking experiments"};
  app.require_subcommand(1);

  CommonOptions run_options, sweep_options, validate_options;
  std::string sweep_param;
  std::vector<std::string> sweep_values;

  CLI::App* run = app.add_subcommand("run", "Run a scenario and write CSVs");
  add_common(run, run_options);

  CLI::App* sweep =
      app.add_subcommand("sweep", "Repeat a run over a parameter sweep");
  add_common(sweep, sweep_options);
  sweep->add_option("--param", sweep_param,
                    "Parameter to sweep (pd0, rho, or a dotted path)")
      ->required();
  sweep->add_option("--values", sweep_values, "Sweep values")
      ->required()
      ->delimiter(',');

  CLI::App* validate =
      app.add_subcommand("validate", "Check a scenario without running");
  add_common(validate, validate_options);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_options);
    if (sweep->parsed()) return cmd_sweep(sweep_options, sweep_param, sweep_values);
    if (validate->parsed()) return cmd_validate(validate_options);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitOk;
}
