#ifndef METRICQ_EXPERIMENTS_HPP
#define METRICQ_EXPERIMENTS_HPP

// Reproducible experiment drivers behind the command-line tool. Every
// command is a pure function of its configuration: replication r uses the
// seed derive_seed(seed, r), results are aggregated in replication order,
// and each CSV starts with comment lines holding the normalized config.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "metricq/inference.hpp"
#include "metricq/metric_space.hpp"
#include "metricq/samplers.hpp"

namespace metricq {

inline constexpr int kConfigVersion = 1;

struct ExperimentConfig {
  std::string command;

  // Data: either a sampler or a dataset file. `space`, when given, must
  // match the data's space.
  std::optional<SamplerSpec> sampler;
  std::optional<std::string> dataset;
  std::optional<SpaceDescriptor> space;
  std::size_t n = 500;

  // quantile-map
  std::size_t reference_n = 0;           // 0: no reference evaluation
  std::vector<nlohmann::json> grid;      // query points, JSON point form
  std::vector<double> taus;

  // local-quantile-map: anchor point, or index of a sample point
  std::optional<nlohmann::json> anchor;
  std::optional<std::size_t> anchor_index;

  // robustness
  std::string scenario = "r3";  // r3 | s2 | spd3 | custom
  std::optional<SamplerSpec> contamination;
  std::optional<nlohmann::json> center;
  std::vector<double> alphas;

  // breakdown
  std::vector<std::string> presets;

  // indep-power
  std::string noise = "gaussian";  // gaussian | cauchy
  std::string sweep = "k";         // k | n
  std::vector<double> k_values;
  std::vector<std::size_t> n_values;
  double k = 2.0;
  double test_alpha = 0.05;
  Alternative alternative = Alternative::kTwoSided;

  std::size_t replications = 100;
  std::uint64_t seed = 1;

  // Runtime settings; they never change the results and are not echoed.
  std::string output_dir = ".";
  unsigned threads = 1;
  bool dump_matrices = false;
};

nlohmann::json sampler_to_json(const SamplerSpec& spec);
/// {"preset": name} or {"family": name, ...parameters}; throws ConfigError.
SamplerSpec sampler_from_json(const nlohmann::json& j);
SamplerSpec preset_by_name(const std::string& name);
std::vector<std::string> preset_names();

/// Parses and validates; fills command-specific defaults. Throws ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
/// Normalized form (defaults filled in, runtime settings omitted).
nlohmann::json config_to_json(const ExperimentConfig& config);

nlohmann::json report_to_json(const TestReport& report);

struct Artifact {
  std::vector<std::string> files;
  nlohmann::json summary = nlohmann::json::object();
};

Artifact cmd_quantile_map(const ExperimentConfig& config);
Artifact cmd_local_quantile_map(const ExperimentConfig& config);
Artifact cmd_robustness(const ExperimentConfig& config);
Artifact cmd_breakdown_table(const ExperimentConfig& config);
Artifact cmd_indep_power(const ExperimentConfig& config);

Artifact run_command(const ExperimentConfig& config);

// Building blocks, exposed for tests.

struct RobustnessPoint {
  double alpha;
  double mean_distance;
  double sd_distance;
};

struct RobustnessScenario {
  SamplerSpec base;
  SamplerSpec contamination;
  Point center;
};

/// r3: N(0, I_3) vs independent Cauchy, center 0. s2: vMF(e1, 1) vs
/// vMF((1,1,1)/sqrt 3, 1), center e1. spd3: Wishart(I, 3) vs Wishart(T, 3)
/// with T the 0.6-Toeplitz scale, center 3 I (the mean of the base law).
RobustnessScenario robustness_scenario(const std::string& name);

std::vector<RobustnessPoint> robustness_curve(const RobustnessScenario& scenario,
                                              const std::vector<double>& alphas, std::size_t n,
                                              std::size_t replications, std::uint64_t seed,
                                              unsigned threads = 1);

struct BreakdownRow {
  std::string preset;
  double mean_bound;
  double sd_bound;
};

std::vector<BreakdownRow> breakdown_table(const std::vector<std::string>& presets, std::size_t n,
                                          std::size_t replications, std::uint64_t seed,
                                          unsigned threads = 1);

/// One draw of the dependence model: X ~ N(0, I_2), noise e Gaussian or
/// independent Cauchy coordinates, v = k X + 0.8 e, M = v 1^T + 0.5 I_2,
/// Y = M M^T. Pairs whose Y is not finite or has condition number above
/// 1e7 are redrawn.
struct IndependencePair {
  std::vector<Point> xs;
  std::vector<Point> ys;
};
IndependencePair independence_model(double k, bool cauchy_noise, std::size_t n,
                                    std::uint64_t seed);

double rejection_rate(double k, bool cauchy_noise, std::size_t n, std::size_t replications,
                      std::uint64_t seed, double alpha = 0.05,
                      Alternative alternative = Alternative::kTwoSided, unsigned threads = 1);

}  // namespace metricq

#endif  // METRICQ_EXPERIMENTS_HPP
