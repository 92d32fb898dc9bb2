// metricq: command-line driver for metric quantile experiments.
//
//   metricq <command> [--config PATH] [--seed U64] [--out DIR] [--threads N] [--dump-matrices]
//   metricq convert INPUT OUTPUT        (CSV <-> JSON, by file extension)
//   metricq convert --config PATH       (draw config.n points from the sampler into sample.csv)
//
// Exit codes: 0 success, 2 configuration/input error, 3 numeric failure,
// 1 anything unexpected.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "metricq/dataset_io.hpp"
#include "metricq/error.hpp"
#include "metricq/experiments.hpp"
#include "metricq/samplers.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  unsigned threads = 1;
  bool dump_matrices = false;
  std::string input;
  std::string output;
};

metricq::ExperimentConfig build_config(const std::string& command, const Options& o) {
  nlohmann::json j;
  if (o.config.empty()) {
    j = {{"version", metricq::kConfigVersion}, {"command", command}};
  } else {
    std::ifstream f(o.config);
    if (!f) throw metricq::ConfigError("cannot open config '" + o.config + "'");
    try {
      j = nlohmann::json::parse(f);
    } catch (const nlohmann::json::parse_error& e) {
      throw metricq::ConfigError("config '" + o.config + "': " + e.what());
    }
    if (!j.is_object()) throw metricq::ConfigError("config must be a JSON object");
    if (!j.contains("command")) j["command"] = command;
    if (j["command"] != command)
      throw metricq::ConfigError("config is for command " + j["command"].dump() + ", not '" + command + "'");
  }
  metricq::ExperimentConfig c = metricq::parse_config(j);
  if (o.seed) c.seed = *o.seed;
  c.output_dir = o.out;
  c.threads = o.threads;
  c.dump_matrices = c.dump_matrices || o.dump_matrices;
  return c;
}

bool has_extension(const std::string& path, const char* ext) {
  return std::filesystem::path(path).extension() == ext;
}

metricq::Artifact convert(const Options& o) {
  metricq::Artifact art;
  if (o.input.empty()) {
    if (o.config.empty()) throw metricq::ConfigError("convert needs INPUT OUTPUT or --config");
    const auto c = build_config("convert", o);
    if (!c.sampler) throw metricq::ConfigError("convert --config needs a sampler");
    metricq::Dataset d;
    d.space = metricq::space_of(*c.sampler);
    d.points = metricq::sample(*c.sampler, c.n, c.seed);
    d.metadata = {{"family", metricq::family_name(*c.sampler)},
                  {"params", metricq::sampler_to_json(*c.sampler)},
                  {"seed", c.seed},
                  {"n", c.n}};
    std::filesystem::create_directories(c.output_dir);
    const auto path = (std::filesystem::path(c.output_dir) / "sample.csv").string();
    metricq::write_dataset(path, d);
    art.files.push_back(path);
    return art;
  }
  if (o.output.empty()) throw metricq::ConfigError("convert needs an OUTPUT path");
  metricq::Dataset d;
  if (has_extension(o.input, ".json")) {
    std::ifstream f(o.input);
    if (!f) throw metricq::ConfigError("cannot open '" + o.input + "'");
    try {
      d = metricq::dataset_from_json(nlohmann::json::parse(f));
    } catch (const nlohmann::json::parse_error& e) {
      throw metricq::ConfigError("'" + o.input + "': " + e.what());
    }
  } else {
    d = metricq::read_dataset(o.input);
  }
  if (has_extension(o.output, ".json")) {
    std::ofstream f(o.output);
    if (!f) throw metricq::ConfigError("cannot write '" + o.output + "'");
    f << metricq::dataset_to_json(d).dump(1) << '\n';
  } else {
    metricq::write_dataset(o.output, d);
  }
  art.files.push_back(o.output);
  art.summary["points"] = d.points.size();
  return art;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Empirical metric quantiles, ranks and rank tests on metric spaces"};
  app.require_subcommand(1);
  Options o;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"quantile-map", "Global quantile levels, ranks, signs and depth of a sample"},
      {"local-quantile-map", "Local ranks, levels and signs relative to an anchor"},
      {"robustness", "Distance of the metric median to the base center under contamination"},
      {"breakdown", "Breakdown-point lower bounds for the preset families"},
      {"indep-power", "Rejection rates of the metric rank independence test"},
      {"convert", "Convert datasets between CSV and JSON, or draw one from a sampler"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", o.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Override the config seed");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--dump-matrices", o.dump_matrices, "Also write the distance and rank matrices");
    if (name == "convert") {
      sub->add_option("input", o.input, "Input dataset (.csv or .json)");
      sub->add_option("output", o.output, "Output dataset (.csv or .json)");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    metricq::Artifact art;
    if (command == "convert") {
      art = convert(o);
    } else {
      art = metricq::run_command(build_config(command, o));
    }
    nlohmann::json report{{"command", command}, {"files", art.files}, {"summary", art.summary}};
    std::cout << report.dump(2) << '\n';
    return 0;
  } catch (const metricq::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const metricq::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const metricq::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const metricq::DomainError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
