#include "metricq/experiments.hpp"

#include <boost/random/cauchy_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "metricq/dataset_io.hpp"
#include "metricq/error.hpp"
#include "metricq/parallel.hpp"
#include "metricq/quantiles.hpp"
#include "metricq/random.hpp"

namespace metricq {

namespace {

using nlohmann::json;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// ---------------------------------------------------------------- JSON helpers

json matrix_to_json(const linalg::Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.size(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.size(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

linalg::Matrix matrix_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw ConfigError(std::string(what) + " must be a square matrix");
  const std::size_t n = j.size();
  linalg::Matrix m(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!j[i].is_array() || j[i].size() != n)
      throw ConfigError(std::string(what) + " must be a square matrix");
    for (std::size_t k = 0; k < n; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

std::vector<double> unit_from_json(const json& j, const char* what) {
  auto v = j.get<std::vector<double>>();
  double s = 0.0;
  for (double x : v) s += x * x;
  if (!(s > 0.0)) throw ConfigError(std::string(what) + " must be a non-zero vector");
  // Vectors that are already unit up to rounding are kept verbatim so that
  // configs round-trip exactly.
  if (std::abs(s - 1.0) > 1e-14)
    for (auto& x : v) x /= std::sqrt(s);
  return v;
}

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

Alternative alternative_from_string(const std::string& s) {
  if (s == "two-sided") return Alternative::kTwoSided;
  if (s == "greater") return Alternative::kGreater;
  if (s == "less") return Alternative::kLess;
  throw ConfigError("alternative must be two-sided, greater or less");
}

// ---------------------------------------------------------------- CSV output

class CsvFile {
 public:
  CsvFile(const ExperimentConfig& config, const std::string& name, Artifact& artifact) {
    std::error_code ec;
    std::filesystem::create_directories(config.output_dir, ec);
    path_ = (std::filesystem::path(config.output_dir) / name).string();
    out_.open(path_, std::ios::binary);
    if (!out_) throw ConfigError("cannot write '" + path_ + "'");
    out_ << "# metricq " << config.command << '\n';
    out_ << "# config: " << config_to_json(config).dump() << '\n';
    out_ << "# seed: " << config.seed << '\n';
    artifact.files.push_back(path_);
  }

  template <class... Ts>
  void row(const Ts&... values) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(values), first = false), ...);
    out_ << '\n';
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

  ~CsvFile() = default;

 private:
  static std::string cell(double v) { return decimal_double(v); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  template <class T>
  static std::string cell(T v) requires std::is_integral_v<T> {
    return std::to_string(v);
  }

  std::string path_;
  std::ofstream out_;
};

std::vector<std::string> coord_header(std::size_t k) {
  std::vector<std::string> h;
  for (std::size_t c = 0; c < k; ++c) h.push_back("c" + std::to_string(c));
  return h;
}

std::vector<std::string> coord_cells(const SpaceDescriptor& space, const Point& p) {
  std::vector<std::string> cells;
  for (double v : flatten(space, p)) cells.push_back(decimal_double(v));
  return cells;
}

// ---------------------------------------------------------------- data

struct Data {
  SpaceDescriptor space;
  std::vector<Point> points;
};

Data load_data(const ExperimentConfig& c) {
  Data d;
  if (c.dataset) {
    Dataset ds = read_dataset(*c.dataset);
    if (c.space) require_space(ds, *c.space);
    d.space = ds.space;
    d.points = std::move(ds.points);
  } else {
    const Sampler s(*c.sampler);
    d.space = s.space();
    d.points = s.sample(c.n, c.seed);
  }
  if (d.points.empty()) throw ConfigError("the sample is empty");
  return d;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

const std::vector<std::string>& table_presets() {
  static const std::vector<std::string> p{"gaussian_r2", "skew_t6_r2", "vmf_s2", "tangent_vmf_s2",
                                          "wishart_spd3"};
  return p;
}

}  // namespace

// ---------------------------------------------------------------- samplers <-> JSON

std::vector<std::string> preset_names() {
  return {"gaussian_r2",    "gaussian_mixture_r2", "skew_t6_r2",   "cauchy_r3",
          "vmf_s2",         "tangent_vmf_s2",      "vmf_mixture_s2", "wishart_spd3",
          "spd_lognormal",  "wasserstein_uniform", "wasserstein_beta", "bhv_beta"};
}

SamplerSpec preset_by_name(const std::string& name) {
  if (name == "gaussian_r2") return presets::gaussian_r2();
  if (name == "gaussian_mixture_r2") return presets::gaussian_mixture_r2();
  if (name == "skew_t6_r2") return presets::skew_t6_r2();
  if (name == "cauchy_r3") return CauchyFamily{3};
  if (name == "vmf_s2") return presets::vmf_s2();
  if (name == "tangent_vmf_s2") return presets::tangent_vmf_s2();
  if (name == "vmf_mixture_s2") return presets::vmf_mixture_s2();
  if (name == "wishart_spd3") return presets::wishart_spd3();
  if (name == "spd_lognormal") return presets::spd_lognormal();
  if (name == "wasserstein_uniform") return presets::wasserstein_uniform();
  if (name == "wasserstein_beta") return presets::wasserstein_beta();
  if (name == "bhv_beta") return presets::bhv_beta();
  throw ConfigError("unknown sampler preset '" + name + "'");
}

json sampler_to_json(const SamplerSpec& spec) {
  json j = std::visit(
      Overloaded{
          [](const GaussianFamily& f) {
            return json{{"mean", f.mean}, {"covariance", matrix_to_json(f.covariance)}};
          },
          [](const GaussianMixtureFamily& f) {
            json covs = json::array();
            for (const auto& c : f.covariances) covs.push_back(matrix_to_json(c));
            return json{{"weights", f.weights}, {"means", f.means}, {"covariances", covs}};
          },
          [](const SkewTFamily& f) {
            return json{{"xi", f.xi}, {"sigma", matrix_to_json(f.sigma)}, {"alpha", f.alpha}, {"nu", f.nu}};
          },
          [](const CauchyFamily& f) { return json{{"dim", f.dim}}; },
          [](const VmfFamily& f) { return json{{"mu", f.mu}, {"kappa", f.kappa}}; },
          [](const VmfMixtureFamily& f) {
            return json{{"weight", f.weight}, {"mu1", f.mu1}, {"kappa1", f.kappa1},
                        {"mu2", f.mu2},       {"kappa2", f.kappa2}};
          },
          [](const TangentVmfFamily& f) {
            return json{{"mu", f.mu},         {"omega", f.omega},   {"kappa", f.kappa},
                        {"beta_a", f.beta_a}, {"beta_b", f.beta_b}};
          },
          [](const WishartFamily& f) {
            return json{{"dof", f.dof}, {"scale", matrix_to_json(f.scale)}};
          },
          [](const SpdLogNormalFamily& f) { return json{{"meanlog", f.meanlog}, {"sdlog", f.sdlog}}; },
          [](const WassersteinGaussianFamily& f) {
            return json{{"law", f.law == WassersteinGaussianFamily::Law::kUniform ? "uniform" : "beta"},
                        {"a", f.a},
                        {"b", f.b}};
          },
          [](const BhvFamily& f) {
            return json{{"branch_probs", f.branch_probs}, {"beta_a", f.beta_a}, {"beta_b", f.beta_b}};
          },
      },
      spec);
  j["family"] = family_name(spec);
  return j;
}

SamplerSpec sampler_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("sampler must be a JSON object");
  try {
    if (j.contains("preset")) {
      reject_unknown_keys(j, {"preset"}, "sampler");
      return preset_by_name(j.at("preset").get<std::string>());
    }
    if (!j.contains("family")) throw ConfigError("sampler needs 'family' or 'preset'");
    const std::string family = j.at("family").get<std::string>();
    auto has = [&](const char* k) { return j.contains(k); };
    SamplerSpec spec;
    if (family == "gaussian") {
      reject_unknown_keys(j, {"family", "mean", "covariance"}, "gaussian sampler");
      GaussianFamily f = std::get<GaussianFamily>(presets::gaussian_r2());
      if (has("mean")) f.mean = j.at("mean").get<std::vector<double>>();
      if (has("covariance")) f.covariance = matrix_from_json(j.at("covariance"), "covariance");
      else if (f.mean.size() != 2) f.covariance = linalg::Matrix::identity(f.mean.size());
      spec = f;
    } else if (family == "gaussian_mixture") {
      reject_unknown_keys(j, {"family", "weights", "means", "covariances"}, "gaussian_mixture sampler");
      GaussianMixtureFamily f = std::get<GaussianMixtureFamily>(presets::gaussian_mixture_r2());
      if (has("weights")) f.weights = j.at("weights").get<std::vector<double>>();
      if (has("means")) f.means = j.at("means").get<std::vector<std::vector<double>>>();
      if (has("covariances")) {
        f.covariances.clear();
        for (const auto& c : j.at("covariances")) f.covariances.push_back(matrix_from_json(c, "covariance"));
      }
      spec = f;
    } else if (family == "skew_t") {
      reject_unknown_keys(j, {"family", "xi", "sigma", "alpha", "nu"}, "skew_t sampler");
      SkewTFamily f = std::get<SkewTFamily>(presets::skew_t6_r2());
      if (has("xi")) f.xi = j.at("xi").get<std::vector<double>>();
      if (has("sigma")) f.sigma = matrix_from_json(j.at("sigma"), "sigma");
      if (has("alpha")) f.alpha = j.at("alpha").get<std::vector<double>>();
      if (has("nu")) f.nu = j.at("nu").get<double>();
      spec = f;
    } else if (family == "cauchy") {
      reject_unknown_keys(j, {"family", "dim"}, "cauchy sampler");
      spec = CauchyFamily{has("dim") ? j.at("dim").get<std::size_t>() : 3};
    } else if (family == "vmf") {
      reject_unknown_keys(j, {"family", "mu", "kappa"}, "vmf sampler");
      VmfFamily f = std::get<VmfFamily>(presets::vmf_s2());
      if (has("mu")) f.mu = unit_from_json(j.at("mu"), "mu");
      if (has("kappa")) f.kappa = j.at("kappa").get<double>();
      spec = f;
    } else if (family == "vmf_mixture") {
      reject_unknown_keys(j, {"family", "weight", "mu1", "kappa1", "mu2", "kappa2"}, "vmf_mixture sampler");
      VmfMixtureFamily f = std::get<VmfMixtureFamily>(presets::vmf_mixture_s2());
      if (has("weight")) f.weight = j.at("weight").get<double>();
      if (has("mu1")) f.mu1 = unit_from_json(j.at("mu1"), "mu1");
      if (has("kappa1")) f.kappa1 = j.at("kappa1").get<double>();
      if (has("mu2")) f.mu2 = unit_from_json(j.at("mu2"), "mu2");
      if (has("kappa2")) f.kappa2 = j.at("kappa2").get<double>();
      spec = f;
    } else if (family == "tangent_vmf") {
      reject_unknown_keys(j, {"family", "mu", "omega", "kappa", "beta_a", "beta_b"}, "tangent_vmf sampler");
      TangentVmfFamily f = std::get<TangentVmfFamily>(presets::tangent_vmf_s2());
      if (has("mu")) f.mu = unit_from_json(j.at("mu"), "mu");
      if (has("omega")) f.omega = unit_from_json(j.at("omega"), "omega");
      if (has("kappa")) f.kappa = j.at("kappa").get<double>();
      if (has("beta_a")) f.beta_a = j.at("beta_a").get<double>();
      if (has("beta_b")) f.beta_b = j.at("beta_b").get<double>();
      spec = f;
    } else if (family == "wishart") {
      reject_unknown_keys(j, {"family", "dof", "scale"}, "wishart sampler");
      WishartFamily f = std::get<WishartFamily>(presets::wishart_spd3());
      if (has("dof")) f.dof = j.at("dof").get<double>();
      if (has("scale")) f.scale = matrix_from_json(j.at("scale"), "scale");
      spec = f;
    } else if (family == "spd_lognormal") {
      reject_unknown_keys(j, {"family", "meanlog", "sdlog"}, "spd_lognormal sampler");
      SpdLogNormalFamily f;
      if (has("meanlog")) f.meanlog = j.at("meanlog").get<double>();
      if (has("sdlog")) f.sdlog = j.at("sdlog").get<double>();
      spec = f;
    } else if (family == "wasserstein_gaussian") {
      reject_unknown_keys(j, {"family", "law", "a", "b"}, "wasserstein_gaussian sampler");
      WassersteinGaussianFamily f;
      if (has("law")) {
        const auto law = j.at("law").get<std::string>();
        if (law == "uniform") f.law = WassersteinGaussianFamily::Law::kUniform;
        else if (law == "beta") f.law = WassersteinGaussianFamily::Law::kBeta;
        else throw ConfigError("wasserstein_gaussian law must be uniform or beta");
      }
      if (has("a")) f.a = j.at("a").get<double>();
      if (has("b")) f.b = j.at("b").get<double>();
      spec = f;
    } else if (family == "bhv_tree") {
      reject_unknown_keys(j, {"family", "branch_probs", "beta_a", "beta_b"}, "bhv_tree sampler");
      BhvFamily f;
      if (has("branch_probs")) f.branch_probs = j.at("branch_probs").get<std::vector<double>>();
      if (has("beta_a")) f.beta_a = j.at("beta_a").get<double>();
      if (has("beta_b")) f.beta_b = j.at("beta_b").get<double>();
      spec = f;
    } else {
      throw ConfigError("unknown sampler family '" + family + "'");
    }
    try {
      Sampler check(spec);
    } catch (const DomainError& e) {
      throw ConfigError(std::string("sampler '") + family + "': " + e.what());
    }
    return spec;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("sampler: ") + e.what());
  }
}

// ---------------------------------------------------------------- config

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown_keys(j,
                      {"version", "command", "sampler", "dataset", "space", "n", "reference_n", "grid",
                       "taus", "anchor", "anchor_index", "scenario", "contamination", "center",
                       "alphas", "presets", "noise", "sweep", "k_values", "n_values", "k",
                       "test_alpha", "alternative", "replications", "seed", "output_dir", "threads",
                       "dump_matrices"},
                      "config");
  ExperimentConfig c;
  try {
    if (!j.contains("version")) throw ConfigError("config needs \"version\": 1");
    if (j.at("version").get<int>() != kConfigVersion)
      throw ConfigError("unsupported config version " + j.at("version").dump());
    if (!j.contains("command")) throw ConfigError("config needs a 'command'");
    c.command = j.at("command").get<std::string>();
    static const std::set<std::string> commands{"quantile-map", "local-quantile-map", "robustness",
                                                "breakdown", "indep-power", "convert"};
    if (!commands.count(c.command)) throw ConfigError("unknown command '" + c.command + "'");

    auto get_size = [&](const char* key, std::size_t& out) {
      if (j.contains(key)) out = j.at(key).get<std::size_t>();
    };
    if (j.contains("sampler")) c.sampler = sampler_from_json(j.at("sampler"));
    if (j.contains("dataset")) c.dataset = j.at("dataset").get<std::string>();
    if (j.contains("space")) c.space = descriptor_from_json(j.at("space"));
    if (j.contains("taus")) c.taus = j.at("taus").get<std::vector<double>>();
    if (j.contains("grid")) c.grid = j.at("grid").get<std::vector<json>>();
    if (j.contains("anchor")) c.anchor = j.at("anchor");
    if (j.contains("anchor_index")) c.anchor_index = j.at("anchor_index").get<std::size_t>();
    if (j.contains("contamination")) c.contamination = sampler_from_json(j.at("contamination"));
    if (j.contains("center")) c.center = j.at("center");
    if (j.contains("alphas")) c.alphas = j.at("alphas").get<std::vector<double>>();
    if (j.contains("presets")) c.presets = j.at("presets").get<std::vector<std::string>>();
    if (j.contains("noise")) c.noise = j.at("noise").get<std::string>();
    if (j.contains("sweep")) c.sweep = j.at("sweep").get<std::string>();
    if (j.contains("k_values")) c.k_values = j.at("k_values").get<std::vector<double>>();
    if (j.contains("n_values")) c.n_values = j.at("n_values").get<std::vector<std::size_t>>();
    if (j.contains("k")) c.k = j.at("k").get<double>();
    if (j.contains("test_alpha")) c.test_alpha = j.at("test_alpha").get<double>();
    if (j.contains("alternative"))
      c.alternative = alternative_from_string(j.at("alternative").get<std::string>());
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("threads")) c.threads = j.at("threads").get<unsigned>();
    if (j.contains("dump_matrices")) c.dump_matrices = j.at("dump_matrices").get<bool>();
    if (j.contains("scenario")) c.scenario = j.at("scenario").get<std::string>();

    // Command-specific defaults.
    if (c.command == "robustness") {
      c.n = 100;
      if (c.alphas.empty())
        for (int i = 0; i < 10; ++i) c.alphas.push_back(0.05 * i);
    } else if (c.command == "breakdown") {
      c.n = 1000;
      c.replications = 20;
      if (c.presets.empty()) c.presets = table_presets();
    } else if (c.command == "indep-power") {
      c.n = 100;
      c.replications = 500;
      if (c.sweep == "k" && c.k_values.empty()) c.k_values = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
      if (c.sweep == "n" && c.n_values.empty()) c.n_values = {25, 50, 100, 200};
    }
    get_size("n", c.n);
    get_size("replications", c.replications);
    get_size("reference_n", c.reference_n);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  // Validation.
  if (c.n < 1) throw ConfigError("n must be >= 1");
  if (c.replications < 1) throw ConfigError("replications must be >= 1");
  if (c.threads < 1) throw ConfigError("threads must be >= 1");
  for (double t : c.taus)
    if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("taus must lie in [0, 1]");
  for (double a : c.alphas)
    if (!(a >= 0.0 && a < 0.5)) throw ConfigError("contamination alphas must lie in [0, 0.5)");
  if (c.sampler && c.dataset) throw ConfigError("give either 'sampler' or 'dataset', not both");
  const bool needs_data = c.command == "quantile-map" || c.command == "local-quantile-map";
  if (needs_data && !c.sampler && !c.dataset) c.sampler = presets::gaussian_r2();
  if (c.sampler && c.space && space_of(*c.sampler) != *c.space)
    throw ConfigError("sampler family '" + family_name(*c.sampler) + "' does not produce points in space " +
                      descriptor_to_json(*c.space).dump());
  if (c.reference_n > 0 && !c.sampler)
    throw ConfigError("reference_n needs a sampler to draw the reference sample");
  if (c.command == "robustness") {
    if (c.scenario == "custom") {
      if (!c.sampler || !c.contamination || !c.center)
        throw ConfigError("custom robustness needs sampler, contamination and center");
      if (space_of(*c.sampler) != space_of(*c.contamination))
        throw ConfigError("sampler and contamination live in different spaces");
    } else if (c.scenario != "r3" && c.scenario != "s2" && c.scenario != "spd3") {
      throw ConfigError("robustness scenario must be r3, s2, spd3 or custom");
    }
  }
  if (c.command == "breakdown")
    for (const auto& p : c.presets) preset_by_name(p);
  if (c.command == "indep-power") {
    if (c.noise != "gaussian" && c.noise != "cauchy") throw ConfigError("noise must be gaussian or cauchy");
    if (c.sweep != "k" && c.sweep != "n") throw ConfigError("sweep must be k or n");
    if (!(c.test_alpha > 0.0 && c.test_alpha < 1.0)) throw ConfigError("test_alpha must lie in (0, 1)");
    if (c.n < 2) throw ConfigError("the independence test needs n >= 2");
    for (std::size_t m : c.n_values)
      if (m < 2) throw ConfigError("n_values must be >= 2");
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return parse_config(j);
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["version"] = kConfigVersion;
  j["command"] = c.command;
  if (c.sampler) j["sampler"] = sampler_to_json(*c.sampler);
  if (c.dataset) j["dataset"] = *c.dataset;
  if (c.space) j["space"] = descriptor_to_json(*c.space);
  j["n"] = c.n;
  j["replications"] = c.replications;
  j["seed"] = c.seed;
  if (c.command == "quantile-map" || c.command == "local-quantile-map") {
    j["reference_n"] = c.reference_n;
    j["grid"] = c.grid;
    j["taus"] = c.taus;
    if (c.anchor) j["anchor"] = *c.anchor;
    if (c.anchor_index) j["anchor_index"] = *c.anchor_index;
  }
  if (c.command == "robustness") {
    j["scenario"] = c.scenario;
    j["alphas"] = c.alphas;
    if (c.contamination) j["contamination"] = sampler_to_json(*c.contamination);
    if (c.center) j["center"] = *c.center;
  }
  if (c.command == "breakdown") j["presets"] = c.presets;
  if (c.command == "indep-power") {
    j["noise"] = c.noise;
    j["sweep"] = c.sweep;
    j["k_values"] = c.k_values;
    j["n_values"] = c.n_values;
    j["k"] = c.k;
    j["test_alpha"] = c.test_alpha;
    j["alternative"] = to_string(c.alternative);
  }
  return j;
}

json report_to_json(const TestReport& r) {
  return {{"statistic", r.statistic}, {"p_value", r.p_value},   {"reject", r.reject},
          {"alpha", r.alpha},         {"n", r.n},               {"score_x", r.score_x},
          {"score_y", r.score_y},     {"alternative", to_string(r.alternative)}};
}

// ---------------------------------------------------------------- commands

Artifact cmd_quantile_map(const ExperimentConfig& config) {
  Artifact art;
  const Data data = load_data(config);
  const QuantileEngine engine(data.space, data.points, config.threads);
  const std::size_t n = engine.size();
  const std::size_t k = data.space.flat_size();
  const bool degenerate = n > 1 && engine.j_is_degenerate();
  art.summary["n"] = n;
  art.summary["j_degenerate"] = degenerate;

  if (degenerate) {
    // J carries no ordering information; report the local map around the
    // anchor instead.
    const std::size_t a = config.anchor_index.value_or(0);
    if (a >= n) throw ConfigError("anchor_index out of range");
    const Point anchor = config.anchor ? point_from_json(data.space, *config.anchor) : data.points[a];
    const auto ranks = local_ranks(data.space, data.points, anchor);
    const auto signs = signs_from_ranks(ranks);
    CsvFile csv(config, "quantile_map.csv", art);
    auto header = std::vector<std::string>{"index"};
    for (auto& h : coord_header(k)) header.push_back(h);
    for (const char* h : {"mode", "local_rank", "level", "sign"}) header.push_back(h);
    csv.row(header);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::string> cells{std::to_string(i)};
      for (auto& s : coord_cells(data.space, data.points[i])) cells.push_back(s);
      cells.push_back("local");
      cells.push_back(std::to_string(ranks[i]));
      cells.push_back(decimal_double(static_cast<double>(ranks[i]) / static_cast<double>(n)));
      cells.push_back(std::to_string(signs[i]));
      csv.row(cells);
    }
    art.summary["mode"] = "local-fallback";
  } else {
    const auto& ranks = engine.global_ranks();
    const auto signs = engine.global_signs();
    CsvFile csv(config, "quantile_map.csv", art);
    auto header = std::vector<std::string>{"index"};
    for (auto& h : coord_header(k)) header.push_back(h);
    for (const char* h : {"j", "rank_sum", "total_distance", "global_rank", "level", "sign", "depth"})
      header.push_back(h);
    csv.row(header);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::string> cells{std::to_string(i)};
      for (auto& s : coord_cells(data.space, data.points[i])) cells.push_back(s);
      const double level = engine.global_level(i);
      cells.push_back(decimal_double(engine.j_values()[i]));
      cells.push_back(std::to_string(engine.j_values().rank_sum(i)));
      cells.push_back(decimal_double(engine.total_distances()[i]));
      cells.push_back(std::to_string(ranks[i]));
      cells.push_back(decimal_double(level));
      cells.push_back(std::to_string(signs[i]));
      cells.push_back(decimal_double(1.0 - level));
      csv.row(cells);
    }
    const auto median = engine.metric_median();
    art.summary["mode"] = "global";
    art.summary["median_index"] = *median.index;
    art.summary["median"] = point_to_json(data.space, median.point);
    art.summary["breakdown_lower_bound"] = engine.breakdown_lower_bound();

    if (!config.taus.empty()) {
      CsvFile q(config, "global_quantiles.csv", art);
      q.row("tau", "index", "achieved_level");
      for (double tau : config.taus) {
        const auto r = engine.global_quantile(tau);
        q.row(tau, *r.index, r.achieved_level);
      }
    }
  }

  if (config.reference_n > 0) {
    const Sampler s(*config.sampler);
    const auto reference = s.sample(config.reference_n, derive_seed(config.seed, 1));
    std::vector<Point> queries;
    if (config.grid.empty()) {
      queries = data.points;
    } else {
      for (const auto& g : config.grid) queries.push_back(point_from_json(data.space, g));
    }
    const auto lv = reference_levels(data.space, reference, queries, config.threads);
    CsvFile csv(config, "reference_levels.csv", art);
    auto header = std::vector<std::string>{"query"};
    for (auto& h : coord_header(k)) header.push_back(h);
    for (const char* h : {"j", "level", "depth"}) header.push_back(h);
    csv.row(header);
    for (std::size_t q = 0; q < queries.size(); ++q) {
      std::vector<std::string> cells{std::to_string(q)};
      for (auto& c : coord_cells(data.space, queries[q])) cells.push_back(c);
      cells.push_back(decimal_double(lv.j[q]));
      cells.push_back(decimal_double(lv.level[q]));
      cells.push_back(decimal_double(lv.depth[q]));
      csv.row(cells);
    }
    art.summary["reference_n"] = config.reference_n;
  }

  if (config.dump_matrices) {
    CsvFile dm(config, "distances.csv", art);
    CsvFile rm(config, "ranks.csv", art);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::string> dc, rc;
      for (std::size_t j = 0; j < n; ++j) {
        dc.push_back(decimal_double(engine.distances()(i, j)));
        rc.push_back(std::to_string(engine.ranks()(i, j)));
      }
      dm.row(dc);
      rm.row(rc);
    }
  }
  return art;
}

Artifact cmd_local_quantile_map(const ExperimentConfig& config) {
  Artifact art;
  const Data data = load_data(config);
  const std::size_t n = data.points.size();
  const std::size_t k = data.space.flat_size();
  Point anchor;
  if (config.anchor) {
    anchor = point_from_json(data.space, *config.anchor);
  } else {
    const std::size_t a = config.anchor_index.value_or(0);
    if (a >= n) throw ConfigError("anchor_index out of range");
    anchor = data.points[a];
  }
  const auto ranks = local_ranks(data.space, data.points, anchor);
  const auto signs = signs_from_ranks(ranks);
  CsvFile csv(config, "local_quantile_map.csv", art);
  auto header = std::vector<std::string>{"index"};
  for (auto& h : coord_header(k)) header.push_back(h);
  for (const char* h : {"distance", "local_rank", "level", "sign"}) header.push_back(h);
  csv.row(header);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::string> cells{std::to_string(i)};
    for (auto& s : coord_cells(data.space, data.points[i])) cells.push_back(s);
    cells.push_back(decimal_double(distance(data.space, anchor, data.points[i])));
    cells.push_back(std::to_string(ranks[i]));
    cells.push_back(decimal_double(static_cast<double>(ranks[i]) / static_cast<double>(n)));
    cells.push_back(std::to_string(signs[i]));
    csv.row(cells);
  }
  if (!config.taus.empty()) {
    CsvFile q(config, "local_quantiles.csv", art);
    q.row("tau", "index", "achieved_level");
    for (double tau : config.taus) {
      const auto r = local_quantile(data.space, data.points, anchor, tau);
      q.row(tau, r.index ? std::to_string(*r.index) : std::string("anchor"), r.achieved_level);
    }
  }
  art.summary["n"] = n;
  art.summary["anchor"] = point_to_json(data.space, anchor);
  return art;
}

RobustnessScenario robustness_scenario(const std::string& name) {
  if (name == "r3") {
    return {GaussianFamily{{0.0, 0.0, 0.0}, linalg::Matrix::identity(3)}, CauchyFamily{3},
            make_euclidean({0.0, 0.0, 0.0})};
  }
  if (name == "s2") {
    const double r = 1.0 / std::sqrt(3.0);
    return {VmfFamily{{1.0, 0.0, 0.0}, 1.0}, VmfFamily{{r, r, r}, 1.0}, UnitVector{{1.0, 0.0, 0.0}}};
  }
  if (name == "spd3") {
    linalg::Matrix center = linalg::Matrix::identity(3);
    for (std::size_t i = 0; i < 3; ++i) center(i, i) = 3.0;
    return {WishartFamily{3.0, linalg::Matrix::identity(3)}, WishartFamily{3.0, presets::toeplitz_scale3()},
            SpdMatrix{center}};
  }
  throw ConfigError("unknown robustness scenario '" + name + "'");
}

std::vector<RobustnessPoint> robustness_curve(const RobustnessScenario& scenario,
                                              const std::vector<double>& alphas, std::size_t n,
                                              std::size_t replications, std::uint64_t seed,
                                              unsigned threads) {
  const SpaceDescriptor space = space_of(scenario.base);
  validate_point(space, scenario.center);
  std::vector<std::vector<double>> dist(alphas.size(), std::vector<double>(replications));
  parallel_for(replications, threads, [&](std::size_t r) {
    const std::uint64_t s = derive_seed(seed, r);
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      const auto cs = contaminate(scenario.base, scenario.contamination, alphas[a], n, s);
      const auto median = metric_median(space, cs.points);
      dist[a][r] = distance(space, median.point, scenario.center);
    }
  });
  std::vector<RobustnessPoint> out;
  for (std::size_t a = 0; a < alphas.size(); ++a)
    out.push_back({alphas[a], mean_of(dist[a]), sd_of(dist[a])});
  return out;
}

Artifact cmd_robustness(const ExperimentConfig& config) {
  Artifact art;
  RobustnessScenario sc = config.scenario == "custom"
                              ? RobustnessScenario{*config.sampler, *config.contamination, Point{}}
                              : robustness_scenario(config.scenario);
  if (config.scenario == "custom") sc.center = point_from_json(space_of(sc.base), *config.center);
  const auto curve =
      robustness_curve(sc, config.alphas, config.n, config.replications, config.seed, config.threads);
  CsvFile csv(config, "robustness.csv", art);
  csv.row("alpha", "mean_distance", "sd_distance", "replications", "n", "seed");
  json rows = json::array();
  for (const auto& p : curve) {
    csv.row(p.alpha, p.mean_distance, p.sd_distance, config.replications, config.n, config.seed);
    rows.push_back({{"alpha", p.alpha}, {"mean_distance", p.mean_distance}});
  }
  art.summary["curve"] = rows;
  return art;
}

std::vector<BreakdownRow> breakdown_table(const std::vector<std::string>& presets, std::size_t n,
                                          std::size_t replications, std::uint64_t seed,
                                          unsigned threads) {
  std::vector<Sampler> samplers;
  for (const auto& p : presets) samplers.emplace_back(preset_by_name(p));
  std::vector<std::vector<double>> bounds(presets.size(), std::vector<double>(replications));
  parallel_for(presets.size() * replications, threads, [&](std::size_t t) {
    const std::size_t p = t / replications;
    const std::size_t r = t % replications;
    const auto pts = samplers[p].sample(n, derive_seed(derive_seed(seed, p), r));
    bounds[p][r] = breakdown_lower_bound(samplers[p].space(), pts);
  });
  std::vector<BreakdownRow> out;
  for (std::size_t p = 0; p < presets.size(); ++p)
    out.push_back({presets[p], mean_of(bounds[p]), sd_of(bounds[p])});
  return out;
}

Artifact cmd_breakdown_table(const ExperimentConfig& config) {
  Artifact art;
  const auto rows = breakdown_table(config.presets, config.n, config.replications, config.seed, config.threads);
  CsvFile csv(config, "breakdown.csv", art);
  csv.row("preset", "mean_bound", "sd_bound", "replications", "n", "seed");
  for (const auto& r : rows) {
    csv.row(r.preset, r.mean_bound, r.sd_bound, config.replications, config.n, config.seed);
    art.summary[r.preset] = r.mean_bound;
  }
  return art;
}

IndependencePair independence_model(double k, bool cauchy_noise, std::size_t n, std::uint64_t seed) {
  Philox4x32 rng(seed, 0);
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  boost::random::cauchy_distribution<double> cauchy(0.0, 1.0);
  IndependencePair out;
  out.xs.reserve(n);
  out.ys.reserve(n);
  while (out.xs.size() < n) {
    const double x0 = normal(rng);
    const double x1 = normal(rng);
    const double e0 = cauchy_noise ? cauchy(rng) : normal(rng);
    const double e1 = cauchy_noise ? cauchy(rng) : normal(rng);
    const double v0 = k * x0 + 0.8 * e0;
    const double v1 = k * x1 + 0.8 * e1;
    // M = [[v0 + .5, v0], [v1, v1 + .5]], Y = M M^T
    const double y00 = (v0 + 0.5) * (v0 + 0.5) + v0 * v0;
    const double y01 = (v0 + 0.5) * v1 + v0 * (v1 + 0.5);
    const double y11 = v1 * v1 + (v1 + 0.5) * (v1 + 0.5);
    linalg::Matrix y{{y00, y01}, {y01, y11}};
    if (!std::isfinite(y00) || !std::isfinite(y01) || !std::isfinite(y11)) continue;
    if (!(y00 * y11 - y01 * y01 > 0.0) || !linalg::cholesky(y)) continue;
    // Nearly singular draws make affine-invariant distances meaningless in
    // double precision; require a condition number of at most 1e7.
    const double half_tr = 0.5 * (y00 + y11);
    const double gap = std::hypot(0.5 * (y00 - y11), y01);
    const double lo = (y00 * y11 - y01 * y01) / (half_tr + gap);
    if (!(lo >= 1e-7 * (half_tr + gap))) continue;
    out.xs.push_back(make_euclidean({x0, x1}));
    out.ys.push_back(SpdMatrix{std::move(y)});
  }
  return out;
}

double rejection_rate(double k, bool cauchy_noise, std::size_t n, std::size_t replications,
                      std::uint64_t seed, double alpha, Alternative alternative, unsigned threads) {
  const auto sx = SpaceDescriptor::euclidean(2);
  const auto sy = SpaceDescriptor::spd(2);
  const auto phi = ScoreFunction::spearman();
  std::vector<char> reject(replications, 0);
  parallel_for(replications, threads, [&](std::size_t r) {
    const auto pair = independence_model(k, cauchy_noise, n, derive_seed(seed, r));
    reject[r] = independence_test(sx, pair.xs, sy, pair.ys, phi, phi, alpha, alternative).reject;
  });
  std::size_t count = 0;
  for (char c : reject) count += c ? 1 : 0;
  return static_cast<double>(count) / static_cast<double>(replications);
}

Artifact cmd_indep_power(const ExperimentConfig& config) {
  Artifact art;
  const bool cauchy = config.noise == "cauchy";
  CsvFile csv(config, "indep_power.csv", art);
  csv.row("k", "n", "noise", "rejection_rate", "replications", "seed");
  json rows = json::array();
  auto emit = [&](double k, std::size_t n) {
    const double rate = rejection_rate(k, cauchy, n, config.replications, config.seed, config.test_alpha,
                                       config.alternative, config.threads);
    csv.row(k, n, config.noise, rate, config.replications, config.seed);
    rows.push_back({{"k", k}, {"n", n}, {"rejection_rate", rate}});
  };
  if (config.sweep == "k") {
    for (double k : config.k_values) emit(k, config.n);
  } else {
    for (std::size_t n : config.n_values) emit(config.k, n);
  }
  art.summary["curve"] = rows;
  return art;
}

Artifact run_command(const ExperimentConfig& config) {
  if (config.command == "quantile-map") return cmd_quantile_map(config);
  if (config.command == "local-quantile-map") return cmd_local_quantile_map(config);
  if (config.command == "robustness") return cmd_robustness(config);
  if (config.command == "breakdown") return cmd_breakdown_table(config);
  if (config.command == "indep-power") return cmd_indep_power(config);
  throw ConfigError("command '" + config.command + "' is not an experiment");
}

}  // namespace metricq
