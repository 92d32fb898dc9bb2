#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "metricq/dataset_io.hpp"
#include "metricq/error.hpp"
#include "metricq/experiments.hpp"
#include "metricq/quantiles.hpp"

using namespace metricq;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("metricq_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Rows of a CSV without comment lines; the first row is the header.
std::vector<std::vector<std::string>> rows_of(const std::string& path) {
  std::ifstream f(path);
  std::vector<std::vector<std::string>> out;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    out.push_back(cells);
  }
  return out;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
  return static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
}

ExperimentConfig config(json j, const fs::path& out, unsigned threads = 1) {
  j["version"] = 1;
  auto c = parse_config(j);
  c.output_dir = out.string();
  c.threads = threads;
  return c;
}

}  // namespace

TEST_CASE("config parsing and validation") {
  CHECK_THROWS_AS(parse_config(json{{"command", "quantile-map"}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"version", 2}, {"command", "quantile-map"}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"version", 1}, {"command", "bogus"}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"version", 1}, {"command", "quantile-map"}, {"typo", 1}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"version", 1}, {"command", "quantile-map"}, {"n", 0}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"version", 1}, {"command", "quantile-map"}, {"taus", {1.5}}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"version", 1}, {"command", "robustness"}, {"alphas", {0.5}}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"version", 1},
                                    {"command", "quantile-map"},
                                    {"sampler", {{"preset", "vmf_s2"}}},
                                    {"space", {{"kind", "euclidean"}, {"dimension", 3}}}}),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"version", 1}, {"command", "quantile-map"}, {"sampler", {{"family", "vmf"}, {"kappa", -1}}}}),
                  ConfigError);

  const auto c = parse_config(json{{"version", 1}, {"command", "breakdown"}});
  CHECK(c.n == 1000);
  CHECK(c.presets.size() == 5);
  const auto r = parse_config(json{{"version", 1}, {"command", "robustness"}, {"n", 50}});
  CHECK(r.n == 50);
  CHECK(r.alphas.size() == 10);
}

TEST_CASE("sampler JSON round trip") {
  for (const auto& name : preset_names()) {
    const auto spec = preset_by_name(name);
    const auto back = sampler_from_json(sampler_to_json(spec));
    CHECK(sample(back, 20, 5) == sample(spec, 20, 5));
  }
  const auto v = sampler_from_json({{"family", "vmf"}, {"mu", {0, 3, 4}}, {"kappa", 5}});
  CHECK(std::get<VmfFamily>(v).mu == std::vector<double>{0, 0.6, 0.8});
}

TEST_CASE("quantile map emits each level once") {
  const auto out = scratch("qmap");
  const auto c = config({{"command", "quantile-map"}, {"n", 500}, {"seed", 7}, {"taus", {0.0, 0.5, 1.0}}}, out);
  const auto art = cmd_quantile_map(c);
  const auto rows = rows_of((out / "quantile_map.csv").string());
  REQUIRE(rows.size() == 501);
  const auto lc = column(rows[0], "global_rank");
  std::vector<int> seen(501, 0);
  for (std::size_t i = 1; i < rows.size(); ++i) ++seen[std::stoul(rows[i][lc])];
  for (std::size_t r = 1; r <= 500; ++r) CHECK(seen[r] == 1);
  CHECK(art.summary["mode"] == "global");
  CHECK(fs::exists(out / "global_quantiles.csv"));

  const std::string text = slurp((out / "quantile_map.csv").string());
  CHECK(text.rfind("# metricq quantile-map\n# config: ", 0) == 0);
  CHECK(text.find("# seed: 7\n") != std::string::npos);
}

TEST_CASE("quantile map is reproducible and thread independent") {
  const auto a = scratch("repro_a"), b = scratch("repro_b");
  json j{{"command", "quantile-map"}, {"n", 300}, {"seed", 11}, {"reference_n", 400},
         {"grid", {{{"data", {0.0, 0.0}}}, {{"data", {2.0, 1.0}}}}}};
  cmd_quantile_map(config(j, a, 1));
  auto cb = config(j, b, 3);
  cb.dump_matrices = true;
  cmd_quantile_map(cb);
  for (const char* f : {"quantile_map.csv", "reference_levels.csv"})
    CHECK(slurp((a / f).string()) == slurp((b / f).string()));
  CHECK(fs::exists(b / "distances.csv"));
  CHECK(fs::exists(b / "ranks.csv"));
  const auto ref = rows_of((a / "reference_levels.csv").string());
  REQUIRE(ref.size() == 3);
  const auto dc = column(ref[0], "depth");
  CHECK(std::stod(ref[1][dc]) > std::stod(ref[2][dc]));
}

TEST_CASE("quantile map on S^2 and BHV") {
  const auto out = scratch("qmap_sphere");
  cmd_quantile_map(config({{"command", "quantile-map"}, {"n", 500}, {"sampler", {{"preset", "vmf_s2"}}}}, out));
  const auto rows = rows_of((out / "quantile_map.csv").string());
  const auto rc = column(rows[0], "global_rank");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i][rc] != "1") continue;
    const double z = std::stod(rows[i][column(rows[0], "c2")]);
    CHECK(std::acos(std::min(1.0, z)) < 0.25);
  }

  const auto outb = scratch("qmap_bhv");
  cmd_quantile_map(config({{"command", "quantile-map"}, {"n", 500}, {"sampler", {{"preset", "bhv_beta"}}}}, outb));
  const auto br = rows_of((outb / "quantile_map.csv").string());
  const auto lv = column(br[0], "level"), c0 = column(br[0], "c0");
  for (std::size_t i = 1; i < br.size(); ++i)
    if (std::stod(br[i][lv]) <= 0.5) CHECK(br[i][c0] == "2");
}

TEST_CASE("quantile map falls back to local ranks when J is constant") {
  const auto out = scratch("qmap_degenerate");
  const auto ds = (out / "two.csv").string();
  Dataset d;
  d.space = SpaceDescriptor::euclidean(1);
  d.points = {make_euclidean({0}), make_euclidean({1})};
  write_dataset(ds, d);
  const auto art = cmd_quantile_map(config({{"command", "quantile-map"}, {"dataset", ds}}, out));
  CHECK(art.summary["mode"] == "local-fallback");
}

TEST_CASE("local quantile map") {
  const auto out = scratch("lqmap");
  const auto ds = (out / "pts.csv").string();
  Dataset d;
  d.space = SpaceDescriptor::euclidean(1);
  d.points = {make_euclidean({0}), make_euclidean({1}), make_euclidean({3})};
  write_dataset(ds, d);
  cmd_local_quantile_map(config({{"command", "local-quantile-map"}, {"dataset", ds}, {"anchor_index", 0}}, out));
  const auto rows = rows_of((out / "local_quantile_map.csv").string());
  const auto lc = column(rows[0], "level"), rc = column(rows[0], "local_rank");
  CHECK(std::stod(rows[1][lc]) == doctest::Approx(1.0 / 3.0));
  CHECK(std::stod(rows[2][lc]) == doctest::Approx(2.0 / 3.0));
  CHECK(std::stod(rows[3][lc]) == 1.0);
  CHECK(rows[1][rc] == "1");

  // An anchor outside the support orders points by distance.
  cmd_local_quantile_map(config({{"command", "local-quantile-map"}, {"dataset", ds}, {"anchor", {{"data", {10.0}}}},
                                 {"taus", {0.0, 0.9}}},
                                out));
  const auto far = rows_of((out / "local_quantile_map.csv").string());
  CHECK(far[1][rc] == "3");
  CHECK(far[3][rc] == "1");
  const auto q = rows_of((out / "local_quantiles.csv").string());
  CHECK(q[1][1] == "anchor");

  CHECK_THROWS_AS(cmd_local_quantile_map(config({{"command", "local-quantile-map"},
                                                 {"dataset", ds},
                                                 {"space", {{"kind", "sphere"}, {"dimension", 1}}}},
                                                out)),
                  std::exception);
}

TEST_CASE("robustness curve") {
  const auto sc = robustness_scenario("r3");
  const auto curve = robustness_curve(sc, {0.0, 0.2, 0.4}, 100, 20, 3);
  CHECK(curve[2].mean_distance >= curve[0].mean_distance);
  // Independent brute-force simulation puts E d(median, 0) at about 0.349.
  const auto big = robustness_curve(sc, {0.0}, 100, 2000, 5);
  CHECK(big[0].mean_distance == doctest::Approx(0.349).epsilon(0.03));
  // alpha = 0 is the uncontaminated pipeline.
  const auto pts = sample(sc.base, 100, derive_seed(derive_seed(3, 0), 1));
  const double d0 = distance(SpaceDescriptor::euclidean(3), metric_median(SpaceDescriptor::euclidean(3), pts).point, sc.center);
  const auto single = robustness_curve(sc, {0.0}, 100, 1, 3);
  CHECK(single[0].mean_distance == d0);
  CHECK(robustness_curve(sc, {0.0, 0.2}, 100, 6, 3, 1)[1].mean_distance ==
        robustness_curve(sc, {0.0, 0.2}, 100, 6, 3, 3)[1].mean_distance);
  for (const char* name : {"s2", "spd3"}) CHECK(robustness_curve(robustness_scenario(name), {0.1}, 30, 2, 1).size() == 1);
}

TEST_CASE("breakdown table and independence model") {
  const auto rows = breakdown_table({"gaussian_r2"}, 200, 3, 1);
  CHECK(rows[0].mean_bound > 0.3);
  CHECK(rows[0].mean_bound < 0.5);

  const auto pair = independence_model(1.0, true, 200, 4);
  CHECK(pair.xs.size() == 200);
  for (const auto& y : pair.ys) validate_point(SpaceDescriptor::spd(2), y);
  CHECK(rejection_rate(0.0, false, 60, 40, 2, 0.05, Alternative::kTwoSided, 1) ==
        rejection_rate(0.0, false, 60, 40, 2, 0.05, Alternative::kTwoSided, 3));
}

TEST_CASE("commands write their CSVs") {
  const auto out = scratch("cmds");
  auto art = cmd_robustness(config({{"command", "robustness"}, {"replications", 3}, {"alphas", {0.0, 0.3}}}, out));
  CHECK(rows_of(art.files[0]).size() == 3);
  art = cmd_breakdown_table(config({{"command", "breakdown"}, {"replications", 1}, {"n", 100}}, out));
  CHECK(rows_of(art.files[0]).size() == 6);
  art = cmd_indep_power(config({{"command", "indep-power"}, {"replications", 5}, {"k_values", {0.0, 1.0}}}, out));
  CHECK(rows_of(art.files[0]).size() == 3);
  art = cmd_indep_power(config(
      {{"command", "indep-power"}, {"replications", 5}, {"sweep", "n"}, {"n_values", {20, 40}}, {"noise", "cauchy"}},
      out));
  CHECK(rows_of(art.files[0])[1][2] == "cauchy");
}
