#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "metricq/error.hpp"
#include "metricq/inference.hpp"
#include "metricq/samplers.hpp"

using namespace metricq;

namespace {

std::vector<std::size_t> iota1(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{1});
  return v;
}

}  // namespace

TEST_CASE("linear rank statistic examples") {
  const auto id = ScoreFunction::spearman();
  const std::vector<std::size_t> r{1, 2, 3}, rev{3, 2, 1};
  CHECK(linear_rank_statistic(r, r, id, id) == doctest::Approx(0.875));
  CHECK(linear_rank_statistic(r, rev, id, id) == doctest::Approx(0.625));
  const ScoreFunction c("const", [](double) { return 2.0; });
  CHECK(linear_rank_statistic(r, rev, c, c) == doctest::Approx(12.0));
  const std::vector<std::size_t> bad{1, 1, 3}, short_{1, 2};
  CHECK_THROWS_AS(linear_rank_statistic(r, bad, id, id), DomainError);
  CHECK_THROWS_AS(linear_rank_statistic(r, short_, id, id), DomainError);
}

TEST_CASE("null moments") {
  const auto id = ScoreFunction::spearman();
  const auto m = null_moments(id, id, 3);
  CHECK(m.mean == doctest::Approx(0.75));
  CHECK(m.variance == doctest::Approx(1.0 / 128.0));
  const ScoreFunction c("const", [](double) { return 1.0; });
  CHECK(null_moments(c, c, 5).variance == 0.0);
  CHECK_THROWS_AS(null_moments(id, id, 1), DomainError);
}

TEST_CASE("standardized statistic") {
  const auto id = ScoreFunction::spearman();
  const auto m = null_moments(id, id, 3);
  CHECK(standardized_statistic(0.875, m) == doctest::Approx(std::sqrt(2.0)));
  CHECK(standardized_statistic(m.mean, m) == 0.0);
  CHECK_THROWS_AS(standardized_statistic(1.0, NullMoments{1.0, 0.0}), DomainError);
  const std::vector<std::size_t> r{1, 2, 3}, rev{3, 2, 1};
  CHECK(spearman_statistic(r, r) == doctest::Approx(std::sqrt(2.0)));
  CHECK(spearman_statistic(r, rev) == doctest::Approx(-std::sqrt(2.0)));
}

TEST_CASE("moments match exhaustive enumeration") {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-1.0, 2.0);
  for (std::size_t n = 2; n <= 7; ++n) {
    for (int variant = 0; variant < 3; ++variant) {
      std::vector<std::pair<double, double>> k1, k2;
      for (double x : {0.0, 0.25, 0.5, 0.75, 1.0}) k1.push_back({x, u(gen)}), k2.push_back({x, u(gen)});
      const ScoreFunction f1 = variant == 0 ? ScoreFunction::spearman() : ScoreFunction::tabulated(k1);
      const ScoreFunction f2 = variant == 2 ? ScoreFunction::spearman() : ScoreFunction::tabulated(k2);
      const auto rx = iota1(n);
      auto ry = iota1(n);
      std::vector<double> ts;
      do {
        ts.push_back(linear_rank_statistic(rx, ry, f1, f2));
      } while (std::next_permutation(ry.begin(), ry.end()));
      const double count = static_cast<double>(ts.size());
      const double mean = std::accumulate(ts.begin(), ts.end(), 0.0) / count;
      double var = 0.0;
      for (double t : ts) var += (t - mean) * (t - mean) / count;
      const auto m = null_moments(f1, f2, n);
      CHECK(std::abs(m.mean - mean) < 1e-12);
      CHECK(std::abs(m.variance - var) < 1e-12);
    }
  }
}

TEST_CASE("Spearman closed form equals the general statistic") {
  std::mt19937_64 gen(2);
  const auto id = ScoreFunction::spearman();
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 3 + gen() % 48;
    auto rx = iota1(n), ry = iota1(n);
    std::shuffle(rx.begin(), rx.end(), gen);
    std::shuffle(ry.begin(), ry.end(), gen);
    const double general = standardized_statistic(linear_rank_statistic(rx, ry, id, id), null_moments(id, id, n));
    CHECK(std::abs(spearman_statistic(rx, ry) - general) < 1e-10);
  }
}

TEST_CASE("p-values and decisions") {
  CHECK(normal_p_value(0.0, Alternative::kTwoSided) == doctest::Approx(1.0));
  CHECK(normal_p_value(1.959963984540054, Alternative::kTwoSided) == doctest::Approx(0.05));
  CHECK(normal_p_value(1.644853626951472, Alternative::kGreater) == doctest::Approx(0.05));
  CHECK(normal_p_value(-1.644853626951472, Alternative::kLess) == doctest::Approx(0.05));
  const auto r = iota1(30);
  const auto id = ScoreFunction::spearman();
  const auto rep = rank_independence_test(r, r, id, id, 0.05);
  CHECK(rep.reject == (rep.p_value < rep.alpha));
  CHECK(rep.reject);
  CHECK(rep.score_x == "spearman");
  CHECK_THROWS_AS(rank_independence_test(r, r, id, id, 1.5), DomainError);
}

TEST_CASE("metric independence test") {
  const Sampler gx(presets::gaussian_r2());
  const auto xs = gx.sample(50, 1);
  const auto sx = gx.space();
  const auto id = ScoreFunction::spearman();
  // An isometric image gives identical ranks and the maximal statistic.
  const auto iso = exact_isometry(sx, {{1, 0}, {0}, {}});
  const auto ys = iso(xs);
  const auto rep = independence_test(sx, xs, sx, ys, id, id, 0.05);
  const auto rr = iota1(50);
  CHECK(rep.statistic == doctest::Approx(spearman_statistic(rr, rr)));
  CHECK(rep.reject);
  // Swapping the samples leaves W unchanged.
  const Sampler gy(presets::vmf_s2());
  const auto zs = gy.sample(50, 2);
  const auto a = independence_test(sx, xs, gy.space(), zs, id, id, 0.05);
  const auto b = independence_test(gy.space(), zs, sx, xs, id, id, 0.05);
  CHECK(a.statistic == b.statistic);
  const std::vector<Point> fewer(zs.begin(), zs.begin() + 10);
  CHECK_THROWS_AS(independence_test(sx, xs, gy.space(), fewer, id, id, 0.05), DomainError);
}

TEST_CASE("tabulated scores interpolate") {
  const auto f = ScoreFunction::tabulated({{0.0, 0.0}, {0.5, 1.0}, {1.0, 0.0}});
  CHECK(f(0.25) == doctest::Approx(0.5));
  CHECK(f(0.5) == doctest::Approx(1.0));
  CHECK(f(-1.0) == 0.0);
  CHECK(f(2.0) == 0.0);
}
