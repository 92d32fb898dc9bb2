#include <random>

#include "doctest.h"
#include "metricq/emdf.hpp"
#include "metricq/samplers.hpp"

using namespace metricq;

namespace {

std::vector<Point> r1(std::initializer_list<double> xs) {
  std::vector<Point> p;
  for (double x : xs) p.push_back(make_euclidean({x}));
  return p;
}

}  // namespace

TEST_CASE("hand-worked EMDF on {0, 1, 3}") {
  const auto s = SpaceDescriptor::euclidean(1);
  const auto pts = r1({0, 1, 3});
  const auto r = rank_matrix(pairwise_distances(s, pts));
  const std::vector<std::vector<std::uint32_t>> want{{1, 2, 3}, {2, 1, 3}, {3, 2, 1}};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(r(i, j) == want[i][j]);
  const auto f = emdf_matrix(s, pts);
  CHECK(f(0, 1) == 2.0 / 3.0);
  CHECK(f(1, 0) == 2.0 / 3.0);
  CHECK(f(2, 2) == 1.0 / 3.0);
  CHECK(f == emdf_naive(s, pts));
  CHECK(r.column_sums() == std::vector<std::uint64_t>{6, 5, 7});
}

TEST_CASE("degenerate samples") {
  const auto s = SpaceDescriptor::euclidean(1);
  const auto one = r1({2.5});
  CHECK(rank_matrix(pairwise_distances(s, one))(0, 0) == 1);
  CHECK(emdf_naive(s, one)(0, 0) == 1.0);

  const auto same = r1({4, 4, 4, 4});
  const auto f = emdf_matrix(s, same);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) CHECK(f(i, j) == 1.0);
}

TEST_CASE("ties share the maximal rank") {
  const auto s = SpaceDescriptor::euclidean(1);
  const auto pts = r1({0, 1, -1, 2});
  const auto r = rank_matrix(pairwise_distances(s, pts));
  // row 0 distances (0, 1, 1, 2)
  CHECK(r(0, 0) == 1);
  CHECK(r(0, 1) == 3);
  CHECK(r(0, 2) == 3);
  CHECK(r(0, 3) == 4);
  CHECK(emdf_matrix(s, pts) == emdf_naive(s, pts));
}

TEST_CASE("emdf_at") {
  const auto s = SpaceDescriptor::euclidean(1);
  const auto pts = r1({0, 1, 3});
  CHECK(emdf_at(s, pts, make_euclidean({0}), make_euclidean({1})) == 2.0 / 3.0);
  CHECK(emdf_at(s, pts, make_euclidean({0}), make_euclidean({0})) == 1.0 / 3.0);
  CHECK(emdf_at(s, pts, make_euclidean({100}), make_euclidean({-100})) == 1.0);
  const auto f = emdf_matrix(s, pts);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(emdf_at(s, pts, pts[i], pts[j]) == f(i, j));
}

TEST_CASE("sorting pipeline equals the direct count oracle") {
  struct Case {
    SamplerSpec spec;
    std::size_t n;
  };
  const std::vector<Case> cases{{presets::gaussian_r2(), 50},   {presets::vmf_s2(), 40},
                                {presets::wishart_spd3(), 50},  {presets::wasserstein_beta(), 45},
                                {presets::bhv_beta(), 60},      {presets::skew_t6_r2(), 30}};
  std::uint64_t seed = 1;
  for (const auto& c : cases) {
    const Sampler s(c.spec);
    for (int rep = 0; rep < 5; ++rep) {
      const auto pts = s.sample(c.n, seed++);
      const auto fast = emdf_matrix(s.space(), pts);
      CHECK(fast == emdf_naive(s.space(), pts));
      CHECK(fast == emdf_matrix(s.space(), pts, 3));
      // Distinct distances: every row contains 1/n and 1, and is a permutation.
      for (std::size_t i = 0; i < c.n; ++i) {
        CHECK(fast.ranks()(i, i) == 1);
        std::vector<std::uint32_t> row(fast.ranks().row(i).begin(), fast.ranks().row(i).end());
        std::sort(row.begin(), row.end());
        for (std::size_t k = 0; k < c.n; ++k) CHECK(row[k] == k + 1);
      }
    }
  }
}
