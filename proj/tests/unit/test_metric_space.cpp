#include <boost/math/distributions/normal.hpp>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <numbers>
#include <random>

#include "doctest.h"
#include "metricq/error.hpp"
#include "metricq/metric_space.hpp"

#ifdef METRICQ_HAVE_EIGEN
#include <Eigen/Dense>
#endif

using namespace metricq;
using linalg::Matrix;

namespace {

std::mt19937_64 gen(20240611);

std::vector<double> gauss_vec(std::size_t d) {
  std::normal_distribution<double> z;
  std::vector<double> v(d);
  for (auto& x : v) x = z(gen);
  return v;
}

Matrix random_spd(std::size_t p) {
  std::normal_distribution<double> z;
  Matrix a(p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) a(i, j) = z(gen);
  Matrix s = a * a.transpose();
  for (std::size_t i = 0; i < p; ++i) s(i, i) += 0.3;
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < i; ++j) s(j, i) = s(i, j);
  return s;
}

Point random_point(const SpaceDescriptor& s) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  switch (s.kind) {
    case SpaceKind::kEuclidean: return make_euclidean(gauss_vec(s.dimension));
    case SpaceKind::kSphere: return make_unit(gauss_vec(s.dimension));
    case SpaceKind::kSpd: return make_spd(random_spd(s.dimension));
    case SpaceKind::kGaussian1d: return GaussianMeasure{gauss_vec(1)[0], 0.05 + u(gen)};
    case SpaceKind::kBhvT3: return BhvTree{1 + static_cast<int>(gen() % 3), u(gen)};
    case SpaceKind::kProduct: {
      ProductPoint p;
      for (const auto& c : s.components) p.components.push_back(random_point(c));
      return p;
    }
  }
  return {};
}

std::vector<SpaceDescriptor> all_spaces() {
  return {SpaceDescriptor::euclidean(1),
          SpaceDescriptor::euclidean(3),
          SpaceDescriptor::euclidean(4, 1.0),
          SpaceDescriptor::euclidean(3, 3.5),
          SpaceDescriptor::euclidean(3, std::numeric_limits<double>::infinity()),
          SpaceDescriptor::sphere(3),
          SpaceDescriptor::sphere(5),
          SpaceDescriptor::spd(2),
          SpaceDescriptor::spd(3),
          SpaceDescriptor::gaussian1d(),
          SpaceDescriptor::bhv_t3(),
          SpaceDescriptor::product({SpaceDescriptor::euclidean(3), SpaceDescriptor::sphere(3)}, 2.0),
          SpaceDescriptor::product({SpaceDescriptor::euclidean(2), SpaceDescriptor::euclidean(2)}, 1.0)};
}

}  // namespace

TEST_CASE("worked distance examples") {
  const auto s2 = SpaceDescriptor::sphere(3);
  CHECK(distance(s2, make_unit({1, 0, 0}), make_unit({0, 1, 0})) ==
        doctest::Approx(std::numbers::pi / 2));
  CHECK(distance(s2, make_unit({1, 0, 0}), make_unit({-1, 0, 0})) ==
        doctest::Approx(std::numbers::pi));
  CHECK(distance(s2, make_unit({0.6, 0.8, 0}), make_unit({0.6, 0.8, 0})) == 0.0);

  const auto e2 = std::exp(2.0);
  CHECK(distance(SpaceDescriptor::spd(2), make_spd(Matrix::identity(2)),
                 make_spd(Matrix::diagonal({e2, e2}))) == doctest::Approx(2.0 * std::sqrt(2.0)));

  const auto bhv = SpaceDescriptor::bhv_t3();
  CHECK(distance(bhv, BhvTree{1, 0.5}, BhvTree{2, 0.3}) == doctest::Approx(0.8));
  CHECK(distance(bhv, BhvTree{1, 0.5}, BhvTree{1, 0.3}) == doctest::Approx(0.2));
  CHECK(distance(bhv, BhvTree{1, 0.0}, BhvTree{3, 0.0}) == 0.0);

  const auto r3 = SpaceDescriptor::euclidean(3);
  CHECK(distance(r3, make_euclidean({1, 2, 3}), make_euclidean({0, 0, 0})) ==
        doctest::Approx(std::sqrt(14.0)));
  CHECK(distance(SpaceDescriptor::euclidean(3, 1.0), make_euclidean({1, -2, 3}),
                 make_euclidean({0, 0, 0})) == 6.0);
  CHECK(distance(SpaceDescriptor::euclidean(3, std::numeric_limits<double>::infinity()),
                 make_euclidean({1, -5, 3}), make_euclidean({0, 0, 0})) == 5.0);

  const auto prod = SpaceDescriptor::product(
      {SpaceDescriptor::euclidean(1), SpaceDescriptor::euclidean(1)}, 2.0);
  CHECK(distance(prod, ProductPoint{{make_euclidean({0}), make_euclidean({0})}},
                 ProductPoint{{make_euclidean({3}), make_euclidean({4})}}) == doctest::Approx(5.0));
}

TEST_CASE("Wasserstein distance matches the quantile-function integral") {
  // W2^2 = int_0^1 (F1^{-1}(u) - F2^{-1}(u))^2 du, midpoint rule.
  const boost::math::normal n1(0.0, 1.0), n2(0.0, 2.0);
  const int m = 200000;
  double acc = 0.0;
  for (int i = 0; i < m; ++i) {
    const double u = (i + 0.5) / m;
    const double diff = boost::math::quantile(n1, u) - boost::math::quantile(n2, u);
    acc += diff * diff / m;
  }
  const double w = distance(SpaceDescriptor::gaussian1d(), GaussianMeasure{0, 1}, GaussianMeasure{0, 2});
  CHECK(w == doctest::Approx(1.0));
  CHECK(std::abs(std::sqrt(acc) - w) < 2e-3);
  CHECK(distance(SpaceDescriptor::gaussian1d(), GaussianMeasure{1, 1}, GaussianMeasure{-2, 5}) ==
        doctest::Approx(5.0));
}

TEST_CASE("metric axioms on random triples") {
  for (const auto& s : all_spaces()) {
    for (int t = 0; t < 200; ++t) {
      const Point a = random_point(s), b = random_point(s), c = random_point(s);
      const double ab = distance(s, a, b), ba = distance(s, b, a);
      const double ac = distance(s, a, c), bc = distance(s, b, c);
      CHECK(ab == ba);
      CHECK(ab >= 0.0);
      CHECK(distance(s, a, a) == 0.0);
      CHECK(ac <= (ab + bc) * (1.0 + 1e-9) + 1e-12);
    }
  }
}

TEST_CASE("SPD distance agrees with the matrix-logarithm route") {
#ifdef METRICQ_HAVE_EIGEN
  for (std::size_t p : {2u, 3u, 5u}) {
    for (int t = 0; t < 100; ++t) {
      const Matrix x = random_spd(p), y = random_spd(p);
      Eigen::MatrixXd ex(p, p), ey(p, p);
      for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) ex(i, j) = x(i, j), ey(i, j) = y(i, j);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ex);
      const Eigen::MatrixXd xis = es.operatorInverseSqrt();
      const Eigen::MatrixXd m = xis * ey * xis;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> em(0.5 * (m + m.transpose()));
      const Eigen::MatrixXd logm = em.eigenvectors() *
                                   em.eigenvalues().array().log().matrix().asDiagonal() *
                                   em.eigenvectors().transpose();
      const double oracle = logm.norm();
      const double d = distance(SpaceDescriptor::spd(p), make_spd(x), make_spd(y));
      CHECK(std::abs(d - oracle) <= 1e-8 * std::max(1.0, oracle));
    }
  }
#else
  MESSAGE("Eigen not available; logm oracle skipped");
#endif
}

TEST_CASE("SPD distance is affine invariant") {
  for (int t = 0; t < 50; ++t) {
    const Matrix x = random_spd(3), y = random_spd(3), a = random_spd(3);
    const Matrix ax = a * x * a.transpose(), ay = a * y * a.transpose();
    auto sym = [](Matrix m) {
      for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < i; ++j) m(j, i) = m(i, j);
      return m;
    };
    const auto s = SpaceDescriptor::spd(3);
    CHECK(distance(s, make_spd(sym(ax)), make_spd(sym(ay))) ==
          doctest::Approx(distance(s, make_spd(x), make_spd(y))).epsilon(1e-7));
  }
}

TEST_CASE("pairwise distances") {
  const auto r1 = SpaceDescriptor::euclidean(1);
  const std::vector<Point> pts{make_euclidean({0}), make_euclidean({1}), make_euclidean({3})};
  const auto d = pairwise_distances(r1, pts);
  const std::vector<double> want{0, 1, 3, 1, 0, 2, 3, 2, 0};
  CHECK(d.data() == want);

  const std::vector<Point> one{make_euclidean({4})};
  CHECK(pairwise_distances(r1, one).data() == std::vector<double>{0.0});

  const auto s2 = SpaceDescriptor::sphere(3);
  std::vector<Point> sp;
  for (int i = 0; i < 20; ++i) sp.push_back(random_point(s2));
  const auto ds = pairwise_distances(s2, sp);
  for (std::size_t i = 0; i < 20; ++i)
    for (std::size_t j = 0; j < 20; ++j) CHECK(ds(i, j) == distance(s2, sp[i], sp[j]));

  for (const auto& s : all_spaces()) {
    std::vector<Point> p;
    for (int i = 0; i < 15; ++i) p.push_back(random_point(s));
    const auto d1 = pairwise_distances(s, p, 1);
    CHECK(d1 == pairwise_distances(s, p, 4));
    for (std::size_t i = 0; i < 15; ++i) {
      CHECK(d1(i, i) == 0.0);
      for (std::size_t j = 0; j < 15; ++j) CHECK(d1(i, j) == distance(s, p[i], p[j]));
    }
  }
}

TEST_CASE("invalid inputs are rejected") {
  const auto r3 = SpaceDescriptor::euclidean(3);
  CHECK_THROWS_AS(distance(r3, make_euclidean({1, 2}), make_euclidean({1, 2, 3})), DomainError);
  CHECK_THROWS_AS(validate_point(SpaceDescriptor::spd(2), make_spd(Matrix{{1, 2}, {2, 1}})), DomainError);
  CHECK_THROWS_AS(validate_point(SpaceDescriptor::spd(2), make_spd(Matrix{{1, 0.1}, {0.2, 1}})),
                  DomainError);
  CHECK_THROWS_AS(validate_point(SpaceDescriptor::bhv_t3(), BhvTree{4, 0.1}), DomainError);
  CHECK_THROWS_AS(distance(SpaceDescriptor::bhv_t3(), BhvTree{0, 0.1}, BhvTree{1, 0.1}), DomainError);
  CHECK_THROWS_AS(validate_point(SpaceDescriptor::sphere(3), UnitVector{{1, 1, 0}}), DomainError);
  CHECK_THROWS_AS(validate_point(SpaceDescriptor::gaussian1d(), GaussianMeasure{0, 0}), DomainError);
  CHECK_THROWS_AS(make_unit({0, 0, 0}), DomainError);
  CHECK_THROWS_AS(distance(r3, make_unit({1, 0, 0}), make_euclidean({1, 2, 3})), DomainError);
  CHECK_THROWS_AS(SpaceDescriptor::euclidean(2, 0.5).validate(), DomainError);
  CHECK_THROWS_AS(SpaceDescriptor::product({}).validate(), DomainError);
  const std::vector<Point> bad{make_euclidean({1, 2, 3}), make_euclidean({1, 2})};
  CHECK_THROWS_AS(pairwise_distances(r3, bad), DomainError);
}

TEST_CASE("space kind names round-trip") {
  for (auto k : {SpaceKind::kEuclidean, SpaceKind::kSphere, SpaceKind::kSpd, SpaceKind::kGaussian1d,
                 SpaceKind::kBhvT3, SpaceKind::kProduct})
    CHECK(space_kind_from_string(to_string(k)) == k);
  CHECK(space_kind_from_string("euclidean-lp") == SpaceKind::kEuclidean);
  CHECK(space_kind_from_string("spd-affine-invariant") == SpaceKind::kSpd);
  CHECK_THROWS_AS(space_kind_from_string("hyperbolic"), DomainError);
}

TEST_CASE("flatten and unflatten are inverse") {
  for (const auto& s : all_spaces()) {
    const Point p = random_point(s);
    const auto flat = flatten(s, p);
    CHECK(flat.size() == s.flat_size());
    CHECK(unflatten(s, flat) == p);
  }
  // SPD stored as row-major lower triangle.
  const auto flat = flatten(SpaceDescriptor::spd(2), make_spd(Matrix{{2, 0.5}, {0.5, 3}}));
  CHECK(flat == std::vector<double>{2, 0.5, 3});
}

TEST_CASE("exact isometries preserve distances bit for bit") {
  SUBCASE("coordinate swap in R^3") {
    const auto r3 = SpaceDescriptor::euclidean(3);
    const auto iso = exact_isometry(r3, {{0, 2, 1}, {}, {}});
    const Point u = make_euclidean({1, 2, 3}), o = make_euclidean({0, 0, 0});
    CHECK(distance(r3, iso(u), iso(o)) == distance(r3, u, o));
    CHECK(iso(u).as<EuclideanVector>().coords == std::vector<double>{1, 3, 2});
  }
  SUBCASE("negate an axis on S^2") {
    const auto s2 = SpaceDescriptor::sphere(3);
    const auto iso = exact_isometry(s2, {{0, 1, 2}, {2}, {}});
    for (int t = 0; t < 100; ++t) {
      const Point a = random_point(s2), b = random_point(s2);
      CHECK(distance(s2, iso(a), iso(b)) == distance(s2, a, b));
    }
  }
  SUBCASE("full distance matrices") {
    auto spec_for = [](const SpaceDescriptor& s, auto& self) -> IsometrySpec {
      IsometrySpec spec;
      switch (s.kind) {
        case SpaceKind::kEuclidean:
        case SpaceKind::kSphere:
        case SpaceKind::kSpd: {
          spec.permutation.resize(s.dimension);
          std::iota(spec.permutation.begin(), spec.permutation.end(), std::size_t{0});
          std::shuffle(spec.permutation.begin(), spec.permutation.end(), gen);
          if (s.kind != SpaceKind::kSpd)
            for (std::size_t i = 0; i < s.dimension; ++i)
              if (gen() % 2) spec.sign_flips.push_back(i);
          break;
        }
        case SpaceKind::kGaussian1d: spec.sign_flips = {0}; break;
        case SpaceKind::kBhvT3: spec.permutation = {2, 0, 1}; break;
        case SpaceKind::kProduct:
          for (const auto& c : s.components) spec.components.push_back(self(c, self));
          break;
      }
      return spec;
    };
    for (const auto& s : all_spaces()) {
      for (int rep = 0; rep < 10; ++rep) {
        std::vector<Point> p;
        for (int i = 0; i < 25; ++i) p.push_back(random_point(s));
        const auto iso = exact_isometry(s, spec_for(s, spec_for));
        const auto q = iso(p);
        CHECK(pairwise_distances(s, q) == pairwise_distances(s, p));
      }
    }
  }
  SUBCASE("unsupported specs are refused") {
    CHECK_THROWS_AS(exact_isometry(SpaceDescriptor::spd(2), {{0, 1}, {0}, {}}), DomainError);
    CHECK_THROWS_AS(exact_isometry(SpaceDescriptor::euclidean(3), {{0, 0, 1}, {}, {}}), DomainError);
    CHECK_THROWS_AS(exact_isometry(SpaceDescriptor::euclidean(3), {{0, 1, 2}, {5}, {}}), DomainError);
  }
}
