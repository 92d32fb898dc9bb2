#include "metricq/metric_space.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "metricq/parallel.hpp"

namespace metricq {

std::string to_string(SpaceKind kind) {
  switch (kind) {
    case SpaceKind::kEuclidean: return "euclidean";
    case SpaceKind::kSphere: return "sphere";
    case SpaceKind::kSpd: return "spd";
    case SpaceKind::kGaussian1d: return "gaussian1d";
    case SpaceKind::kBhvT3: return "bhv-t3";
    case SpaceKind::kProduct: return "product";
  }
  return "unknown";
}

SpaceKind space_kind_from_string(const std::string& name) {
  if (name == "euclidean" || name == "euclidean-lp") return SpaceKind::kEuclidean;
  if (name == "sphere" || name == "sphere-geodesic") return SpaceKind::kSphere;
  if (name == "spd" || name == "spd-affine-invariant") return SpaceKind::kSpd;
  if (name == "gaussian1d" || name == "wasserstein2-gaussian1d") return SpaceKind::kGaussian1d;
  if (name == "bhv-t3" || name == "bhv") return SpaceKind::kBhvT3;
  if (name == "product") return SpaceKind::kProduct;
  throw DomainError("unknown space kind '" + name + "'");
}

SpaceDescriptor SpaceDescriptor::euclidean(std::size_t dim, double q) {
  SpaceDescriptor s{SpaceKind::kEuclidean, dim, q, {}};
  s.validate();
  return s;
}

SpaceDescriptor SpaceDescriptor::sphere(std::size_t ambient_dim) {
  SpaceDescriptor s{SpaceKind::kSphere, ambient_dim, 2.0, {}};
  s.validate();
  return s;
}

SpaceDescriptor SpaceDescriptor::spd(std::size_t p) {
  SpaceDescriptor s{SpaceKind::kSpd, p, 2.0, {}};
  s.validate();
  return s;
}

SpaceDescriptor SpaceDescriptor::gaussian1d() { return {SpaceKind::kGaussian1d, 1, 2.0, {}}; }

SpaceDescriptor SpaceDescriptor::bhv_t3() { return {SpaceKind::kBhvT3, 1, 2.0, {}}; }

SpaceDescriptor SpaceDescriptor::product(std::vector<SpaceDescriptor> components, double p) {
  SpaceDescriptor s{SpaceKind::kProduct, components.size(), p, std::move(components)};
  s.validate();
  return s;
}

void SpaceDescriptor::validate() const {
  switch (kind) {
    case SpaceKind::kEuclidean:
      if (dimension == 0) throw DomainError("euclidean space needs dimension >= 1");
      if (!(exponent >= 1.0)) throw DomainError("L_q exponent must satisfy q >= 1");
      break;
    case SpaceKind::kSphere:
      if (dimension < 2) throw DomainError("sphere needs ambient dimension >= 2");
      break;
    case SpaceKind::kSpd:
      if (dimension == 0) throw DomainError("SPD space needs matrix order >= 1");
      break;
    case SpaceKind::kGaussian1d:
    case SpaceKind::kBhvT3:
      break;
    case SpaceKind::kProduct:
      if (components.empty()) throw DomainError("product space needs at least one component");
      if (!(exponent >= 1.0) || std::isinf(exponent))
        throw DomainError("product exponent must be finite and >= 1");
      for (const auto& c : components) c.validate();
      break;
  }
}

std::size_t SpaceDescriptor::flat_size() const {
  switch (kind) {
    case SpaceKind::kEuclidean:
    case SpaceKind::kSphere: return dimension;
    case SpaceKind::kSpd: return dimension * (dimension + 1) / 2;
    case SpaceKind::kGaussian1d:
    case SpaceKind::kBhvT3: return 2;
    case SpaceKind::kProduct: {
      std::size_t s = 0;
      for (const auto& c : components) s += c.flat_size();
      return s;
    }
  }
  return 0;
}

Point make_euclidean(std::vector<double> coords) { return EuclideanVector{std::move(coords)}; }

Point make_unit(std::vector<double> coords) {
  double norm = 0.0;
  for (double c : coords) norm += c * c;
  norm = std::sqrt(norm);
  if (!(norm > 0.0) || !std::isfinite(norm)) throw DomainError("cannot normalize a zero vector");
  for (double& c : coords) c /= norm;
  return UnitVector{std::move(coords)};
}

Point make_spd(const linalg::Matrix& m) { return SpdMatrix{m}; }

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

void check_dimension(std::size_t got, std::size_t want, const char* what) {
  if (got != want)
    throw DomainError(std::string(what) + ": dimension mismatch (expected " +
                      std::to_string(want) + ", got " + std::to_string(got) + ")");
}

void validate_spd(const linalg::Matrix& m, std::size_t p) {
  check_dimension(m.size(), p, "SPD matrix");
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < i; ++j) {
      const double a = m(i, j), b = m(j, i);
      require(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)),
              "SPD matrix is not symmetric");
    }
  for (double v : m.data()) require(std::isfinite(v), "SPD matrix has non-finite entries");
  require(linalg::cholesky(m).has_value(), "matrix is not positive definite");
}

}  // namespace

void validate_point(const SpaceDescriptor& space, const Point& u) {
  switch (space.kind) {
    case SpaceKind::kEuclidean: {
      const auto& x = u.as<EuclideanVector>().coords;
      check_dimension(x.size(), space.dimension, "euclidean point");
      for (double c : x) require(std::isfinite(c), "euclidean point has non-finite coordinates");
      break;
    }
    case SpaceKind::kSphere: {
      const auto& x = u.as<UnitVector>().coords;
      check_dimension(x.size(), space.dimension, "unit vector");
      double norm2 = 0.0;
      for (double c : x) norm2 += c * c;
      require(std::abs(std::sqrt(norm2) - 1.0) <= 1e-10, "vector is not unit-norm");
      break;
    }
    case SpaceKind::kSpd:
      validate_spd(u.as<SpdMatrix>().value, space.dimension);
      break;
    case SpaceKind::kGaussian1d: {
      const auto& g = u.as<GaussianMeasure>();
      require(std::isfinite(g.mean), "gaussian mean must be finite");
      require(g.sigma > 0.0 && std::isfinite(g.sigma), "gaussian sigma must be positive");
      break;
    }
    case SpaceKind::kBhvT3: {
      const auto& t = u.as<BhvTree>();
      require(t.branch >= 1 && t.branch <= 3, "BHV branch index must be 1, 2 or 3");
      require(t.length >= 0.0 && std::isfinite(t.length), "BHV length must be nonnegative");
      break;
    }
    case SpaceKind::kProduct: {
      const auto& p = u.as<ProductPoint>();
      check_dimension(p.components.size(), space.components.size(), "product point arity");
      for (std::size_t k = 0; k < p.components.size(); ++k)
        validate_point(space.components[k], p.components[k]);
      break;
    }
  }
}

std::vector<double> flatten(const SpaceDescriptor& space, const Point& u) {
  std::vector<double> out;
  switch (space.kind) {
    case SpaceKind::kEuclidean: out = u.as<EuclideanVector>().coords; break;
    case SpaceKind::kSphere: out = u.as<UnitVector>().coords; break;
    case SpaceKind::kSpd: {
      const auto& m = u.as<SpdMatrix>().value;
      for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j <= i; ++j) out.push_back(m(i, j));
      break;
    }
    case SpaceKind::kGaussian1d: {
      const auto& g = u.as<GaussianMeasure>();
      out = {g.mean, g.sigma};
      break;
    }
    case SpaceKind::kBhvT3: {
      const auto& t = u.as<BhvTree>();
      out = {static_cast<double>(t.branch), t.length};
      break;
    }
    case SpaceKind::kProduct: {
      const auto& p = u.as<ProductPoint>();
      check_dimension(p.components.size(), space.components.size(), "product point arity");
      for (std::size_t k = 0; k < p.components.size(); ++k) {
        auto part = flatten(space.components[k], p.components[k]);
        out.insert(out.end(), part.begin(), part.end());
      }
      break;
    }
  }
  return out;
}

Point unflatten(const SpaceDescriptor& space, std::span<const double> flat) {
  check_dimension(flat.size(), space.flat_size(), "flat coordinates");
  switch (space.kind) {
    case SpaceKind::kEuclidean: return EuclideanVector{{flat.begin(), flat.end()}};
    case SpaceKind::kSphere: return UnitVector{{flat.begin(), flat.end()}};
    case SpaceKind::kSpd: {
      const std::size_t p = space.dimension;
      linalg::Matrix m(p);
      std::size_t k = 0;
      for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
          m(i, j) = flat[k];
          m(j, i) = flat[k];
          ++k;
        }
      return SpdMatrix{std::move(m)};
    }
    case SpaceKind::kGaussian1d: return GaussianMeasure{flat[0], flat[1]};
    case SpaceKind::kBhvT3: {
      const double b = flat[0];
      require(b == 1.0 || b == 2.0 || b == 3.0, "BHV branch index must be 1, 2 or 3");
      return BhvTree{static_cast<int>(b), flat[1]};
    }
    case SpaceKind::kProduct: {
      ProductPoint p;
      std::size_t offset = 0;
      for (const auto& c : space.components) {
        const std::size_t len = c.flat_size();
        p.components.push_back(unflatten(c, flat.subspan(offset, len)));
        offset += len;
      }
      return p;
    }
  }
  throw DomainError("unflatten: unsupported space");
}

namespace {

// Sums the terms in ascending order so the result depends only on the
// multiset of terms, not on coordinate order.
template <class TermFn>
double order_free_sum(std::size_t d, TermFn term) {
  constexpr std::size_t kInline = 32;
  if (d <= kInline) {
    std::array<double, kInline> buf;
    for (std::size_t k = 0; k < d; ++k) buf[k] = term(k);
    std::sort(buf.begin(), buf.begin() + d);
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) s += buf[k];
    return s;
  }
  thread_local std::vector<double> buf;
  buf.resize(d);
  for (std::size_t k = 0; k < d; ++k) buf[k] = term(k);
  std::sort(buf.begin(), buf.end());
  double s = 0.0;
  for (double v : buf) s += v;
  return s;
}

double lq_distance(const std::vector<double>& x, const std::vector<double>& y, double q) {
  const std::size_t d = x.size();
  if (std::isinf(q)) {
    double m = 0.0;
    for (std::size_t k = 0; k < d; ++k) m = std::max(m, std::abs(x[k] - y[k]));
    return m;
  }
  if (q == 2.0) {
    return std::sqrt(order_free_sum(d, [&](std::size_t k) {
      const double t = x[k] - y[k];
      return t * t;
    }));
  }
  if (q == 1.0) return order_free_sum(d, [&](std::size_t k) { return std::abs(x[k] - y[k]); });
  return std::pow(order_free_sum(d, [&](std::size_t k) { return std::pow(std::abs(x[k] - y[k]), q); }),
                  1.0 / q);
}

double geodesic_distance(const std::vector<double>& x, const std::vector<double>& y) {
  if (x == y) return 0.0;
  const double dot = order_free_sum(x.size(), [&](std::size_t k) { return x[k] * y[k]; });
  return std::acos(std::clamp(dot, -1.0, 1.0));
}

// SPD geometry. For a pair (X, Y) the eigenvalues of X^{-1} Y are the
// eigenvalues of L^{-1} Y L^{-T} with X = L L^T. To make the result exactly
// invariant under simultaneous row/column permutations, X is first brought
// to a canonical ordering (diagonal sorted ascending) and Y is permuted the
// same way; the pair itself is ordered by a permutation-invariant key so the
// distance is also exactly symmetric.
struct SpdFrame {
  std::vector<std::size_t> order;
  linalg::Matrix whitener;      // L^{-1} of the reordered matrix
  std::vector<double> sort_key;  // sorted diagonal, then sorted entries
};

SpdFrame make_frame(const linalg::Matrix& x) {
  const std::size_t p = x.size();
  SpdFrame f;
  f.order.resize(p);
  std::iota(f.order.begin(), f.order.end(), std::size_t{0});
  std::stable_sort(f.order.begin(), f.order.end(),
                   [&](std::size_t a, std::size_t b) { return x(a, a) < x(b, b); });
  linalg::Matrix xc(p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) xc(i, j) = x(f.order[i], f.order[j]);
  auto l = linalg::cholesky(xc);
  if (!l) throw DomainError("matrix is not positive definite");
  f.whitener = linalg::invert_lower(*l);

  for (std::size_t i = 0; i < p; ++i) f.sort_key.push_back(xc(i, i));
  std::vector<double> entries = x.data();
  std::sort(entries.begin(), entries.end());
  f.sort_key.insert(f.sort_key.end(), entries.begin(), entries.end());
  return f;
}

// true when (x, fx) should act as the whitening side of the pair
bool spd_goes_first(const linalg::Matrix& x, const SpdFrame& fx, const linalg::Matrix& y,
                    const SpdFrame& fy) {
  if (fx.sort_key != fy.sort_key) return fx.sort_key < fy.sort_key;
  return x.data() <= y.data();
}

double spd_distance_with(const SpdFrame& fx, const linalg::Matrix& y) {
  const std::size_t p = y.size();
  linalg::Matrix yc(p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) yc(i, j) = y(fx.order[i], fx.order[j]);
  const linalg::Matrix& w = fx.whitener;
  // m = W yc W^T, W lower triangular
  linalg::Matrix t(p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k <= i; ++k) s += w(i, k) * yc(k, j);
      t(i, j) = s;
    }
  linalg::Matrix m(p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k <= j; ++k) s += t(i, k) * w(j, k);
      m(i, j) = s;
      m(j, i) = s;
    }
  auto ev = linalg::jacobi_eigenvalues(m);
  for (double& v : ev) {
    if (!(v > 0.0)) throw NumericError("SPD distance: non-positive generalized eigenvalue");
    const double lg = std::log(v);
    v = lg * lg;
  }
  std::sort(ev.begin(), ev.end());
  double s = 0.0;
  for (double v : ev) s += v;
  return std::sqrt(s);
}

double spd_distance(const linalg::Matrix& x, const linalg::Matrix& y) {
  if (x == y) return 0.0;
  const SpdFrame fx = make_frame(x);
  const SpdFrame fy = make_frame(y);
  return spd_goes_first(x, fx, y, fy) ? spd_distance_with(fx, y) : spd_distance_with(fy, x);
}

double bhv_distance(const BhvTree& a, const BhvTree& b) {
  if (a.branch == b.branch || a.length == 0.0 || b.length == 0.0)
    return std::abs(a.length - b.length);
  return a.length + b.length;
}

double combine_product(double acc_pow_sum, double p) {
  return p == 2.0 ? std::sqrt(acc_pow_sum) : std::pow(acc_pow_sum, 1.0 / p);
}

double power(double d, double p) { return p == 2.0 ? d * d : std::pow(d, p); }

}  // namespace

double distance(const SpaceDescriptor& space, const Point& u, const Point& v) {
  switch (space.kind) {
    case SpaceKind::kEuclidean: {
      const auto& x = u.as<EuclideanVector>().coords;
      const auto& y = v.as<EuclideanVector>().coords;
      check_dimension(x.size(), space.dimension, "euclidean point");
      check_dimension(y.size(), space.dimension, "euclidean point");
      return lq_distance(x, y, space.exponent);
    }
    case SpaceKind::kSphere: {
      const auto& x = u.as<UnitVector>().coords;
      const auto& y = v.as<UnitVector>().coords;
      check_dimension(x.size(), space.dimension, "unit vector");
      check_dimension(y.size(), space.dimension, "unit vector");
      return geodesic_distance(x, y);
    }
    case SpaceKind::kSpd: {
      const auto& x = u.as<SpdMatrix>().value;
      const auto& y = v.as<SpdMatrix>().value;
      check_dimension(x.size(), space.dimension, "SPD matrix");
      check_dimension(y.size(), space.dimension, "SPD matrix");
      return spd_distance(x, y);
    }
    case SpaceKind::kGaussian1d: {
      const auto& a = u.as<GaussianMeasure>();
      const auto& b = v.as<GaussianMeasure>();
      require(a.sigma > 0.0 && b.sigma > 0.0, "gaussian sigma must be positive");
      const double dm = a.mean - b.mean;
      const double ds = a.sigma - b.sigma;
      return std::sqrt(dm * dm + ds * ds);
    }
    case SpaceKind::kBhvT3: {
      const auto& a = u.as<BhvTree>();
      const auto& b = v.as<BhvTree>();
      require(a.branch >= 1 && a.branch <= 3 && b.branch >= 1 && b.branch <= 3,
              "BHV branch index must be 1, 2 or 3");
      return bhv_distance(a, b);
    }
    case SpaceKind::kProduct: {
      const auto& a = u.as<ProductPoint>().components;
      const auto& b = v.as<ProductPoint>().components;
      check_dimension(a.size(), space.components.size(), "product point arity");
      check_dimension(b.size(), space.components.size(), "product point arity");
      double acc = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k)
        acc += power(distance(space.components[k], a[k], b[k]), space.exponent);
      return combine_product(acc, space.exponent);
    }
  }
  throw DomainError("distance: unsupported space");
}

DistanceMatrix pairwise_distances(const SpaceDescriptor& space, std::span<const Point> points,
                                  unsigned threads) {
  const std::size_t n = points.size();
  if (n == 0) throw DomainError("pairwise_distances: empty sample");
  space.validate();
  for (const auto& p : points) validate_point(space, p);

  DistanceMatrix d(n);
  if (space.kind == SpaceKind::kSpd) {
    std::vector<SpdFrame> frames(n);
    parallel_for(n, threads, [&](std::size_t i) {
      frames[i] = make_frame(points[i].as<SpdMatrix>().value);
    });
    parallel_for(n, threads, [&](std::size_t i) {
      const auto& xi = points[i].as<SpdMatrix>().value;
      for (std::size_t j = i + 1; j < n; ++j) {
        const auto& xj = points[j].as<SpdMatrix>().value;
        double v = 0.0;
        if (!(xi == xj))
          v = spd_goes_first(xi, frames[i], xj, frames[j]) ? spd_distance_with(frames[i], xj)
                                                           : spd_distance_with(frames[j], xi);
        d(i, j) = v;
      }
    });
  } else {
    parallel_for(n, threads, [&](std::size_t i) {
      for (std::size_t j = i + 1; j < n; ++j) d(i, j) = distance(space, points[i], points[j]);
    });
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) d(i, j) = d(j, i);
  return d;
}

namespace {

void check_permutation(const std::vector<std::size_t>& perm, std::size_t n, const char* what) {
  if (perm.empty()) return;
  if (perm.size() != n)
    throw DomainError(std::string(what) + ": permutation has wrong length");
  std::vector<bool> seen(n, false);
  for (std::size_t v : perm) {
    if (v >= n || seen[v]) throw DomainError(std::string(what) + ": not a permutation");
    seen[v] = true;
  }
}

void check_spec(const SpaceDescriptor& space, const IsometrySpec& spec) {
  switch (space.kind) {
    case SpaceKind::kEuclidean:
    case SpaceKind::kSphere:
      check_permutation(spec.permutation, space.dimension, "coordinate isometry");
      for (std::size_t a : spec.sign_flips)
        if (a >= space.dimension) throw DomainError("sign flip axis out of range");
      if (!spec.components.empty()) throw DomainError("component isometries need a product space");
      break;
    case SpaceKind::kSpd:
      check_permutation(spec.permutation, space.dimension, "SPD congruence");
      if (!spec.sign_flips.empty())
        throw DomainError("SPD isometries support permutation congruences only");
      if (!spec.components.empty()) throw DomainError("component isometries need a product space");
      break;
    case SpaceKind::kGaussian1d:
      if (!spec.permutation.empty() || !spec.components.empty())
        throw DomainError("gaussian1d isometries support mean reflection only");
      for (std::size_t a : spec.sign_flips)
        if (a != 0) throw DomainError("gaussian1d: only axis 0 (the mean) can be reflected");
      break;
    case SpaceKind::kBhvT3:
      check_permutation(spec.permutation, 3, "BHV branch relabeling");
      if (!spec.sign_flips.empty() || !spec.components.empty())
        throw DomainError("BHV isometries support branch relabeling only");
      break;
    case SpaceKind::kProduct:
      if (!spec.permutation.empty() || !spec.sign_flips.empty())
        throw DomainError("product isometries act componentwise");
      if (!spec.components.empty() && spec.components.size() != space.components.size())
        throw DomainError("product isometry needs one spec per component");
      for (std::size_t k = 0; k < spec.components.size(); ++k)
        check_spec(space.components[k], spec.components[k]);
      break;
  }
}

std::vector<double> transform_coords(const std::vector<double>& x, const IsometrySpec& spec) {
  std::vector<double> y = x;
  if (!spec.permutation.empty())
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[spec.permutation[i]];
  for (std::size_t a : spec.sign_flips) y[a] = -y[a];
  return y;
}

Point transform(const SpaceDescriptor& space, const IsometrySpec& spec, const Point& u) {
  switch (space.kind) {
    case SpaceKind::kEuclidean:
      return EuclideanVector{transform_coords(u.as<EuclideanVector>().coords, spec)};
    case SpaceKind::kSphere:
      return UnitVector{transform_coords(u.as<UnitVector>().coords, spec)};
    case SpaceKind::kSpd: {
      const auto& x = u.as<SpdMatrix>().value;
      if (spec.permutation.empty()) return u;
      linalg::Matrix y(x.size());
      for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < x.size(); ++j)
          y(i, j) = x(spec.permutation[i], spec.permutation[j]);
      return SpdMatrix{std::move(y)};
    }
    case SpaceKind::kGaussian1d: {
      GaussianMeasure g = u.as<GaussianMeasure>();
      if (!spec.sign_flips.empty() && spec.sign_flips.size() % 2 == 1) g.mean = -g.mean;
      return g;
    }
    case SpaceKind::kBhvT3: {
      BhvTree t = u.as<BhvTree>();
      if (!spec.permutation.empty())
        t.branch = static_cast<int>(spec.permutation[static_cast<std::size_t>(t.branch - 1)]) + 1;
      return t;
    }
    case SpaceKind::kProduct: {
      ProductPoint p = u.as<ProductPoint>();
      for (std::size_t k = 0; k < spec.components.size(); ++k)
        p.components[k] = transform(space.components[k], spec.components[k], p.components[k]);
      return p;
    }
  }
  return u;
}

}  // namespace

Isometry::Isometry(SpaceDescriptor space, IsometrySpec spec)
    : space_(std::move(space)), spec_(std::move(spec)) {
  space_.validate();
  check_spec(space_, spec_);
}

Point Isometry::operator()(const Point& u) const { return transform(space_, spec_, u); }

std::vector<Point> Isometry::operator()(std::span<const Point> points) const {
  std::vector<Point> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back((*this)(p));
  return out;
}

Isometry exact_isometry(const SpaceDescriptor& space, IsometrySpec spec) {
  return Isometry(space, std::move(spec));
}

}  // namespace metricq
