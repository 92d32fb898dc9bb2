#ifndef METRICQ_METRIC_SPACE_HPP
#define METRICQ_METRIC_SPACE_HPP

// Supported metric spaces, their points, and distance functions.
//
// Every distance is computed so that it is bit-for-bit symmetric in its
// arguments and bit-for-bit invariant under the exact isometries exposed
// below (coordinate permutations, axis sign flips, SPD permutation
// congruences). Rank-based statistics built on top inherit that exactness.

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "metricq/error.hpp"
#include "metricq/linalg.hpp"

namespace metricq {

enum class SpaceKind {
  kEuclidean,   // R^d with the L_q norm
  kSphere,      // S^{d-1} with the geodesic (great-circle) distance
  kSpd,         // SPD(p) with the affine-invariant Riemannian distance
  kGaussian1d,  // 1-D Gaussian measures under Wasserstein-2
  kBhvT3,       // the three-leaf tree space (a spider with three legs)
  kProduct,     // finite product with an l_p combination of the factors
};

std::string to_string(SpaceKind kind);
SpaceKind space_kind_from_string(const std::string& name);

struct SpaceDescriptor {
  SpaceKind kind = SpaceKind::kEuclidean;
  // Euclidean/sphere: ambient dimension. SPD: matrix order p.
  std::size_t dimension = 0;
  // Euclidean: the L_q exponent. Product: the l_p combining exponent.
  double exponent = 2.0;
  std::vector<SpaceDescriptor> components;

  static SpaceDescriptor euclidean(std::size_t dim, double q = 2.0);
  static SpaceDescriptor sphere(std::size_t ambient_dim);
  static SpaceDescriptor spd(std::size_t p);
  static SpaceDescriptor gaussian1d();
  static SpaceDescriptor bhv_t3();
  static SpaceDescriptor product(std::vector<SpaceDescriptor> components, double p = 2.0);

  /// Throws DomainError when parameters are out of range.
  void validate() const;

  /// Number of flat coordinates a point of this space serializes to.
  std::size_t flat_size() const;

  friend bool operator==(const SpaceDescriptor&, const SpaceDescriptor&) = default;
};

struct EuclideanVector {
  std::vector<double> coords;
  friend bool operator==(const EuclideanVector&, const EuclideanVector&) = default;
};

struct UnitVector {
  std::vector<double> coords;
  friend bool operator==(const UnitVector&, const UnitVector&) = default;
};

struct SpdMatrix {
  linalg::Matrix value;
  friend bool operator==(const SpdMatrix&, const SpdMatrix&) = default;
};

struct GaussianMeasure {
  double mean = 0.0;
  double sigma = 1.0;
  friend bool operator==(const GaussianMeasure&, const GaussianMeasure&) = default;
};

/// A point of T^3: `branch` in {1, 2, 3}; length 0 is the origin on any branch.
struct BhvTree {
  int branch = 1;
  double length = 0.0;
  friend bool operator==(const BhvTree&, const BhvTree&) = default;
};

struct Point;

struct ProductPoint {
  std::vector<Point> components;
  friend bool operator==(const ProductPoint&, const ProductPoint&);
};

struct Point {
  using Value = std::variant<EuclideanVector, UnitVector, SpdMatrix, GaussianMeasure, BhvTree,
                             ProductPoint>;
  Value value;

  Point() = default;
  Point(EuclideanVector v) : value(std::move(v)) {}
  Point(UnitVector v) : value(std::move(v)) {}
  Point(SpdMatrix v) : value(std::move(v)) {}
  Point(GaussianMeasure v) : value(v) {}
  Point(BhvTree v) : value(v) {}
  Point(ProductPoint v) : value(std::move(v)) {}

  template <class T>
  const T& as() const;

  friend bool operator==(const Point&, const Point&) = default;
};

inline bool operator==(const ProductPoint& a, const ProductPoint& b) {
  return a.components == b.components;
}

template <class T>
const T& Point::as() const {
  if (const T* p = std::get_if<T>(&value)) return *p;
  throw DomainError("point does not belong to the requested space kind");
}

Point make_euclidean(std::vector<double> coords);
/// Normalizes to unit length; throws DomainError for a zero vector.
Point make_unit(std::vector<double> coords);
Point make_spd(const linalg::Matrix& m);

/// Checks the point against the space's invariants; throws DomainError.
void validate_point(const SpaceDescriptor& space, const Point& u);

/// Flat coordinates as used by the CSV form (SPD: row-major lower triangle).
std::vector<double> flatten(const SpaceDescriptor& space, const Point& u);
Point unflatten(const SpaceDescriptor& space, std::span<const double> flat);

double distance(const SpaceDescriptor& space, const Point& u, const Point& v);

class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t n) : n_(n), d_(n * n, 0.0) {}

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return d_[i * n_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return d_[i * n_ + j]; }
  std::span<const double> row(std::size_t i) const { return {d_.data() + i * n_, n_}; }
  const std::vector<double>& data() const noexcept { return d_; }

  friend bool operator==(const DistanceMatrix&, const DistanceMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> d_;
};

/// All pairwise distances; validates every point first. Rows are split
/// across `threads` workers, the result does not depend on the split.
DistanceMatrix pairwise_distances(const SpaceDescriptor& space, std::span<const Point> points,
                                  unsigned threads = 1);

/// Description of a distance-preserving transform.
///   Euclidean / sphere: new_coords[i] = coords[permutation[i]], then the
///     listed axes are negated.
///   SPD: congruence by the permutation matrix (rows and columns permuted
///     together); sign flips are not supported.
///   Gaussian1d: sign_flips = {0} reflects the mean.
///   BHV T^3: permutation of the branch labels (0-based, length 3).
///   Product: one IsometrySpec per component.
struct IsometrySpec {
  std::vector<std::size_t> permutation;
  std::vector<std::size_t> sign_flips;
  std::vector<IsometrySpec> components;
};

class Isometry {
 public:
  Isometry(SpaceDescriptor space, IsometrySpec spec);
  Point operator()(const Point& u) const;
  std::vector<Point> operator()(std::span<const Point> points) const;

 private:
  SpaceDescriptor space_;
  IsometrySpec spec_;
};

/// Validates that `spec` is an exact isometry of `space`; throws DomainError
/// for unsupported transforms.
Isometry exact_isometry(const SpaceDescriptor& space, IsometrySpec spec);

}  // namespace metricq

#endif  // METRICQ_METRIC_SPACE_HPP
