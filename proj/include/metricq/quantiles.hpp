#ifndef METRICQ_QUANTILES_HPP
#define METRICQ_QUANTILES_HPP

// Local and global empirical metric quantiles, ranks and signs; the
// empirical metric median, metric depth and the breakdown-point lower bound.
//
// Global ordering. J_n(X_j) = n^{-2} sum_i r_ij is the average EMDF level of
// X_j seen from every sample point; small J means central. J_n is a ratio of
// integers and ties occur with positive probability, so the sample is
// ordered by the key (J_n, total distance sum_k d_jk, index). The secondary
// key is a symmetric function of the sample, which keeps global ranks
// exchangeable (hence exactly uniform over permutations for continuous
// data) and isometry invariant; the index only separates exact duplicates.
// Global ranks are positions in that order and the global level of X_j is
// rank_j / n.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "metricq/emdf.hpp"
#include "metricq/metric_space.hpp"

namespace metricq {

struct QuantileResult {
  std::optional<std::size_t> index;  // empty when the anchor itself is returned
  Point point;
  double achieved_level = 0.0;
};

/// J_n(X_1..X_n) kept as exact column sums of the rank matrix.
class JVector {
 public:
  JVector() = default;
  JVector(std::vector<std::uint64_t> rank_sums, std::size_t n)
      : sums_(std::move(rank_sums)), n_(n) {}

  std::size_t size() const noexcept { return sums_.size(); }
  double operator[](std::size_t i) const {
    return static_cast<double>(sums_[i]) / (static_cast<double>(n_) * static_cast<double>(n_));
  }
  std::uint64_t rank_sum(std::size_t i) const { return sums_[i]; }
  const std::vector<std::uint64_t>& rank_sums() const noexcept { return sums_; }
  std::vector<double> values() const;

 private:
  std::vector<std::uint64_t> sums_;
  std::size_t n_ = 0;
};

/// sign(R / (n + 1) - 1/2) for each rank, computed exactly.
std::vector<int> signs_from_ranks(std::span<const std::size_t> ranks);

/// Caches the distance matrix, rank matrix and global ordering of a sample.
/// Read-only after construction; const member functions may be called from
/// several threads.
class QuantileEngine {
 public:
  QuantileEngine(SpaceDescriptor space, std::vector<Point> points, unsigned threads = 1);

  const SpaceDescriptor& space() const noexcept { return space_; }
  const std::vector<Point>& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  const DistanceMatrix& distances() const noexcept { return distances_; }
  const RankMatrix& ranks() const noexcept { return ranks_; }
  const JVector& j_values() const noexcept { return j_; }
  const std::vector<double>& total_distances() const noexcept { return total_distance_; }

  /// Sample indices from most central to most outlying.
  const std::vector<std::size_t>& global_order() const noexcept { return order_; }
  /// 1-based global ranks; always a permutation of 1..n.
  const std::vector<std::size_t>& global_ranks() const noexcept { return global_rank_; }
  std::vector<int> global_signs() const;
  double global_level(std::size_t i) const;

  QuantileResult global_quantile(double tau) const;
  QuantileResult metric_median() const;

  /// J_n at an arbitrary point: n^{-1} sum_i F_n(X_i, u).
  double j_at(const Point& u) const;
  /// Fraction of sample points whose (J_n, total distance) key is <= that of u.
  double level_at(const Point& u) const;
  /// 1 - level_at(u)
  double depth(const Point& u) const;

  double breakdown_lower_bound() const;

  /// True when J_n is numerically constant (max - min < 1e-12); the global
  /// ordering then carries no information.
  bool j_is_degenerate() const;

 private:
  struct Query {
    std::uint64_t rank_sum;
    double total_distance;
  };
  Query query(const Point& u) const;
  const std::vector<double>& sorted_rows() const;

  SpaceDescriptor space_;
  std::vector<Point> points_;
  DistanceMatrix distances_;
  RankMatrix ranks_;
  JVector j_;
  std::vector<double> total_distance_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> global_rank_;

  struct LazyRows;
  std::shared_ptr<LazyRows> lazy_;
};

QuantileResult local_quantile(const SpaceDescriptor& space, std::span<const Point> points,
                              const Point& u, double tau);
/// R_j = #{i : d(u, X_i) <= d(u, X_j)}
std::vector<std::size_t> local_ranks(const SpaceDescriptor& space, std::span<const Point> points,
                                     const Point& u);
std::vector<int> local_signs(const SpaceDescriptor& space, std::span<const Point> points,
                             const Point& u);

JVector j_values(const SpaceDescriptor& space, std::span<const Point> points);
double j_at(const SpaceDescriptor& space, std::span<const Point> points, const Point& u);
QuantileResult global_quantile(const SpaceDescriptor& space, std::span<const Point> points,
                               double tau);
std::vector<std::size_t> global_ranks(const SpaceDescriptor& space, std::span<const Point> points);
std::vector<int> global_signs(const SpaceDescriptor& space, std::span<const Point> points);
QuantileResult metric_median(const SpaceDescriptor& space, std::span<const Point> points);
double empirical_depth(const SpaceDescriptor& space, std::span<const Point> points,
                       const Point& u);
/// (1 - J_n(median)) / (2 - J_n(median))
double breakdown_lower_bound(const SpaceDescriptor& space, std::span<const Point> points);

struct ReferenceLevels {
  std::vector<double> j;
  std::vector<double> level;
  std::vector<double> depth;
};

/// j_at, level_at and depth of each query against a reference sample, as a
/// QuantileEngine on `reference` would report them, but streaming one
/// distance row at a time so memory stays linear in the reference size.
ReferenceLevels reference_levels(const SpaceDescriptor& space, std::span<const Point> reference,
                                 std::span<const Point> queries, unsigned threads = 1);

}  // namespace metricq

#endif  // METRICQ_QUANTILES_HPP
