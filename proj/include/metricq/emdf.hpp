#ifndef METRICQ_EMDF_HPP
#define METRICQ_EMDF_HPP

// Empirical metric distribution function.
//
// For a sample X_1..X_n the EMDF at (u, v) is the fraction of the sample in
// the closed ball centered at u with radius d(u, v). On sample pairs it is
// F_ij = r_ij / n where r_ij = #{k : d_ik <= d_ij}, i.e. the rank of d_ij in
// row i of the distance matrix with ties sharing the largest rank of their
// group. Ranks are kept as integers; F is derived on access.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "metricq/metric_space.hpp"

namespace metricq {

class RankMatrix {
 public:
  RankMatrix() = default;
  explicit RankMatrix(std::size_t n) : n_(n), r_(n * n, 0) {}

  std::size_t size() const noexcept { return n_; }
  std::uint32_t operator()(std::size_t i, std::size_t j) const { return r_[i * n_ + j]; }
  std::uint32_t& operator()(std::size_t i, std::size_t j) { return r_[i * n_ + j]; }
  std::span<const std::uint32_t> row(std::size_t i) const { return {r_.data() + i * n_, n_}; }

  /// sum_i r_ij for each column j, exact.
  std::vector<std::uint64_t> column_sums() const;

  friend bool operator==(const RankMatrix&, const RankMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint32_t> r_;
};

class EmdfMatrix {
 public:
  EmdfMatrix() = default;
  explicit EmdfMatrix(RankMatrix ranks) : ranks_(std::move(ranks)) {}

  std::size_t size() const noexcept { return ranks_.size(); }
  double operator()(std::size_t i, std::size_t j) const {
    return static_cast<double>(ranks_(i, j)) / static_cast<double>(ranks_.size());
  }
  const RankMatrix& ranks() const noexcept { return ranks_; }

  friend bool operator==(const EmdfMatrix&, const EmdfMatrix&) = default;

 private:
  RankMatrix ranks_;
};

/// Row-wise ranking by sort, O(n^2 log n) overall.
RankMatrix rank_matrix(const DistanceMatrix& d, unsigned threads = 1);

EmdfMatrix emdf_matrix(const SpaceDescriptor& space, std::span<const Point> points,
                       unsigned threads = 1);

/// n^{-1} #{i : d(u, X_i) <= d(u, v)}
double emdf_at(const SpaceDescriptor& space, std::span<const Point> points, const Point& u,
               const Point& v);

/// Direct triple loop over the definition, O(n^3). Test oracle.
EmdfMatrix emdf_naive(const SpaceDescriptor& space, std::span<const Point> points);

}  // namespace metricq

#endif  // METRICQ_EMDF_HPP
