#include "metricq/emdf.hpp"

#include <algorithm>
#include <utility>

#include "metricq/parallel.hpp"

namespace metricq {

std::vector<std::uint64_t> RankMatrix::column_sums() const {
  std::vector<std::uint64_t> sums(n_, 0);
  for (std::size_t i = 0; i < n_; ++i) {
    const std::uint32_t* row = r_.data() + i * n_;
    for (std::size_t j = 0; j < n_; ++j) sums[j] += row[j];
  }
  return sums;
}

RankMatrix rank_matrix(const DistanceMatrix& d, unsigned threads) {
  const std::size_t n = d.size();
  RankMatrix r(n);
  parallel_for(n, threads, [&](std::size_t i) {
    std::vector<std::pair<double, std::uint32_t>> row(n);
    const auto di = d.row(i);
    for (std::size_t j = 0; j < n; ++j) row[j] = {di[j], static_cast<std::uint32_t>(j)};
    std::sort(row.begin(), row.end());
    // Each tie group [start, end) gets rank `end`: the count of entries <= it.
    std::size_t start = 0;
    while (start < n) {
      std::size_t end = start + 1;
      while (end < n && row[end].first == row[start].first) ++end;
      for (std::size_t k = start; k < end; ++k)
        r(i, row[k].second) = static_cast<std::uint32_t>(end);
      start = end;
    }
  });
  return r;
}

EmdfMatrix emdf_matrix(const SpaceDescriptor& space, std::span<const Point> points,
                       unsigned threads) {
  return EmdfMatrix(rank_matrix(pairwise_distances(space, points, threads), threads));
}

double emdf_at(const SpaceDescriptor& space, std::span<const Point> points, const Point& u,
               const Point& v) {
  if (points.empty()) throw DomainError("emdf_at: empty sample");
  validate_point(space, u);
  validate_point(space, v);
  const double radius = distance(space, u, v);
  std::size_t inside = 0;
  for (const auto& x : points)
    if (distance(space, u, x) <= radius) ++inside;
  return static_cast<double>(inside) / static_cast<double>(points.size());
}

EmdfMatrix emdf_naive(const SpaceDescriptor& space, std::span<const Point> points) {
  const std::size_t n = points.size();
  if (n == 0) throw DomainError("emdf_naive: empty sample");
  for (const auto& p : points) validate_point(space, p);
  RankMatrix r(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double radius = distance(space, points[i], points[j]);
      std::uint32_t count = 0;
      for (std::size_t k = 0; k < n; ++k)
        if (distance(space, points[i], points[k]) <= radius) ++count;
      r(i, j) = count;
    }
  return EmdfMatrix(std::move(r));
}

}  // namespace metricq
