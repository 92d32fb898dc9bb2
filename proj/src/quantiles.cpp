#include "metricq/quantiles.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>

#include "metricq/parallel.hpp"

namespace metricq {

std::vector<double> JVector::values() const {
  std::vector<double> v(sums_.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = (*this)[i];
  return v;
}

std::vector<int> signs_from_ranks(std::span<const std::size_t> ranks) {
  const auto n1 = static_cast<long long>(ranks.size()) + 1;
  std::vector<int> s(ranks.size());
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    const long long twice = 2 * static_cast<long long>(ranks[i]);
    s[i] = twice > n1 ? 1 : (twice < n1 ? -1 : 0);
  }
  return s;
}

namespace {

void check_tau(double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw DomainError("quantile level must lie in [0, 1]");
}

// Smallest r in 1..n with r / n >= tau.
std::size_t first_rank_reaching(double tau, std::size_t n) {
  const double nd = static_cast<double>(n);
  auto r = static_cast<std::size_t>(std::max(1.0, std::ceil(tau * nd)));
  r = std::min(r, n);
  while (r > 1 && static_cast<double>(r - 1) / nd >= tau) --r;
  while (r < n && static_cast<double>(r) / nd < tau) ++r;
  return r;
}

}  // namespace

struct QuantileEngine::LazyRows {
  std::once_flag once;
  std::vector<double> rows;
};

QuantileEngine::QuantileEngine(SpaceDescriptor space, std::vector<Point> points, unsigned threads)
    : space_(std::move(space)),
      points_(std::move(points)),
      distances_(pairwise_distances(space_, points_, threads)),
      ranks_(rank_matrix(distances_, threads)),
      j_(ranks_.column_sums(), points_.size()),
      lazy_(std::make_shared<LazyRows>()) {
  const std::size_t n = points_.size();
  total_distance_.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (double v : distances_.row(j)) s += v;
    total_distance_[j] = s;
  }
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
    if (j_.rank_sum(a) != j_.rank_sum(b)) return j_.rank_sum(a) < j_.rank_sum(b);
    if (total_distance_[a] != total_distance_[b]) return total_distance_[a] < total_distance_[b];
    return a < b;
  });
  global_rank_.resize(n);
  for (std::size_t pos = 0; pos < n; ++pos) global_rank_[order_[pos]] = pos + 1;
}

std::vector<int> QuantileEngine::global_signs() const { return signs_from_ranks(global_rank_); }

double QuantileEngine::global_level(std::size_t i) const {
  return static_cast<double>(global_rank_.at(i)) / static_cast<double>(size());
}

QuantileResult QuantileEngine::global_quantile(double tau) const {
  check_tau(tau);
  const std::size_t r = first_rank_reaching(tau, size());
  const std::size_t idx = order_[r - 1];
  return {idx, points_[idx], static_cast<double>(r) / static_cast<double>(size())};
}

QuantileResult QuantileEngine::metric_median() const { return global_quantile(0.0); }

const std::vector<double>& QuantileEngine::sorted_rows() const {
  std::call_once(lazy_->once, [this] {
    const std::size_t n = size();
    lazy_->rows = distances_.data();
    for (std::size_t i = 0; i < n; ++i)
      std::sort(lazy_->rows.begin() + static_cast<std::ptrdiff_t>(i * n),
                lazy_->rows.begin() + static_cast<std::ptrdiff_t>((i + 1) * n));
  });
  return lazy_->rows;
}

QuantileEngine::Query QuantileEngine::query(const Point& u) const {
  validate_point(space_, u);
  const std::size_t n = size();
  const auto& rows = sorted_rows();
  Query q{0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    const double r = distance(space_, points_[i], u);
    const auto begin = rows.begin() + static_cast<std::ptrdiff_t>(i * n);
    q.rank_sum += static_cast<std::uint64_t>(std::upper_bound(begin, begin + static_cast<std::ptrdiff_t>(n), r) - begin);
    q.total_distance += r;
  }
  return q;
}

double QuantileEngine::j_at(const Point& u) const {
  const double n = static_cast<double>(size());
  return static_cast<double>(query(u).rank_sum) / (n * n);
}

double QuantileEngine::level_at(const Point& u) const {
  const Query q = query(u);
  std::size_t count = 0;
  for (std::size_t k = 0; k < size(); ++k) {
    const std::uint64_t s = j_.rank_sum(k);
    if (s < q.rank_sum || (s == q.rank_sum && total_distance_[k] <= q.total_distance)) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(size());
}

double QuantileEngine::depth(const Point& u) const { return 1.0 - level_at(u); }

double QuantileEngine::breakdown_lower_bound() const {
  const double jm = j_[order_.front()];
  return (1.0 - jm) / (2.0 - jm);
}

bool QuantileEngine::j_is_degenerate() const {
  const auto& s = j_.rank_sums();
  const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
  const double n = static_cast<double>(size());
  return (static_cast<double>(*hi) - static_cast<double>(*lo)) / (n * n) < 1e-12;
}

namespace {

std::vector<double> distances_from(const SpaceDescriptor& space, std::span<const Point> points,
                                   const Point& u) {
  if (points.empty()) throw DomainError("empty sample");
  validate_point(space, u);
  std::vector<double> d(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    validate_point(space, points[i]);
    d[i] = distance(space, u, points[i]);
  }
  return d;
}

std::vector<std::size_t> count_ranks(const std::vector<double>& d) {
  std::vector<double> sorted = d;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> r(d.size());
  for (std::size_t j = 0; j < d.size(); ++j)
    r[j] = static_cast<std::size_t>(std::upper_bound(sorted.begin(), sorted.end(), d[j]) -
                                    sorted.begin());
  return r;
}

std::vector<Point> copy_points(std::span<const Point> points) {
  return {points.begin(), points.end()};
}

}  // namespace

QuantileResult local_quantile(const SpaceDescriptor& space, std::span<const Point> points,
                              const Point& u, double tau) {
  check_tau(tau);
  const auto ranks = count_ranks(distances_from(space, points, u));
  const double n = static_cast<double>(points.size());
  if (tau < 1.0 / n) return {std::nullopt, u, 0.0};
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (static_cast<double>(ranks[i]) / n < tau) continue;
    if (!best || ranks[i] < ranks[*best]) best = i;
  }
  return {best, points[*best], static_cast<double>(ranks[*best]) / n};
}

std::vector<std::size_t> local_ranks(const SpaceDescriptor& space, std::span<const Point> points,
                                     const Point& u) {
  return count_ranks(distances_from(space, points, u));
}

std::vector<int> local_signs(const SpaceDescriptor& space, std::span<const Point> points,
                             const Point& u) {
  return signs_from_ranks(local_ranks(space, points, u));
}

JVector j_values(const SpaceDescriptor& space, std::span<const Point> points) {
  const auto ranks = rank_matrix(pairwise_distances(space, points));
  return JVector(ranks.column_sums(), points.size());
}

double j_at(const SpaceDescriptor& space, std::span<const Point> points, const Point& u) {
  return QuantileEngine(space, copy_points(points)).j_at(u);
}

QuantileResult global_quantile(const SpaceDescriptor& space, std::span<const Point> points,
                               double tau) {
  check_tau(tau);
  return QuantileEngine(space, copy_points(points)).global_quantile(tau);
}

std::vector<std::size_t> global_ranks(const SpaceDescriptor& space,
                                      std::span<const Point> points) {
  return QuantileEngine(space, copy_points(points)).global_ranks();
}

std::vector<int> global_signs(const SpaceDescriptor& space, std::span<const Point> points) {
  return QuantileEngine(space, copy_points(points)).global_signs();
}

QuantileResult metric_median(const SpaceDescriptor& space, std::span<const Point> points) {
  return QuantileEngine(space, copy_points(points)).metric_median();
}

double empirical_depth(const SpaceDescriptor& space, std::span<const Point> points,
                       const Point& u) {
  return QuantileEngine(space, copy_points(points)).depth(u);
}

double breakdown_lower_bound(const SpaceDescriptor& space, std::span<const Point> points) {
  return QuantileEngine(space, copy_points(points)).breakdown_lower_bound();
}

}  // namespace metricq

namespace metricq {

ReferenceLevels reference_levels(const SpaceDescriptor& space, std::span<const Point> reference,
                                 std::span<const Point> queries, unsigned threads) {
  const std::size_t n = reference.size();
  const std::size_t g = queries.size();
  if (n == 0) throw DomainError("empty reference sample");
  for (const auto& p : reference) validate_point(space, p);
  for (const auto& q : queries) validate_point(space, q);

  // Integer counts are order-free, so per-worker partial sums combine
  // exactly; the floating total distances are each summed over one row in
  // index order, independent of the split.
  const unsigned workers = std::max(1u, threads);
  std::vector<std::vector<std::uint64_t>> col_part(workers, std::vector<std::uint64_t>(n, 0));
  std::vector<std::vector<std::uint64_t>> query_part(workers, std::vector<std::uint64_t>(g, 0));
  std::vector<double> total(n, 0.0);
  parallel_for(workers, workers, [&](std::size_t w) {
    std::vector<double> row(n);
    std::vector<double> sorted(n);
    for (std::size_t i = w; i < n; i += workers) {
      for (std::size_t k = 0; k < n; ++k)
        row[k] = k == i ? 0.0 : distance(space, reference[i], reference[k]);
      double s = 0.0;
      for (double v : row) s += v;
      total[i] = s;
      sorted = row;
      std::sort(sorted.begin(), sorted.end());
      for (std::size_t k = 0; k < n; ++k)
        col_part[w][k] += static_cast<std::uint64_t>(
            std::upper_bound(sorted.begin(), sorted.end(), row[k]) - sorted.begin());
      for (std::size_t q = 0; q < g; ++q) {
        const double r = distance(space, reference[i], queries[q]);
        query_part[w][q] += static_cast<std::uint64_t>(
            std::upper_bound(sorted.begin(), sorted.end(), r) - sorted.begin());
      }
    }
  });
  std::vector<std::uint64_t> col(n, 0);
  std::vector<std::uint64_t> qsum(g, 0);
  for (unsigned w = 0; w < workers; ++w) {
    for (std::size_t k = 0; k < n; ++k) col[k] += col_part[w][k];
    for (std::size_t q = 0; q < g; ++q) qsum[q] += query_part[w][q];
  }
  std::vector<double> qtotal(g, 0.0);
  parallel_for(g, threads, [&](std::size_t q) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += distance(space, reference[i], queries[q]);
    qtotal[q] = s;
  });

  ReferenceLevels out;
  out.j.resize(g);
  out.level.resize(g);
  out.depth.resize(g);
  const double nd = static_cast<double>(n);
  for (std::size_t q = 0; q < g; ++q) {
    std::size_t count = 0;
    for (std::size_t k = 0; k < n; ++k)
      if (col[k] < qsum[q] || (col[k] == qsum[q] && total[k] <= qtotal[q])) ++count;
    out.j[q] = static_cast<double>(qsum[q]) / (nd * nd);
    out.level[q] = static_cast<double>(count) / nd;
    out.depth[q] = 1.0 - out.level[q];
  }
  return out;
}

}  // namespace metricq
