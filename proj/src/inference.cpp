#include "metricq/inference.hpp"

#include <algorithm>
#include <cmath>

#include "metricq/quantiles.hpp"

namespace metricq {

ScoreFunction ScoreFunction::spearman() {
  return ScoreFunction("spearman", [](double u) { return u; });
}

ScoreFunction ScoreFunction::tabulated(std::vector<std::pair<double, double>> knots) {
  if (knots.empty()) throw DomainError("tabulated score needs at least one knot");
  std::sort(knots.begin(), knots.end());
  for (const auto& [u, v] : knots)
    if (!std::isfinite(u) || !std::isfinite(v)) throw DomainError("tabulated score: non-finite knot");
  return ScoreFunction("tabulated", [k = std::move(knots)](double u) {
    if (u <= k.front().first) return k.front().second;
    if (u >= k.back().first) return k.back().second;
    const auto hi = std::upper_bound(k.begin(), k.end(), u,
                                     [](double x, const auto& knot) { return x < knot.first; });
    const auto lo = hi - 1;
    const double w = (u - lo->first) / (hi->first - lo->first);
    return lo->second + w * (hi->second - lo->second);
  });
}

void require_permutation(std::span<const std::size_t> ranks) {
  const std::size_t n = ranks.size();
  std::vector<bool> seen(n + 1, false);
  for (std::size_t r : ranks) {
    if (r < 1 || r > n || seen[r]) throw DomainError("rank vector is not a permutation of 1..n");
    seen[r] = true;
  }
}

double linear_rank_statistic(std::span<const std::size_t> rx, std::span<const std::size_t> ry,
                             const ScoreFunction& phi1, const ScoreFunction& phi2) {
  if (rx.size() != ry.size()) throw DomainError("rank vectors differ in length");
  require_permutation(rx);
  require_permutation(ry);
  const double n1 = static_cast<double>(rx.size()) + 1.0;
  double t = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i)
    t += phi1(static_cast<double>(rx[i]) / n1) * phi2(static_cast<double>(ry[i]) / n1);
  return t;
}

NullMoments null_moments(const ScoreFunction& phi1, const ScoreFunction& phi2, std::size_t n) {
  if (n < 2) throw DomainError("null moments need n >= 2");
  const double n1 = static_cast<double>(n) + 1.0;
  std::vector<double> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = phi1(static_cast<double>(i + 1) / n1);
    b[i] = phi2(static_cast<double>(i + 1) / n1);
  }
  const double nd = static_cast<double>(n);
  double abar = 0.0, bbar = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    abar += a[i];
    bbar += b[i];
  }
  abar /= nd;
  bbar /= nd;
  double saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    saa += (a[i] - abar) * (a[i] - abar);
    sbb += (b[i] - bbar) * (b[i] - bbar);
  }
  return {nd * abar * bbar, saa * sbb / (nd - 1.0)};
}

double standardized_statistic(double t, const NullMoments& moments) {
  if (!(moments.variance > 0.0))
    throw DomainError("standardized statistic needs a positive null variance");
  return (t - moments.mean) / std::sqrt(moments.variance);
}

double spearman_statistic(std::span<const std::size_t> rx, std::span<const std::size_t> ry) {
  if (rx.size() != ry.size()) throw DomainError("rank vectors differ in length");
  require_permutation(rx);
  require_permutation(ry);
  const double n = static_cast<double>(rx.size());
  if (n < 2) throw DomainError("spearman statistic needs n >= 2");
  double s = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i)
    s += static_cast<double>(rx[i]) * static_cast<double>(ry[i]);
  const double root = std::sqrt(n - 1.0);
  return 12.0 / (n * (n + 1.0) * root) * s - 3.0 * (n + 1.0) / root;
}

double normal_p_value(double w, Alternative alternative) {
  switch (alternative) {
    case Alternative::kTwoSided: return std::erfc(std::abs(w) / std::sqrt(2.0));
    case Alternative::kGreater: return 0.5 * std::erfc(w / std::sqrt(2.0));
    case Alternative::kLess: return 0.5 * std::erfc(-w / std::sqrt(2.0));
  }
  return 1.0;
}

TestReport rank_independence_test(std::span<const std::size_t> rx,
                                  std::span<const std::size_t> ry, const ScoreFunction& phi1,
                                  const ScoreFunction& phi2, double alpha,
                                  Alternative alternative) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  if (rx.size() != ry.size()) throw DomainError("samples differ in size");
  if (rx.size() < 2) throw DomainError("independence test needs n >= 2");
  TestReport rep;
  const double t = linear_rank_statistic(rx, ry, phi1, phi2);
  rep.statistic = standardized_statistic(t, null_moments(phi1, phi2, rx.size()));
  rep.p_value = normal_p_value(rep.statistic, alternative);
  rep.reject = rep.p_value < alpha;
  rep.alpha = alpha;
  rep.n = rx.size();
  rep.score_x = phi1.id();
  rep.score_y = phi2.id();
  rep.alternative = alternative;
  return rep;
}

TestReport independence_test(const SpaceDescriptor& space_x, std::span<const Point> xs,
                             const SpaceDescriptor& space_y, std::span<const Point> ys,
                             const ScoreFunction& phi1, const ScoreFunction& phi2, double alpha,
                             Alternative alternative, unsigned threads) {
  if (xs.size() != ys.size()) throw DomainError("samples differ in size");
  if (xs.size() < 2) throw DomainError("independence test needs n >= 2");
  const QuantileEngine ex(space_x, {xs.begin(), xs.end()}, threads);
  const QuantileEngine ey(space_y, {ys.begin(), ys.end()}, threads);
  return rank_independence_test(ex.global_ranks(), ey.global_ranks(), phi1, phi2, alpha,
                                alternative);
}

std::string to_string(Alternative a) {
  switch (a) {
    case Alternative::kTwoSided: return "two-sided";
    case Alternative::kGreater: return "greater";
    case Alternative::kLess: return "less";
  }
  return "two-sided";
}

}  // namespace metricq
