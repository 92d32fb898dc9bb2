#ifndef METRICQ_INFERENCE_HPP
#define METRICQ_INFERENCE_HPP

// Rank-based independence tests built on global metric ranks.
//
//   T = sum_i phi1(Rx_i / (n+1)) phi2(Ry_i / (n+1))
//   W = (T - E T) / sqrt(Var T)
//
// with E and Var taken over independent uniform rank permutations. Writing
// a_i = phi1(i/(n+1)), b_i = phi2(i/(n+1)):
//   E T   = n * mean(a) * mean(b)
//   Var T = sum (a_i - mean a)^2 * sum (b_i - mean b)^2 / (n - 1)

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "metricq/metric_space.hpp"

namespace metricq {

class ScoreFunction {
 public:
  ScoreFunction(std::string id, std::function<double(double)> fn)
      : id_(std::move(id)), fn_(std::move(fn)) {}

  /// phi(u) = u
  static ScoreFunction spearman();
  /// Piecewise-linear interpolation through (u, phi(u)) knots sorted by u;
  /// constant extrapolation outside the knot range.
  static ScoreFunction tabulated(std::vector<std::pair<double, double>> knots);

  const std::string& id() const noexcept { return id_; }
  double operator()(double u) const { return fn_(u); }

 private:
  std::string id_;
  std::function<double(double)> fn_;
};

struct NullMoments {
  double mean = 0.0;
  double variance = 0.0;
};

enum class Alternative { kTwoSided, kGreater, kLess };

struct TestReport {
  double statistic = 0.0;  // W
  double p_value = 1.0;
  bool reject = false;
  double alpha = 0.05;
  std::size_t n = 0;
  std::string score_x;
  std::string score_y;
  Alternative alternative = Alternative::kTwoSided;
};

/// Throws DomainError unless `ranks` is a permutation of 1..n.
void require_permutation(std::span<const std::size_t> ranks);

double linear_rank_statistic(std::span<const std::size_t> rx, std::span<const std::size_t> ry,
                             const ScoreFunction& phi1, const ScoreFunction& phi2);

NullMoments null_moments(const ScoreFunction& phi1, const ScoreFunction& phi2, std::size_t n);

double standardized_statistic(double t, const NullMoments& moments);

/// Closed form of W for identity scores.
double spearman_statistic(std::span<const std::size_t> rx, std::span<const std::size_t> ry);

/// Standard normal p-value for W.
double normal_p_value(double w, Alternative alternative);

/// The test on precomputed rank vectors.
TestReport rank_independence_test(std::span<const std::size_t> rx,
                                  std::span<const std::size_t> ry, const ScoreFunction& phi1,
                                  const ScoreFunction& phi2, double alpha,
                                  Alternative alternative = Alternative::kTwoSided);

/// Global metric ranks of each sample, then the linear rank test.
TestReport independence_test(const SpaceDescriptor& space_x, std::span<const Point> xs,
                             const SpaceDescriptor& space_y, std::span<const Point> ys,
                             const ScoreFunction& phi1, const ScoreFunction& phi2, double alpha,
                             Alternative alternative = Alternative::kTwoSided,
                             unsigned threads = 1);

std::string to_string(Alternative a);

}  // namespace metricq

#endif  // METRICQ_INFERENCE_HPP
