#ifndef METRICQ_SAMPLERS_HPP
#define METRICQ_SAMPLERS_HPP

// Seeded generators for the simulation families. A sample of size n with
// seed s draws points one at a time from the stream Philox4x32(s, 0), so a
// given (family, parameters, seed) always produces the same sequence.

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "metricq/linalg.hpp"
#include "metricq/metric_space.hpp"
#include "metricq/random.hpp"

namespace metricq {

struct GaussianFamily {
  std::vector<double> mean;
  linalg::Matrix covariance;
};

struct GaussianMixtureFamily {
  std::vector<double> weights;
  std::vector<std::vector<double>> means;
  std::vector<linalg::Matrix> covariances;
};

/// Azzalini-Capitanio skew-t: location xi, scale matrix Sigma, shape alpha,
/// degrees of freedom nu.
struct SkewTFamily {
  std::vector<double> xi;
  linalg::Matrix sigma;
  std::vector<double> alpha;
  double nu = 6.0;
};

/// Independent standard Cauchy coordinates.
struct CauchyFamily {
  std::size_t dim = 3;
};

/// von Mises-Fisher on S^{p-1}.
struct VmfFamily {
  std::vector<double> mu;
  double kappa = 1.0;
};

/// weight * vMF(mu1, kappa1) + (1 - weight) * vMF(mu2, kappa2)
struct VmfMixtureFamily {
  double weight = 0.3;
  std::vector<double> mu1;
  double kappa1 = 50.0;
  std::vector<double> mu2;
  double kappa2 = 50.0;
};

/// V mu + sqrt(1 - V^2) Gamma_mu U with V = 2 Beta(a, b) - 1 and
/// U ~ vMF(omega, kappa) on S^{p-2}. Gamma_mu completes mu to an orthonormal
/// basis by Gram-Schmidt over the standard basis vectors in order.
struct TangentVmfFamily {
  std::vector<double> mu;
  std::vector<double> omega;
  double kappa = 10.0;
  double beta_a = 2.0;
  double beta_b = 8.0;
};

struct WishartFamily {
  double dof = 3.0;
  linalg::Matrix scale;
};

/// 2x2 SPD matrices ((x, y), (y, z)) with x, y, z i.i.d. log-normal;
/// draws with xz <= y^2 + 1e-12 are rejected and redrawn.
struct SpdLogNormalFamily {
  double meanlog = 0.0;
  double sdlog = 1.0;
};

/// N(0, sigma^2) with sigma ~ U(0, 1) or Beta(a, b).
struct WassersteinGaussianFamily {
  enum class Law { kUniform, kBeta };
  Law law = Law::kUniform;
  double a = 2.0;
  double b = 5.0;
};

/// Branch drawn with the given probabilities, length ~ Beta(a, b).
struct BhvFamily {
  std::vector<double> branch_probs{0.1, 0.8, 0.1};
  double beta_a = 2.0;
  double beta_b = 2.0;
};

using SamplerSpec =
    std::variant<GaussianFamily, GaussianMixtureFamily, SkewTFamily, CauchyFamily, VmfFamily,
                 VmfMixtureFamily, TangentVmfFamily, WishartFamily, SpdLogNormalFamily,
                 WassersteinGaussianFamily, BhvFamily>;

std::string family_name(const SamplerSpec& spec);

/// The metric space the family's draws live in.
SpaceDescriptor space_of(const SamplerSpec& spec);

struct SamplingStats {
  std::uint64_t attempts = 0;
  std::uint64_t accepted = 0;
  double acceptance_rate() const {
    return attempts == 0 ? 1.0 : static_cast<double>(accepted) / static_cast<double>(attempts);
  }
};

/// Validated family with precomputed factorizations.
class Sampler {
 public:
  explicit Sampler(SamplerSpec spec);

  const SamplerSpec& spec() const noexcept { return spec_; }
  const SpaceDescriptor& space() const noexcept { return space_; }

  Point draw(Philox4x32& rng, SamplingStats* stats = nullptr) const;
  std::vector<Point> sample(std::size_t n, std::uint64_t seed,
                            SamplingStats* stats = nullptr) const;

 private:
  SamplerSpec spec_;
  SpaceDescriptor space_;
  std::vector<linalg::Matrix> factors_;  // Cholesky factors / bases per family
  std::vector<double> aux_;              // family-specific constants
};

std::vector<Point> sample(const SamplerSpec& spec, std::size_t n, std::uint64_t seed,
                          SamplingStats* stats = nullptr);

std::vector<Point> sample_gaussian(std::size_t dim, const std::vector<double>& mean,
                                   const linalg::Matrix& covariance, std::size_t n,
                                   std::uint64_t seed);
std::vector<Point> sample_skew_t(const std::vector<double>& xi, const linalg::Matrix& sigma,
                                 const std::vector<double>& alpha, double nu, std::size_t n,
                                 std::uint64_t seed);
std::vector<Point> sample_vmf(const std::vector<double>& mu, double kappa, std::size_t n,
                              std::uint64_t seed);
std::vector<Point> sample_vmf_mixture(const VmfMixtureFamily& family, std::size_t n,
                                      std::uint64_t seed);
std::vector<Point> sample_tangent_vmf(const TangentVmfFamily& family, std::size_t n,
                                      std::uint64_t seed);
std::vector<Point> sample_wishart(double dof, const linalg::Matrix& scale, std::size_t n,
                                  std::uint64_t seed);
std::vector<Point> sample_spd_lognormal(const SpdLogNormalFamily& family, std::size_t n,
                                        std::uint64_t seed, SamplingStats* stats = nullptr);
std::vector<Point> sample_wasserstein_gaussian(WassersteinGaussianFamily::Law law, std::size_t n,
                                               std::uint64_t seed);
std::vector<Point> sample_bhv_tree(const BhvFamily& family, std::size_t n, std::uint64_t seed);
std::vector<Point> sample_multivariate_cauchy(std::size_t dim, std::size_t n, std::uint64_t seed);

struct ContaminatedSample {
  std::vector<Point> points;
  std::vector<bool> from_contamination;  // true where the draw came from the second family
};

/// Each draw independently comes from `contamination` with probability alpha,
/// else from `base`. Base draws use the stream of derive_seed(seed, 1),
/// contamination draws derive_seed(seed, 2), the selector derive_seed(seed, 0);
/// alpha = 0 therefore reproduces sample(base, n, derive_seed(seed, 1)).
ContaminatedSample contaminate(const SamplerSpec& base, const SamplerSpec& contamination,
                               double alpha, std::size_t n, std::uint64_t seed);

/// Orthonormal basis of the complement of the unit vector mu, as the
/// columns of a p x (p-1) matrix stored in the first p-1 columns of a p x p
/// Matrix.
linalg::Matrix orthonormal_complement(const std::vector<double>& mu);

namespace presets {

SamplerSpec gaussian_r2();
SamplerSpec gaussian_mixture_r2();
SamplerSpec skew_t6_r2();
SamplerSpec vmf_s2();
SamplerSpec tangent_vmf_s2();
SamplerSpec vmf_mixture_s2();
SamplerSpec wishart_spd3();
SamplerSpec spd_lognormal();
SamplerSpec wasserstein_uniform();
SamplerSpec wasserstein_beta();
SamplerSpec bhv_beta();

/// 3x3 scale with entries 0.6^|i-j|.
linalg::Matrix toeplitz_scale3();

}  // namespace presets

}  // namespace metricq

#endif  // METRICQ_SAMPLERS_HPP
