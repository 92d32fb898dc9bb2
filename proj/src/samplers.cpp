#include "metricq/samplers.hpp"

#include <boost/random/beta_distribution.hpp>
#include <boost/random/cauchy_distribution.hpp>
#include <boost/random/chi_squared_distribution.hpp>
#include <boost/random/lognormal_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <cmath>
#include <numbers>
#include <numeric>

#include "metricq/error.hpp"

namespace metricq {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double std_normal(Philox4x32& rng) { return boost::random::normal_distribution<double>(0.0, 1.0)(rng); }

double beta(Philox4x32& rng, double a, double b) {
  return boost::random::beta_distribution<double>(a, b)(rng);
}

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

linalg::Matrix require_cholesky(const linalg::Matrix& m, const char* what) {
  auto l = linalg::cholesky(m);
  if (!l) throw DomainError(std::string(what) + " must be symmetric positive definite");
  return *l;
}

void check_unit(const std::vector<double>& mu, const char* what) {
  if (mu.size() < 2) throw DomainError(std::string(what) + " needs dimension >= 2");
  if (std::abs(norm2(mu) - 1.0) > 1e-10) throw DomainError(std::string(what) + " must be unit norm");
}

void check_gaussian(const std::vector<double>& mean, const linalg::Matrix& cov) {
  if (mean.empty()) throw DomainError("gaussian mean must be non-empty");
  if (cov.size() != mean.size()) throw DomainError("gaussian covariance dimension mismatch");
}

std::vector<double> correlated_normal(Philox4x32& rng, const std::vector<double>& mean,
                                      const linalg::Matrix& chol) {
  const std::size_t d = mean.size();
  std::vector<double> z(d);
  for (auto& v : z) v = std_normal(rng);
  std::vector<double> x(d);
  for (std::size_t i = 0; i < d; ++i) {
    double s = mean[i];
    for (std::size_t k = 0; k <= i; ++k) s += chol(i, k) * z[k];
    x[i] = s;
  }
  return x;
}

// Wood (1994): the cosine w = <x, mu> of a vMF draw on S^{p-1}.
double vmf_cosine(Philox4x32& rng, double kappa, std::size_t p) {
  const double m1 = static_cast<double>(p) - 1.0;
  if (kappa == 0.0) return 2.0 * beta(rng, m1 / 2.0, m1 / 2.0) - 1.0;
  const double b = m1 / (2.0 * kappa + std::sqrt(4.0 * kappa * kappa + m1 * m1));
  const double x0 = (1.0 - b) / (1.0 + b);
  const double c = kappa * x0 + m1 * std::log(1.0 - x0 * x0);
  for (;;) {
    const double z = beta(rng, m1 / 2.0, m1 / 2.0);
    const double w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
    const double u = uniform01(rng);
    if (kappa * w + m1 * std::log(1.0 - x0 * w) - c >= std::log(u)) return w;
  }
}

// Uniform direction on S^{m-1} in R^m.
std::vector<double> uniform_direction(Philox4x32& rng, std::size_t m) {
  for (;;) {
    std::vector<double> v(m);
    for (auto& x : v) x = std_normal(rng);
    const double r = norm2(v);
    if (r > 0.0) {
      for (auto& x : v) x /= r;
      return v;
    }
  }
}

// w mu + sqrt(1 - w^2) Gamma v, with Gamma in the first p-1 columns of `basis`.
std::vector<double> compose(const std::vector<double>& mu, const linalg::Matrix& basis, double w,
                            const std::vector<double>& v) {
  const std::size_t p = mu.size();
  const double s = std::sqrt(std::max(0.0, 1.0 - w * w));
  std::vector<double> x(p);
  for (std::size_t i = 0; i < p; ++i) {
    double t = 0.0;
    for (std::size_t k = 0; k + 1 < p; ++k) t += basis(i, k) * v[k];
    x[i] = w * mu[i] + s * t;
  }
  return x;
}

std::vector<double> vmf_draw(Philox4x32& rng, const std::vector<double>& mu, double kappa,
                             const linalg::Matrix& basis) {
  const double w = vmf_cosine(rng, kappa, mu.size());
  return compose(mu, basis, w, uniform_direction(rng, mu.size() - 1));
}

}  // namespace

linalg::Matrix orthonormal_complement(const std::vector<double>& mu) {
  const std::size_t p = mu.size();
  std::vector<std::vector<double>> basis{mu};
  for (std::size_t e = 0; e < p && basis.size() < p; ++e) {
    std::vector<double> v(p, 0.0);
    v[e] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& b : basis) {
        double dot = 0.0;
        for (std::size_t i = 0; i < p; ++i) dot += v[i] * b[i];
        for (std::size_t i = 0; i < p; ++i) v[i] -= dot * b[i];
      }
    }
    const double r = norm2(v);
    if (r < 1e-6) continue;
    for (auto& x : v) x /= r;
    basis.push_back(std::move(v));
  }
  linalg::Matrix g(p, 0.0);
  for (std::size_t k = 1; k < basis.size(); ++k)
    for (std::size_t i = 0; i < p; ++i) g(i, k - 1) = basis[k][i];
  return g;
}

std::string family_name(const SamplerSpec& spec) {
  return std::visit(Overloaded{
                        [](const GaussianFamily&) { return std::string("gaussian"); },
                        [](const GaussianMixtureFamily&) { return std::string("gaussian_mixture"); },
                        [](const SkewTFamily&) { return std::string("skew_t"); },
                        [](const CauchyFamily&) { return std::string("cauchy"); },
                        [](const VmfFamily&) { return std::string("vmf"); },
                        [](const VmfMixtureFamily&) { return std::string("vmf_mixture"); },
                        [](const TangentVmfFamily&) { return std::string("tangent_vmf"); },
                        [](const WishartFamily&) { return std::string("wishart"); },
                        [](const SpdLogNormalFamily&) { return std::string("spd_lognormal"); },
                        [](const WassersteinGaussianFamily&) {
                          return std::string("wasserstein_gaussian");
                        },
                        [](const BhvFamily&) { return std::string("bhv_tree"); },
                    },
                    spec);
}

SpaceDescriptor space_of(const SamplerSpec& spec) {
  return std::visit(
      Overloaded{
          [](const GaussianFamily& f) { return SpaceDescriptor::euclidean(f.mean.size()); },
          [](const GaussianMixtureFamily& f) {
            return SpaceDescriptor::euclidean(f.means.empty() ? 0 : f.means.front().size());
          },
          [](const SkewTFamily& f) { return SpaceDescriptor::euclidean(f.xi.size()); },
          [](const CauchyFamily& f) { return SpaceDescriptor::euclidean(f.dim); },
          [](const VmfFamily& f) { return SpaceDescriptor::sphere(f.mu.size()); },
          [](const VmfMixtureFamily& f) { return SpaceDescriptor::sphere(f.mu1.size()); },
          [](const TangentVmfFamily& f) { return SpaceDescriptor::sphere(f.mu.size()); },
          [](const WishartFamily& f) { return SpaceDescriptor::spd(f.scale.size()); },
          [](const SpdLogNormalFamily&) { return SpaceDescriptor::spd(2); },
          [](const WassersteinGaussianFamily&) { return SpaceDescriptor::gaussian1d(); },
          [](const BhvFamily&) { return SpaceDescriptor::bhv_t3(); },
      },
      spec);
}

Sampler::Sampler(SamplerSpec spec) : spec_(std::move(spec)), space_(space_of(spec_)) {
  std::visit(
      Overloaded{
          [&](const GaussianFamily& f) {
            check_gaussian(f.mean, f.covariance);
            factors_.push_back(require_cholesky(f.covariance, "gaussian covariance"));
          },
          [&](const GaussianMixtureFamily& f) {
            if (f.weights.empty() || f.weights.size() != f.means.size() ||
                f.weights.size() != f.covariances.size())
              throw DomainError("gaussian mixture needs matching weights, means, covariances");
            double total = 0.0;
            for (std::size_t c = 0; c < f.weights.size(); ++c) {
              if (!(f.weights[c] >= 0.0)) throw DomainError("mixture weights must be >= 0");
              if (f.means[c].size() != f.means.front().size())
                throw DomainError("mixture components must share a dimension");
              check_gaussian(f.means[c], f.covariances[c]);
              factors_.push_back(require_cholesky(f.covariances[c], "mixture covariance"));
              total += f.weights[c];
            }
            if (!(total > 0.0)) throw DomainError("mixture weights must not all be zero");
            double acc = 0.0;
            for (double w : f.weights) aux_.push_back(acc += w / total);
          },
          [&](const SkewTFamily& f) {
            const std::size_t d = f.xi.size();
            if (d == 0 || f.sigma.size() != d || f.alpha.size() != d)
              throw DomainError("skew-t parameters must share a dimension");
            if (!(f.nu > 0.0)) throw DomainError("skew-t degrees of freedom must be > 0");
            require_cholesky(f.sigma, "skew-t scale matrix");
            std::vector<double> w(d);
            for (std::size_t i = 0; i < d; ++i) w[i] = std::sqrt(f.sigma(i, i));
            linalg::Matrix omega_bar(d);
            for (std::size_t i = 0; i < d; ++i)
              for (std::size_t j = 0; j < d; ++j) omega_bar(i, j) = f.sigma(i, j) / (w[i] * w[j]);
            const std::vector<double> oa = omega_bar * f.alpha;
            double quad = 0.0;
            for (std::size_t i = 0; i < d; ++i) quad += f.alpha[i] * oa[i];
            std::vector<double> delta(d);
            for (std::size_t i = 0; i < d; ++i) delta[i] = oa[i] / std::sqrt(1.0 + quad);
            linalg::Matrix resid(d);
            for (std::size_t i = 0; i < d; ++i)
              for (std::size_t j = 0; j < d; ++j)
                resid(i, j) = omega_bar(i, j) - delta[i] * delta[j];
            factors_.push_back(require_cholesky(resid, "skew-t residual covariance"));
            aux_ = delta;
            aux_.insert(aux_.end(), w.begin(), w.end());
          },
          [&](const CauchyFamily& f) {
            if (f.dim == 0) throw DomainError("cauchy dimension must be >= 1");
          },
          [&](const VmfFamily& f) {
            check_unit(f.mu, "vMF location");
            if (!(f.kappa >= 0.0)) throw DomainError("vMF concentration must be >= 0");
            factors_.push_back(orthonormal_complement(f.mu));
          },
          [&](const VmfMixtureFamily& f) {
            check_unit(f.mu1, "vMF mixture location 1");
            check_unit(f.mu2, "vMF mixture location 2");
            if (f.mu1.size() != f.mu2.size()) throw DomainError("vMF mixture dimension mismatch");
            if (!(f.weight >= 0.0 && f.weight <= 1.0))
              throw DomainError("vMF mixture weight must lie in [0, 1]");
            if (!(f.kappa1 >= 0.0 && f.kappa2 >= 0.0))
              throw DomainError("vMF concentration must be >= 0");
            factors_.push_back(orthonormal_complement(f.mu1));
            factors_.push_back(orthonormal_complement(f.mu2));
          },
          [&](const TangentVmfFamily& f) {
            check_unit(f.mu, "tangent vMF location");
            if (f.mu.size() < 3) throw DomainError("tangent vMF needs ambient dimension >= 3");
            if (f.omega.size() + 1 != f.mu.size())
              throw DomainError("tangent vMF omega must have dimension p - 1");
            check_unit(f.omega, "tangent vMF omega");
            if (!(f.kappa >= 0.0)) throw DomainError("vMF concentration must be >= 0");
            if (!(f.beta_a > 0.0 && f.beta_b > 0.0))
              throw DomainError("beta parameters must be > 0");
            factors_.push_back(orthonormal_complement(f.mu));
            factors_.push_back(orthonormal_complement(f.omega));
          },
          [&](const WishartFamily& f) {
            const std::size_t p = f.scale.size();
            if (p == 0) throw DomainError("wishart scale must be non-empty");
            if (!(f.dof > static_cast<double>(p) - 1.0))
              throw DomainError("wishart degrees of freedom must exceed p - 1");
            factors_.push_back(require_cholesky(f.scale, "wishart scale"));
          },
          [&](const SpdLogNormalFamily& f) {
            if (!(f.sdlog > 0.0) || !std::isfinite(f.meanlog))
              throw DomainError("log-normal parameters out of range");
          },
          [&](const WassersteinGaussianFamily& f) {
            if (f.law == WassersteinGaussianFamily::Law::kBeta && !(f.a > 0.0 && f.b > 0.0))
              throw DomainError("beta parameters must be > 0");
          },
          [&](const BhvFamily& f) {
            if (f.branch_probs.size() != 3) throw DomainError("BHV T3 needs three branch probabilities");
            double total = 0.0;
            for (double q : f.branch_probs) {
              if (!(q >= 0.0)) throw DomainError("branch probabilities must be >= 0");
              total += q;
            }
            if (std::abs(total - 1.0) > 1e-9) throw DomainError("branch probabilities must sum to 1");
            if (!(f.beta_a > 0.0 && f.beta_b > 0.0))
              throw DomainError("beta parameters must be > 0");
            aux_ = {f.branch_probs[0], f.branch_probs[0] + f.branch_probs[1]};
          },
      },
      spec_);
}

Point Sampler::draw(Philox4x32& rng, SamplingStats* stats) const {
  auto count = [stats](bool accepted) {
    if (!stats) return;
    ++stats->attempts;
    if (accepted) ++stats->accepted;
  };
  return std::visit(
      Overloaded{
          [&](const GaussianFamily& f) -> Point {
            count(true);
            return EuclideanVector{correlated_normal(rng, f.mean, factors_[0])};
          },
          [&](const GaussianMixtureFamily& f) -> Point {
            count(true);
            const double u = uniform01(rng);
            std::size_t c = 0;
            while (c + 1 < aux_.size() && u >= aux_[c]) ++c;
            return EuclideanVector{correlated_normal(rng, f.means[c], factors_[c])};
          },
          [&](const SkewTFamily& f) -> Point {
            count(true);
            const std::size_t d = f.xi.size();
            const double u0 = std::abs(std_normal(rng));
            const std::vector<double> zero(d, 0.0);
            std::vector<double> z = correlated_normal(rng, zero, factors_[0]);
            const double v = boost::random::chi_squared_distribution<double>(f.nu)(rng);
            const double scale = 1.0 / std::sqrt(v / f.nu);
            std::vector<double> y(d);
            for (std::size_t i = 0; i < d; ++i)
              y[i] = f.xi[i] + aux_[d + i] * (aux_[i] * u0 + z[i]) * scale;
            return EuclideanVector{std::move(y)};
          },
          [&](const CauchyFamily& f) -> Point {
            count(true);
            std::vector<double> x(f.dim);
            for (auto& v : x) v = boost::random::cauchy_distribution<double>(0.0, 1.0)(rng);
            return EuclideanVector{std::move(x)};
          },
          [&](const VmfFamily& f) -> Point {
            count(true);
            return make_unit(vmf_draw(rng, f.mu, f.kappa, factors_[0]));
          },
          [&](const VmfMixtureFamily& f) -> Point {
            count(true);
            if (uniform01(rng) < f.weight) return make_unit(vmf_draw(rng, f.mu1, f.kappa1, factors_[0]));
            return make_unit(vmf_draw(rng, f.mu2, f.kappa2, factors_[1]));
          },
          [&](const TangentVmfFamily& f) -> Point {
            count(true);
            const double v = 2.0 * beta(rng, f.beta_a, f.beta_b) - 1.0;
            const std::vector<double> u = vmf_draw(rng, f.omega, f.kappa, factors_[1]);
            return make_unit(compose(f.mu, factors_[0], v, u));
          },
          [&](const WishartFamily& f) -> Point {
            count(true);
            const std::size_t p = f.scale.size();
            linalg::Matrix a(p, 0.0);
            for (std::size_t i = 0; i < p; ++i) {
              const double k = f.dof - static_cast<double>(i);
              a(i, i) = std::sqrt(boost::random::chi_squared_distribution<double>(k)(rng));
              for (std::size_t j = 0; j < i; ++j) a(i, j) = std_normal(rng);
            }
            const linalg::Matrix b = factors_[0] * a;
            linalg::Matrix w(p);
            for (std::size_t i = 0; i < p; ++i)
              for (std::size_t j = 0; j <= i; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k <= j; ++k) s += b(i, k) * b(j, k);
                w(i, j) = s;
                w(j, i) = s;
              }
            return SpdMatrix{std::move(w)};
          },
          [&](const SpdLogNormalFamily& f) -> Point {
            boost::random::lognormal_distribution<double> ln(f.meanlog, f.sdlog);
            for (;;) {
              const double x = ln(rng);
              const double y = ln(rng);
              const double z = ln(rng);
              linalg::Matrix m{{x, y}, {y, z}};
              const bool ok = x * z > y * y + 1e-12 && linalg::cholesky(m).has_value();
              count(ok);
              if (ok) return SpdMatrix{std::move(m)};
            }
          },
          [&](const WassersteinGaussianFamily& f) -> Point {
            count(true);
            double s = 0.0;
            while (!(s > 0.0)) {
              s = f.law == WassersteinGaussianFamily::Law::kUniform ? uniform01(rng)
                                                                    : beta(rng, f.a, f.b);
            }
            return GaussianMeasure{0.0, s};
          },
          [&](const BhvFamily& f) -> Point {
            count(true);
            const double u = uniform01(rng);
            const int branch = u < aux_[0] ? 1 : (u < aux_[1] ? 2 : 3);
            return BhvTree{branch, beta(rng, f.beta_a, f.beta_b)};
          },
      },
      spec_);
}

std::vector<Point> Sampler::sample(std::size_t n, std::uint64_t seed, SamplingStats* stats) const {
  Philox4x32 rng(seed, 0);
  std::vector<Point> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(draw(rng, stats));
  return out;
}

std::vector<Point> sample(const SamplerSpec& spec, std::size_t n, std::uint64_t seed,
                          SamplingStats* stats) {
  return Sampler(spec).sample(n, seed, stats);
}

std::vector<Point> sample_gaussian(std::size_t dim, const std::vector<double>& mean,
                                   const linalg::Matrix& covariance, std::size_t n,
                                   std::uint64_t seed) {
  if (mean.size() != dim) throw DomainError("gaussian mean dimension mismatch");
  return sample(GaussianFamily{mean, covariance}, n, seed);
}

std::vector<Point> sample_skew_t(const std::vector<double>& xi, const linalg::Matrix& sigma,
                                 const std::vector<double>& alpha, double nu, std::size_t n,
                                 std::uint64_t seed) {
  return sample(SkewTFamily{xi, sigma, alpha, nu}, n, seed);
}

std::vector<Point> sample_vmf(const std::vector<double>& mu, double kappa, std::size_t n,
                              std::uint64_t seed) {
  return sample(VmfFamily{mu, kappa}, n, seed);
}

std::vector<Point> sample_vmf_mixture(const VmfMixtureFamily& family, std::size_t n,
                                      std::uint64_t seed) {
  return sample(family, n, seed);
}

std::vector<Point> sample_tangent_vmf(const TangentVmfFamily& family, std::size_t n,
                                      std::uint64_t seed) {
  return sample(family, n, seed);
}

std::vector<Point> sample_wishart(double dof, const linalg::Matrix& scale, std::size_t n,
                                  std::uint64_t seed) {
  return sample(WishartFamily{dof, scale}, n, seed);
}

std::vector<Point> sample_spd_lognormal(const SpdLogNormalFamily& family, std::size_t n,
                                        std::uint64_t seed, SamplingStats* stats) {
  return sample(family, n, seed, stats);
}

std::vector<Point> sample_wasserstein_gaussian(WassersteinGaussianFamily::Law law, std::size_t n,
                                               std::uint64_t seed) {
  WassersteinGaussianFamily f;
  f.law = law;
  return sample(f, n, seed);
}

std::vector<Point> sample_bhv_tree(const BhvFamily& family, std::size_t n, std::uint64_t seed) {
  return sample(family, n, seed);
}

std::vector<Point> sample_multivariate_cauchy(std::size_t dim, std::size_t n, std::uint64_t seed) {
  return sample(CauchyFamily{dim}, n, seed);
}

ContaminatedSample contaminate(const SamplerSpec& base, const SamplerSpec& contamination,
                               double alpha, std::size_t n, std::uint64_t seed) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("contamination fraction must lie in [0, 1]");
  const Sampler p1(base);
  const Sampler p2(contamination);
  if (p1.space() != p2.space()) throw DomainError("contaminating family lives in a different space");
  Philox4x32 select(derive_seed(seed, 0), 0);
  Philox4x32 r1(derive_seed(seed, 1), 0);
  Philox4x32 r2(derive_seed(seed, 2), 0);
  ContaminatedSample out;
  out.points.reserve(n);
  out.from_contamination.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool bad = uniform01(select) < alpha;
    out.from_contamination.push_back(bad);
    out.points.push_back(bad ? p2.draw(r2) : p1.draw(r1));
  }
  return out;
}

namespace presets {

SamplerSpec gaussian_r2() { return GaussianFamily{{0.0, 0.0}, linalg::Matrix::identity(2)}; }

SamplerSpec gaussian_mixture_r2() {
  GaussianMixtureFamily f;
  f.weights = {3.0 / 8.0, 3.0 / 8.0, 1.0 / 4.0};
  f.means = {{-3.0, 0.0}, {3.0, 0.0}, {0.0, -2.5}};
  f.covariances = {linalg::Matrix{{5.0, -4.0}, {-4.0, 5.0}}, linalg::Matrix{{5.0, 4.0}, {4.0, 5.0}},
                   linalg::Matrix{{4.0, 0.0}, {0.0, 1.0}}};
  return f;
}

SamplerSpec skew_t6_r2() {
  return SkewTFamily{{0.0, 0.0}, linalg::Matrix{{7.0, 4.0}, {4.0, 5.0}}, {5.0, 2.0}, 6.0};
}

SamplerSpec vmf_s2() { return VmfFamily{{0.0, 0.0, 1.0}, 20.0}; }

SamplerSpec tangent_vmf_s2() {
  return TangentVmfFamily{{0.0, 0.0, 1.0}, {0.7, std::sqrt(0.51)}, 10.0, 2.0, 8.0};
}

SamplerSpec vmf_mixture_s2() {
  const double r = 1.0 / std::sqrt(2.0);
  return VmfMixtureFamily{0.3, {0.0, -r, r}, 50.0, {0.0, r, r}, 50.0};
}

linalg::Matrix toeplitz_scale3() {
  return linalg::Matrix{{1.0, 0.6, 0.36}, {0.6, 1.0, 0.6}, {0.36, 0.6, 1.0}};
}

SamplerSpec wishart_spd3() { return WishartFamily{3.0, toeplitz_scale3()}; }

SamplerSpec spd_lognormal() { return SpdLogNormalFamily{}; }

SamplerSpec wasserstein_uniform() { return WassersteinGaussianFamily{}; }

SamplerSpec wasserstein_beta() {
  WassersteinGaussianFamily f;
  f.law = WassersteinGaussianFamily::Law::kBeta;
  return f;
}

SamplerSpec bhv_beta() { return BhvFamily{}; }

}  // namespace presets

}  // namespace metricq
