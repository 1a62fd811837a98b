#include "fairsel/synthgen.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace fairsel {

namespace {

constexpr std::array<double, 2> kMean1 = {1.0, 1.0};
constexpr std::array<double, 2> kMean0 = {-1.0, -1.0};
constexpr Cov2 kCov1 = {5.0, 1.0, 5.0};
constexpr Cov2 kCov0 = {10.0, 1.0, 3.0};

// Lower Cholesky factor of a 2x2 SPD matrix.
struct Chol2 {
  double l11, l21, l22;
};

Chol2 cholesky(const Cov2& c) {
  if (c.a11 <= 0.0 || c.det() <= 0.0)
    throw std::invalid_argument("synthgen: covariance not positive definite");
  const double l11 = std::sqrt(c.a11);
  const double l21 = c.a12 / l11;
  const double l22 = std::sqrt(c.a22 - l21 * l21);
  return {l11, l21, l22};
}

}  // namespace

void SynthSpec::validate() const {
  if (n_total < 4) throw std::invalid_argument("synthgen: n_total must be >= 4");
  if (class_balance <= 0.0 || class_balance >= 1.0)
    throw std::invalid_argument("synthgen: class_balance must be in (0,1)");
  if (bias_factor <= 0.0)
    throw std::invalid_argument("synthgen: bias_factor must be > 0");
}

double bivariate_normal_density(double x1, double x2,
                                const std::array<double, 2>& mean,
                                const Cov2& cov) {
  const double det = cov.det();
  if (det <= 0.0)
    throw std::invalid_argument("synthgen: covariance not positive definite");
  const double d1 = x1 - mean[0];
  const double d2 = x2 - mean[1];
  // inverse of [[a11,a12],[a12,a22]] scaled by 1/det
  const double q =
      (cov.a22 * d1 * d1 - 2.0 * cov.a12 * d1 * d2 + cov.a11 * d2 * d2) / det;
  return std::exp(-0.5 * q) / (2.0 * std::numbers::pi * std::sqrt(det));
}

double sensitive_probability(double x1, double x2, const SynthSpec& spec) {
  const double c = std::cos(spec.rotation);
  const double s = std::sin(spec.rotation);
  const double r1 = x1 * c - x2 * s;
  const double r2 = x1 * s + x2 * c;
  const double p1 = bivariate_normal_density(r1, r2, kMean1, kCov1);
  const double p0 = bivariate_normal_density(r1, r2, kMean0, kCov0);
  const double b = spec.bias_factor;
  return b * p1 / (b * p1 + p0);
}

Dataset generate(const SynthSpec& spec) {
  spec.validate();
  const Chol2 ch1 = cholesky(kCov1);
  const Chol2 ch0 = cholesky(kCov0);

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  Dataset d;
  const std::size_t n = spec.n_total;
  d.features = Matrix(n, 2);
  d.labels.resize(n);
  d.sensitive.resize(n);
  d.ids.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    const int y = unif(rng) < spec.class_balance ? 1 : 0;
    const double u1 = normal(rng);
    const double u2 = normal(rng);
    const auto& mu = y == 1 ? kMean1 : kMean0;
    const auto& ch = y == 1 ? ch1 : ch0;
    const double x1 = mu[0] + ch.l11 * u1;
    const double x2 = mu[1] + ch.l21 * u1 + ch.l22 * u2;
    const double pz = sensitive_probability(x1, x2, spec);
    const int z = unif(rng) < pz ? 1 : 0;
    d.features.at(i, 0) = x1;
    d.features.at(i, 1) = x2;
    d.labels[i] = y;
    d.sensitive[i] = z;
    d.ids[i] = static_cast<std::int64_t>(i);
  }
  return d;
}

}  // namespace fairsel
