#pragma once

#include <array>
#include <cstdint>

#include "fairsel/dataset.hpp"

namespace fairsel {

// 2x2 symmetric covariance.
struct Cov2 {
  double a11 = 1.0, a12 = 0.0, a22 = 1.0;
  double det() const { return a11 * a22 - a12 * a12; }
};

// Parameters of the two-Gaussian synthetic generator with a rotation-biased
// sensitive attribute. Class-conditional feature distributions:
//   (x1,x2) | y=1 ~ N([1,1],  [[5,1],[1,5]])
//   (x1,x2) | y=0 ~ N([-1,-1],[[10,1],[1,3]])
// and Pr(z=1) = b*p1' / (b*p1' + p0') where p_c' is the class-c density at
// the rotated point (x1 cos f - x2 sin f, x1 sin f + x2 cos f).
//
// The default rotation is -pi/5. With the positive angle the sensitive
// attribute becomes so entangled with the class boundary that no linear
// classifier can be simultaneously accurate and fair on the result; the
// negative angle keeps the group bias while leaving fair boundaries reachable.
struct SynthSpec {
  std::size_t n_total = 3200;
  std::uint64_t seed = 0;
  double class_balance = 0.5;
  double bias_factor = 7.0;
  double rotation = -0.62831853071795864769;  // -pi/5

  void validate() const;
};

// Density of N(mean, cov) at point (x1, x2).
double bivariate_normal_density(double x1, double x2,
                                const std::array<double, 2>& mean,
                                const Cov2& cov);

// The per-sample probability Pr(z=1 | x) used by the generator.
double sensitive_probability(double x1, double x2, const SynthSpec& spec);

Dataset generate(const SynthSpec& spec);

}  // namespace fairsel
