#pragma once

#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

namespace fairsim::stats {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// Two-sided standard-normal tail, 2(1 - Phi(|z|)), computed without cancellation.
inline double two_sided_normal_tail(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

inline double normal_quantile(double p, double mean = 0.0, double sd = 1.0) {
  return boost::math::quantile(boost::math::normal_distribution<double>(mean, sd), p);
}

inline double chi_squared_quantile(double p, double dof) {
  return boost::math::quantile(boost::math::chi_squared_distribution<double>(dof), p);
}

/// P(C <= c) for C ~ Binomial(n, 1/2), exact in double for n < 1000.
inline double binomial_half_cdf(unsigned c, unsigned n) {
  double total = 0.0;
  double coeff = 1.0;  // C(n, 0)
  for (unsigned i = 0; i <= c && i <= n; ++i) {
    total += coeff;
    coeff = coeff * (n - i) / (i + 1);
  }
  return std::ldexp(total, -static_cast<int>(n));
}

inline double mean(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("mean of empty sample");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Unbiased sample variance (n - 1 denominator).
inline double variance(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("pearson: bad sizes");
  const double ma = mean(a);
  const double mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace fairsim::stats
