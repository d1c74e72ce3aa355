#include "bcluster/log_math.hpp"

#include <algorithm>
#include <cmath>

namespace bcluster {

double lgamma_safe(double x) {
#ifdef __GLIBC__
  int sign = 0;
  return ::lgamma_r(x, &sign);
#else
  return std::lgamma(x);
#endif
}

double log_beta(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw std::domain_error("log_beta: arguments must be positive");
  }
  return lgamma_safe(a) + lgamma_safe(b) - lgamma_safe(a + b);
}

double log_multibeta(std::span<const double> x) {
  if (x.size() < 2) {
    throw std::domain_error("log_multibeta: need at least two components");
  }
  double total = 0.0;
  double acc = 0.0;
  for (double v : x) {
    if (!(v > 0.0)) {
      throw std::domain_error("log_multibeta: components must be positive");
    }
    total += v;
    acc += lgamma_safe(v);
  }
  return acc - lgamma_safe(total);
}

double beta_bernoulli_logmarg(long n1, long n0, double a, double b) {
  if (n1 < 0 || n0 < 0) {
    throw std::domain_error("beta_bernoulli_logmarg: negative counts");
  }
  return log_beta(a + static_cast<double>(n1), b + static_cast<double>(n0)) -
         log_beta(a, b);
}

double dirichlet_multinomial_logmarg(std::span<const long> counts,
                                     std::span<const double> gamma) {
  if (counts.size() != gamma.size()) {
    throw std::domain_error(
        "dirichlet_multinomial_logmarg: counts/gamma length mismatch");
  }
  std::vector<double> shifted(counts.size());
  for (std::size_t l = 0; l < counts.size(); ++l) {
    if (counts[l] < 0) {
      throw std::domain_error("dirichlet_multinomial_logmarg: negative count");
    }
    shifted[l] = gamma[l] + static_cast<double>(counts[l]);
  }
  return log_multibeta(shifted) - log_multibeta(gamma);
}

double nig_logmarg(double sum_y, double sum_ysq, long m, const NIGParams& prior) {
  if (!(prior.kappa_theta > 0.0) || !(prior.alpha_sigma > 0.0) ||
      !(prior.beta_sigma > 0.0)) {
    throw std::domain_error("nig_logmarg: invalid Normal-Inverse-Gamma prior");
  }
  if (m < 0) throw std::domain_error("nig_logmarg: negative count");
  if (m == 0) return 0.0;
  const double n = static_cast<double>(m);
  const double kt = prior.kappa_theta;
  const double mt = prior.mu_theta;
  const double as = prior.alpha_sigma;
  const double bs = prior.beta_sigma;
  const double km = kt * mt + sum_y;
  const double quad = sum_ysq + kt * mt * mt - km * km / (kt + n);
  double out = as * std::log(bs) -
               0.5 * n * std::log(6.283185307179586477) -
               0.5 * std::log1p(n / kt) +
               lgamma_safe(as + 0.5 * n) - lgamma_safe(as) -
               (as + 0.5 * n) * std::log(bs + 0.5 * quad);
  return out;
}

double log_add_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  double m = std::max(a, b);
  double d = std::abs(a - b);
  if (d > 40.0) return m;
  return m + std::log1p(std::exp(-d));
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) {
    throw std::domain_error("log_sum_exp: empty sequence");
  }
  double m = kNegInf;
  for (double v : values) m = std::max(m, v);
  if (m == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - m);
  return m + std::log(acc);
}

LogShiftTable::LogShiftTable(double shift, long max_count)
    : table_(static_cast<std::size_t>(max_count) + 1) {
  for (long x = 0; x <= max_count; ++x) {
    table_[static_cast<std::size_t>(x)] = std::log(static_cast<double>(x) + shift);
  }
}

LgammaShiftTable::LgammaShiftTable(double shift, long max_count)
    : table_(static_cast<std::size_t>(max_count) + 1) {
  double base = lgamma_safe(shift);
  for (long x = 0; x <= max_count; ++x) {
    table_[static_cast<std::size_t>(x)] =
        lgamma_safe(static_cast<double>(x) + shift) - base;
  }
}

}  // namespace bcluster
