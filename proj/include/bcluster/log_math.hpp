#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "bcluster/errors.hpp"

namespace bcluster {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double lgamma_safe(double x);

// ln B(a, b) = ln G(a) + ln G(b) - ln G(a+b)
double log_beta(double a, double b);

// ln B(x_1, ..., x_L) = sum ln G(x_l) - ln G(sum x_l), L >= 2
double log_multibeta(std::span<const double> x);

// ln of the integrated Bernoulli likelihood with a Beta(a, b) prior:
// ln B(a + n1, b + n0) - ln B(a, b)
double beta_bernoulli_logmarg(long n1, long n0, double a, double b);

// ln of the integrated categorical likelihood with a Dirichlet(gamma) prior:
// ln B(counts + gamma) - ln B(gamma)
double dirichlet_multinomial_logmarg(std::span<const long> counts,
                                     std::span<const double> gamma);

struct NIGParams {
  double mu_theta = 0.0;
  double kappa_theta = 1.0;
  double alpha_sigma = 2.0;
  double beta_sigma = 0.5;
};

// Collapsed Normal-Inverse-Gamma marginal for m observations with
// sufficient statistics (sum_y, sum_ysq).
double nig_logmarg(double sum_y, double sum_ysq, long m, const NIGParams& prior);

double log_add_exp(double a, double b);
double log_sum_exp(std::span<const double> values);

inline double log_normal_pdf(double y, double mean, double var) {
  double d = y - mean;
  return -0.5 * (std::log(6.283185307179586477 * var) + d * d / var);
}

// Lookup tables for the hot sampler loops: ln(x + c) for integer x.
class LogShiftTable {
 public:
  LogShiftTable() = default;
  LogShiftTable(double shift, long max_count);
  double operator[](long x) const { return table_[static_cast<std::size_t>(x)]; }

 private:
  std::vector<double> table_;
};

// ln G(x + c) - ln G(c) for integer x, precomputed.
class LgammaShiftTable {
 public:
  LgammaShiftTable() = default;
  LgammaShiftTable(double shift, long max_count);
  double operator[](long x) const { return table_[static_cast<std::size_t>(x)]; }

 private:
  std::vector<double> table_;
};

}  // namespace bcluster
