#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bcluster/fit_result.hpp"
#include "bcluster/log_math.hpp"
#include "bcluster/matrix.hpp"
#include "bcluster/rng.hpp"

namespace bcluster {

// Binary-data clustering with a global biomarker-selection vector.
struct Bbc1Hyper {
  int K = 1;
  double gamma0 = 0.0;  // prior mass of the null cluster (label 0)
  double pi_s = 0.1;    // prior probability that a column is a biomarker
  double a_theta1 = 1.0, a_theta2 = 1.0;  // Beta prior for biomarker columns
  double a_w1 = 1.0, a_w2 = 1.0;          // Beta prior for the background

  void validate() const {
    if (K < 1) throw UsageError("bbc1: K must be >= 1");
    if (gamma0 < 0.0 || gamma0 >= 1.0) {
      throw UsageError("bbc1: gamma0 must lie in [0,1)");
    }
    if (pi_s <= 0.0 || pi_s >= 1.0) throw UsageError("bbc1: pi_s must lie in (0,1)");
    if (a_theta1 <= 0 || a_theta2 <= 0 || a_w1 <= 0 || a_w2 <= 0) {
      throw std::domain_error("bbc1: Beta parameters must be positive");
    }
  }
};

// Marginal likelihood of one column given the clustering and its selection
// bit. Rows with C_i = 0 contribute to a pooled background term either way.
double col_logmarg_bbc1(std::span<const std::int8_t> column,
                        std::span<const int> C, int s, const Bbc1Hyper& hyper);

// Unnormalized log posterior ln P(Y|C,S,K) + ln P(C|K) + ln P(S|K).
double logpost_bbc1(std::span<const int> C, std::span<const std::uint8_t> S,
                    const CategoricalMatrix& Y, const Bbc1Hyper& hyper);

struct Bbc1Sample {
  std::vector<int> C;
  std::vector<std::uint8_t> S;
  double logpost = 0.0;
};

// Collapsed Gibbs sampler: Theta is integrated out everywhere and S is also
// integrated out of the C-conditional.
class Bbc1Sampler {
 public:
  Bbc1Sampler(const CategoricalMatrix& Y, const Bbc1Hyper& hyper);

  void set_assignment(std::span<const int> C);
  void randomize(RngStream& rng);

  void update_C(RngStream& rng);
  void update_S(RngStream& rng);
  void sweep(RngStream& rng) {
    update_C(rng);
    update_S(rng);
  }

  const std::vector<int>& C() const { return c_; }
  const std::vector<std::uint8_t>& S() const { return s_; }

  // ln P(Y|C,S,K) + ln P(C|K) + ln P(S|K) at the current state.
  double logpost() const;

  // ln P(Y|C,K) with S integrated out, at the current clustering.
  double collapsed_logmarg() const;

  // P(S_j = 1 | Y, C) for every column.
  std::vector<double> selection_prob() const;

  // Rebuild all counts and cached sums from (Y, C); also the reference
  // implementation for the incremental bookkeeping.
  void refresh();

 private:
  double column_fg_sum(long j) const;
  void remove_row(long i);
  void add_row(long i, int k);

  const CategoricalMatrix& y_;
  Bbc1Hyper h_;
  long n_ = 0, p_ = 0;
  std::vector<int> c_;
  std::vector<std::uint8_t> s_;
  std::vector<int> n1_;     // (K+1) x p one-counts; row 0 = null cluster
  std::vector<long> csize_; // K+1
  std::vector<double> sumfg_;  // per column: sum_k fg_k + null background
  std::vector<double> bg_all_; // per column: pooled background over all rows
  std::vector<double> wbuf_;
  double log_pi_ = 0.0, log_1mpi_ = 0.0;
  std::vector<double> log_prior_c_;  // index 0..K
  LogShiftTable lt_t1_, lt_t2_, lt_ts_, lt_w1_, lt_w2_, lt_ws_;
};

// Canonical relabeling: clusters renumbered 1,2,... in order of first
// appearance along i; label 0 is preserved.
std::vector<int> canonical_labels(std::span<const int> C);

// Frequency-based estimate of ln P(Y|K) from retained samples: the posterior
// mass of the modal assignment class is estimated by its sample frequency.
double log_PY_given_K_bbc1(const std::vector<Bbc1Sample>& samples,
                           const CategoricalMatrix& Y, const Bbc1Hyper& hyper);

// Index of the sample maximizing the log posterior (first on ties).
std::size_t map_extract(const std::vector<Bbc1Sample>& samples);

FitResult fit_bbc1(const CategoricalMatrix& Y, std::span<const int> k_range,
                   Bbc1Hyper base, const McmcConfig& mcmc);

}  // namespace bcluster
