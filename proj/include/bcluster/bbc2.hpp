#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bcluster/config_space.hpp"
#include "bcluster/fit_result.hpp"
#include "bcluster/log_math.hpp"
#include "bcluster/matrix.hpp"
#include "bcluster/rng.hpp"

namespace bcluster {

// Categorical-data bi-clustering with per-column, per-cluster feature
// selection over the canonical configuration space.
struct Bbc2Hyper {
  int K = 1;
  double alpha = 0.05;  // truncated-Poisson rate for K-1
  double pi_s = 0.1;
  std::vector<double> gamma;  // Dirichlet prior, length L (default all-ones)

  void validate() const {
    if (K < 1) throw UsageError("bbc2: K must be >= 1");
    if (alpha <= 0) throw UsageError("bbc2: alpha must be positive");
    if (pi_s <= 0.0 || pi_s >= 1.0) throw UsageError("bbc2: pi_s must lie in (0,1)");
    if (gamma.size() < 2) throw UsageError("bbc2: gamma needs length >= 2");
    for (double g : gamma) {
      if (g <= 0) throw std::domain_error("bbc2: gamma entries must be positive");
    }
  }
};

// ln P(K) under the truncated Poisson prior on K-1, up to the truncation
// normalizer (constant over a fixed K range).
double log_prior_K_bbc2(int K, double alpha);

// Marginal likelihood of one column: clusters with the selection bit off are
// pooled into a single Dirichlet-multinomial term, the others get their own.
double col_logmarg_bbc2(const std::vector<std::vector<long>>& counts,
                        const SjConfig& config, std::span<const double> gamma);

struct Bbc2Sample {
  std::vector<int> C;
  std::vector<std::uint16_t> cfg;  // per-column index into sj_config_space(K)
  double logpost = 0.0;
};

class Bbc2Sampler {
 public:
  static constexpr int kMaxK = 12;

  Bbc2Sampler(const CategoricalMatrix& Y, const Bbc2Hyper& hyper);

  void set_state(std::span<const int> C, std::span<const std::uint16_t> cfg);
  void randomize(RngStream& rng);

  void update_C(RngStream& rng);
  void update_S(RngStream& rng);
  void sweep(RngStream& rng) {
    update_C(rng);
    update_S(rng);
  }

  const std::vector<int>& C() const { return c_; }
  const std::vector<std::uint16_t>& cfg_ids() const { return cfg_; }
  const std::vector<SjConfig>& config_space() const { return space_; }
  std::vector<SjConfig> configs() const;

  // ln P(Y|C,S,K) + ln P(C|K) + ln P(S|K) at the current state.
  double logpost() const;

  // ln P(Y|C,S,K) alone.
  double data_logmarg() const;

  // Per-column posterior over configurations given the current clustering;
  // returns, for column j, log probabilities aligned with config_space().
  std::vector<double> config_log_posterior(long j) const;

  void refresh();

 private:
  friend double chib_log_PY_given_K(const std::vector<Bbc2Sample>&,
                                    const CategoricalMatrix&, const Bbc2Hyper&,
                                    RngStream&, std::size_t);
  void remove_row(long i);
  void add_row(long i, int k);
  double column_logmarg_at(long j, const SjConfig& cfg) const;

  const CategoricalMatrix& y_;
  Bbc2Hyper h_;
  long n_ = 0, p_ = 0;
  int L_ = 2;
  double gsum_ = 0.0;
  std::vector<SjConfig> space_;
  std::vector<double> space_log_prior_;
  std::vector<int> c_;                // labels 1..K
  std::vector<std::uint16_t> cfg_;    // per-column config index
  std::vector<std::uint32_t> bits_;   // per-column config bits (cached)
  std::vector<int> cnt_;              // K x p x L cluster-category counts
  std::vector<int> pool_;             // p x L pooled counts over off clusters
  std::vector<long> csize_;           // K
  std::vector<long> poolsize_;        // p
  std::vector<LogShiftTable> lt_g_;   // per category: ln(x + gamma_l)
  LogShiftTable lt_gs_;               // ln(x + sum gamma)
  std::vector<LgammaShiftTable> lg_g_;
  LgammaShiftTable lg_gs_;
};

// Chib-style estimate of ln P(Y|K) from retained samples: the posterior
// ordinate at the MAP state is Rao-Blackwellized over per-sample Theta draws,
// summing over cluster relabelings. At most max_samples samples are used
// (0 = all).
double chib_log_PY_given_K(const std::vector<Bbc2Sample>& samples,
                           const CategoricalMatrix& Y, const Bbc2Hyper& hyper,
                           RngStream& rng, std::size_t max_samples = 0);

FitResult fit_bbc2(const CategoricalMatrix& Y, std::span<const int> k_range,
                   Bbc2Hyper base, const McmcConfig& mcmc,
                   std::size_t chib_max_samples = 150);

}  // namespace bcluster
