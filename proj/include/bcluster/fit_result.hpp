#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bcluster/config_space.hpp"
#include "bcluster/errors.hpp"

namespace bcluster {

// Chain settings shared by all samplers.
struct McmcConfig {
  int iterations = 900;
  int burn_in = 200;
  std::uint64_t seed = 0;

  void validate() const {
    if (iterations <= 0 || burn_in < 0 || burn_in >= iterations) {
      throw UsageError("mcmc config: require 0 <= burn_in < iterations");
    }
  }
};

// Fit summary for a single conditioning cluster count K.
struct KFit {
  int K = 0;
  double log_marg = 0.0;    // estimated ln P(Y|K)
  double log_prior_K = 0.0; // ln P(K); zero when the prior over K is uniform
  double map_score = 0.0;   // ln P(Y|C,S,K) + ln P(C|K) + ln P(S|K) at the MAP
  std::vector<int> C;       // labels in {0..K}, 0 = null cluster
  std::vector<std::uint8_t> S_vec;  // global selection vector (BBC1)
  std::vector<SjConfig> S_cfg;      // per-feature configurations (BBC2)
  std::vector<double> sel_prob;     // posterior selection probabilities
};

struct FitResult {
  std::string model;
  int K_hat = 0;
  std::vector<KFit> per_k;

  const KFit& best() const {
    for (const auto& f : per_k) {
      if (f.K == K_hat) return f;
    }
    throw UsageError("fit result: selected K missing from per-K fits");
  }
};

}  // namespace bcluster
