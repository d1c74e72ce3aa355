#pragma once

#include <cstdint>
#include <vector>

#include "bcluster/config_space.hpp"
#include "bcluster/integrate.hpp"
#include "bcluster/matrix.hpp"
#include "bcluster/rng.hpp"

namespace bcluster {

struct Bbc1Truth {
  CategoricalMatrix Y;
  std::vector<int> C;              // 1..K
  std::vector<std::uint8_t> S;     // biomarker columns
};

// Binary data with Ns biomarker columns: biomarker thetas per cluster from
// Beta(0.2, 0.2), background columns from Beta(1, 1).
Bbc1Truth gen_bbc1(long n, long p, int K, long Ns, RngStream rng);

struct Bbc2Truth {
  CategoricalMatrix Y;
  std::vector<int> C;
  std::vector<SjConfig> S;  // canonical per-column configurations
};

// Categorical data: per column, selection bits i.i.d. Bernoulli(pi_s) then
// canonicalized; all thetas from Dirichlet(dirichlet).
Bbc2Truth gen_bbc2(long n, long p, int K, int L, double pi_s,
                   const std::vector<double>& dirichlet, RngStream rng);

// Appends `extra` noise columns, each i.i.d. Categorical(theta) with
// theta ~ Dirichlet(1,...,1).
CategoricalMatrix gen_semisynthetic_noise(const CategoricalMatrix& base,
                                          long extra, RngStream rng);

// Randomly permutes the rows of a `fraction` of the columns, independently
// per column; returns the shuffled column indices.
struct ShuffleResult {
  CategoricalMatrix Y;
  std::vector<long> shuffled_cols;
};
ShuffleResult shuffle_features(const CategoricalMatrix& Y, double fraction,
                               RngStream rng);

struct HierarchyTruth {
  CategoricalMatrix Y;
  std::vector<int> leaf;   // 1..4
  std::vector<int> super;  // 1..2
};

// Two super-groups each split into two sub-groups. frac_super columns carry
// a strong between-super signal, frac_sub columns a weaker within-super
// signal; the rest are shared noise. Binary output.
HierarchyTruth gen_hierarchy(long n_per_leaf, long p, double frac_super,
                             double frac_sub, double super_beta,
                             double sub_beta, RngStream rng);

struct IntegrationTruth {
  CorrelationStack stack;
  std::vector<int> C;                   // 0 = null
  std::vector<std::uint8_t> S;          // (d, k) support, d-major
  int K = 0;
};

// Planted co-expression modules: per supporting (layer, module), the
// within-module pair values are shifted by `shift` from that layer's
// background; everything else is background noise.
IntegrationTruth gen_integration(long n_genes, long p_layers,
                                 const std::vector<long>& module_sizes,
                                 long supporters_per_module, double shift,
                                 RngStream rng);

}  // namespace bcluster
