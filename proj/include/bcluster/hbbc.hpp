#pragma once

#include <span>
#include <vector>

#include "bcluster/bbc2.hpp"
#include "bcluster/matrix.hpp"

namespace bcluster {

struct HbbcConfig {
  double q = 0.05;        // prior odds factor of a split
  long min_node_size = 0; // 0 = max(5, n/20)
  Bbc2Hyper node_hyper;   // K is managed internally (1 vs 2)
  McmcConfig node_mcmc{500, 200, 0};
  std::size_t chib_max_samples = 150;
  double threshold_override = -1.0;  // <0: use the step number t

  void validate() const {
    if (q <= 0.0 || q >= 1.0) throw UsageError("hbbc: q must lie in (0,1)");
    node_mcmc.validate();
  }
};

struct HbbcNode {
  int id = 0;
  int parent = -1;
  int left = -1, right = -1;  // -1 = leaf
  std::vector<int> members;   // row indices into Y
  int split_step = 0;         // step at which this node was split (0 = none)
  double log_w = kNegInf;     // split score, log scale
  bool size_blocked = false;
  bool scored = false;
  std::vector<long> selected_features;       // columns with any MAP selection
  std::vector<double> selection_posterior;   // per column, max over clusters
};

struct HbbcTree {
  std::vector<HbbcNode> nodes;  // node 0 = root
  std::vector<int> leaf_labels(long n) const;  // 1-based leaf index per row
  std::vector<int> leaves() const;
};

// Exact marginal likelihood of a block under a single cluster.
double node_logmarg_K1(const CategoricalMatrix& block,
                       std::span<const double> gamma);

struct SplitScore {
  double log_w = kNegInf;  // ln([q/(1-q)] * P(Y|K=2)/P(Y|K=1))
  bool size_blocked = false;
  std::vector<int> map_c;  // K=2 MAP labels within the block
  std::vector<SjConfig> map_s;
  std::vector<double> selection_posterior;
};

SplitScore node_split_score(const CategoricalMatrix& block,
                            const HbbcConfig& config, RngStream rng);

HbbcTree grow_tree(const CategoricalMatrix& Y, HbbcConfig config,
                   std::uint64_t seed);

}  // namespace bcluster
