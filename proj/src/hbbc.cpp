#include "bcluster/hbbc.hpp"

#include <algorithm>
#include <cmath>

namespace bcluster {

std::vector<int> HbbcTree::leaves() const {
  std::vector<int> out;
  for (const auto& node : nodes) {
    if (node.left < 0) out.push_back(node.id);
  }
  return out;
}

std::vector<int> HbbcTree::leaf_labels(long n) const {
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  int next = 0;
  for (int id : leaves()) {
    ++next;
    for (int i : nodes[static_cast<std::size_t>(id)].members) {
      labels[static_cast<std::size_t>(i)] = next;
    }
  }
  return labels;
}

double node_logmarg_K1(const CategoricalMatrix& block,
                       std::span<const double> gamma) {
  if (block.rows() == 0) throw UsageError("node_logmarg_K1: empty block");
  std::vector<double> g(gamma.begin(), gamma.end());
  if (g.empty()) g.assign(static_cast<std::size_t>(block.num_categories), 1.0);
  double total = 0.0;
  std::vector<long> counts(g.size());
  for (long j = 0; j < block.cols(); ++j) {
    std::fill(counts.begin(), counts.end(), 0);
    for (long i = 0; i < block.rows(); ++i) {
      ++counts[static_cast<std::size_t>(block.values(i, j))];
    }
    total += dirichlet_multinomial_logmarg(counts, g);
  }
  return total;
}

namespace {

long resolve_min_node_size(const HbbcConfig& config, long n) {
  return config.min_node_size > 0 ? config.min_node_size
                                  : std::max<long>(5, n / 20);
}

}  // namespace

SplitScore node_split_score(const CategoricalMatrix& block,
                            const HbbcConfig& config, RngStream rng) {
  config.validate();
  SplitScore out;
  long n = block.rows();
  if (n < 2 * resolve_min_node_size(config, n)) {
    out.size_blocked = true;
    return out;
  }
  Bbc2Hyper h = config.node_hyper;
  h.K = 2;
  if (h.gamma.empty()) {
    h.gamma.assign(static_cast<std::size_t>(block.num_categories), 1.0);
  }
  double ln1 = node_logmarg_K1(block, h.gamma);

  Bbc2Sampler sampler(block, h);
  sampler.randomize(rng);
  std::vector<Bbc2Sample> samples;
  const auto& mcmc = config.node_mcmc;
  for (int it = 0; it < mcmc.iterations; ++it) {
    sampler.sweep(rng);
    if (it >= mcmc.burn_in) {
      samples.push_back({sampler.C(), sampler.cfg_ids(), sampler.logpost()});
    }
  }
  RngStream chib_rng = rng.derive(0x43484942ULL);
  double ln2 =
      chib_log_PY_given_K(samples, block, h, chib_rng, config.chib_max_samples);
  std::size_t best = 0;
  for (std::size_t m = 1; m < samples.size(); ++m) {
    if (samples[m].logpost > samples[best].logpost) best = m;
  }
  out.map_c = samples[best].C;
  sampler.set_state(samples[best].C, samples[best].cfg);
  out.map_s = sampler.configs();
  const auto& space = sampler.config_space();
  out.selection_posterior.assign(static_cast<std::size_t>(block.cols()), 0.0);
  for (long j = 0; j < block.cols(); ++j) {
    auto lp = sampler.config_log_posterior(j);
    double p_any = 0.0;
    for (std::size_t t = 0; t < space.size(); ++t) {
      if (space[t].bits != 0) p_any += std::exp(lp[t]);
    }
    out.selection_posterior[static_cast<std::size_t>(j)] = p_any;
  }
  out.log_w = std::log(config.q / (1.0 - config.q)) + ln2 - ln1;
  return out;
}

HbbcTree grow_tree(const CategoricalMatrix& Y, HbbcConfig config,
                   std::uint64_t seed) {
  config.validate();
  const long n = Y.rows();
  config.min_node_size = resolve_min_node_size(config, n);
  const long mns = config.min_node_size;

  HbbcTree tree;
  HbbcNode root;
  root.id = 0;
  root.members.resize(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) root.members[static_cast<std::size_t>(i)] = static_cast<int>(i);
  tree.nodes.push_back(std::move(root));

  std::vector<SplitScore> scores(1);

  for (;;) {
    auto leaf_ids = tree.leaves();
    long t = static_cast<long>(leaf_ids.size());
    double log_t = config.threshold_override > 0.0
                       ? std::log(config.threshold_override)
                       : std::log(static_cast<double>(t));
    // Score any leaf not seen before; P(Y^r|K_r) does not depend on t, so
    // scores are cached and only the comparison against t is redone.
    for (int id : leaf_ids) {
      auto& node = tree.nodes[static_cast<std::size_t>(id)];
      if (node.scored) continue;
      auto block = Y.take_rows(node.members);
      SplitScore sc = node_split_score(block, config,
                                       RngStream(seed, static_cast<std::uint64_t>(id)));
      if (!sc.size_blocked) {
        long n1 = static_cast<long>(std::count(sc.map_c.begin(), sc.map_c.end(), 1));
        long n2 = static_cast<long>(sc.map_c.size()) - n1;
        if (n1 < mns || n2 < mns) sc.size_blocked = true;
      }
      node.scored = true;
      node.log_w = sc.log_w;
      node.size_blocked = sc.size_blocked;
      if (static_cast<std::size_t>(id) >= scores.size()) scores.resize(static_cast<std::size_t>(id) + 1);
      scores[static_cast<std::size_t>(id)] = std::move(sc);
    }
    int pick = -1;
    for (int id : leaf_ids) {
      const auto& node = tree.nodes[static_cast<std::size_t>(id)];
      if (node.size_blocked || node.log_w <= log_t) continue;
      if (pick < 0 || node.log_w > tree.nodes[static_cast<std::size_t>(pick)].log_w) {
        pick = id;
      }
    }
    if (pick < 0) break;

    const SplitScore& sc = scores[static_cast<std::size_t>(pick)];
    HbbcNode left, right;
    left.id = static_cast<int>(tree.nodes.size());
    right.id = left.id + 1;
    left.parent = right.parent = pick;
    for (std::size_t r = 0; r < sc.map_c.size(); ++r) {
      int row = tree.nodes[static_cast<std::size_t>(pick)].members[r];
      (sc.map_c[r] == 1 ? left : right).members.push_back(row);
    }
    auto& parent = tree.nodes[static_cast<std::size_t>(pick)];
    parent.left = left.id;
    parent.right = right.id;
    parent.split_step = static_cast<int>(t);
    parent.selection_posterior = sc.selection_posterior;
    parent.selected_features.clear();
    for (std::size_t j = 0; j < sc.map_s.size(); ++j) {
      if (sc.map_s[j].bits != 0) {
        parent.selected_features.push_back(static_cast<long>(j));
      }
    }
    tree.nodes.push_back(std::move(left));
    tree.nodes.push_back(std::move(right));
  }
  return tree;
}

}  // namespace bcluster
