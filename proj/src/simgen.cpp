#include "bcluster/simgen.hpp"

#include <algorithm>
#include <cmath>

namespace bcluster {

namespace {

// First `take` entries of a Fisher-Yates shuffle of 0..count-1.
std::vector<long> sample_without_replacement(long count, long take,
                                             RngStream& rng) {
  std::vector<long> idx(static_cast<std::size_t>(count));
  for (long t = 0; t < count; ++t) idx[static_cast<std::size_t>(t)] = t;
  for (long t = 0; t < take; ++t) {
    long r = t + rng.uniform_int(static_cast<int>(count - t));
    std::swap(idx[static_cast<std::size_t>(t)], idx[static_cast<std::size_t>(r)]);
  }
  idx.resize(static_cast<std::size_t>(take));
  return idx;
}

int draw_category(RngStream& rng, const std::vector<double>& theta) {
  double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t l = 0; l + 1 < theta.size(); ++l) {
    acc += theta[l];
    if (u < acc) return static_cast<int>(l);
  }
  return static_cast<int>(theta.size()) - 1;
}

}  // namespace

Bbc1Truth gen_bbc1(long n, long p, int K, long Ns, RngStream rng) {
  if (Ns > p) throw UsageError("gen_bbc1: Ns must not exceed p");
  Bbc1Truth out;
  out.Y = CategoricalMatrix::zeros(n, p, 2);
  out.C.resize(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    out.C[static_cast<std::size_t>(i)] = 1 + rng.uniform_int(K);
  }
  out.S.assign(static_cast<std::size_t>(p), 0);
  for (long j : sample_without_replacement(p, Ns, rng)) {
    out.S[static_cast<std::size_t>(j)] = 1;
  }
  for (long j = 0; j < p; ++j) {
    RngStream col = rng.derive(static_cast<std::uint64_t>(j));
    if (out.S[static_cast<std::size_t>(j)]) {
      std::vector<double> theta(static_cast<std::size_t>(K));
      for (int k = 0; k < K; ++k) {
        theta[static_cast<std::size_t>(k)] = col.beta(0.2, 0.2);
      }
      for (long i = 0; i < n; ++i) {
        out.Y.values(i, j) =
            col.bernoulli(theta[static_cast<std::size_t>(out.C[static_cast<std::size_t>(i)] - 1)])
                ? 1
                : 0;
      }
    } else {
      double theta0 = col.beta(1.0, 1.0);
      for (long i = 0; i < n; ++i) {
        out.Y.values(i, j) = col.bernoulli(theta0) ? 1 : 0;
      }
    }
  }
  return out;
}

Bbc2Truth gen_bbc2(long n, long p, int K, int L, double pi_s,
                   const std::vector<double>& dirichlet, RngStream rng) {
  if (L < 2) throw UsageError("gen_bbc2: L must be >= 2");
  std::vector<double> dir = dirichlet;
  if (dir.empty()) dir.assign(static_cast<std::size_t>(L), 1.0);
  if (static_cast<int>(dir.size()) != L) {
    throw UsageError("gen_bbc2: Dirichlet length must equal L");
  }
  Bbc2Truth out;
  out.Y = CategoricalMatrix::zeros(n, p, L);
  out.C.resize(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    out.C[static_cast<std::size_t>(i)] = 1 + rng.uniform_int(K);
  }
  out.S.resize(static_cast<std::size_t>(p));
  for (long j = 0; j < p; ++j) {
    RngStream col = rng.derive(static_cast<std::uint64_t>(j));
    std::uint32_t bits = 0;
    for (int k = 0; k < K; ++k) {
      if (col.bernoulli(pi_s)) bits |= 1u << k;
    }
    SjConfig cfg{canonicalize_bits(bits, K), K};
    out.S[static_cast<std::size_t>(j)] = cfg;
    std::vector<std::vector<double>> thetas(static_cast<std::size_t>(K) + 1);
    thetas[0].resize(static_cast<std::size_t>(L));
    col.dirichlet(dir, thetas[0]);  // shared by unselected clusters
    for (int k = 0; k < K; ++k) {
      if (!cfg.selected(k)) continue;
      thetas[static_cast<std::size_t>(k) + 1].resize(static_cast<std::size_t>(L));
      col.dirichlet(dir, thetas[static_cast<std::size_t>(k) + 1]);
    }
    for (long i = 0; i < n; ++i) {
      int c = out.C[static_cast<std::size_t>(i)];
      const auto& th = cfg.selected(c - 1) ? thetas[static_cast<std::size_t>(c)]
                                           : thetas[0];
      out.Y.values(i, j) = static_cast<std::int8_t>(draw_category(col, th));
    }
  }
  return out;
}

CategoricalMatrix gen_semisynthetic_noise(const CategoricalMatrix& base,
                                          long extra, RngStream rng) {
  long n = base.rows(), p = base.cols();
  int L = base.num_categories;
  CategoricalMatrix out = CategoricalMatrix::zeros(n, p + extra, L);
  out.row_ids = base.row_ids;
  for (long j = 0; j < p; ++j) {
    out.col_ids[static_cast<std::size_t>(j)] = base.col_ids[static_cast<std::size_t>(j)];
    out.values.col(j) = base.values.col(j);
  }
  std::vector<double> dir(static_cast<std::size_t>(L), 1.0);
  std::vector<double> theta(static_cast<std::size_t>(L));
  for (long t = 0; t < extra; ++t) {
    RngStream col = rng.derive(static_cast<std::uint64_t>(p + t));
    col.dirichlet(dir, theta);
    out.col_ids[static_cast<std::size_t>(p + t)] = "noise" + std::to_string(t + 1);
    for (long i = 0; i < n; ++i) {
      out.values(i, p + t) = static_cast<std::int8_t>(draw_category(col, theta));
    }
  }
  return out;
}

ShuffleResult shuffle_features(const CategoricalMatrix& Y, double fraction,
                               RngStream rng) {
  if (fraction < 0.0 || fraction > 1.0) {
    throw UsageError("shuffle_features: fraction must lie in [0,1]");
  }
  long p = Y.cols(), n = Y.rows();
  long take = static_cast<long>(std::llround(fraction * static_cast<double>(p)));
  ShuffleResult out;
  out.Y = Y;
  out.shuffled_cols = sample_without_replacement(p, take, rng);
  std::sort(out.shuffled_cols.begin(), out.shuffled_cols.end());
  for (long j : out.shuffled_cols) {
    RngStream col = rng.derive(static_cast<std::uint64_t>(j));
    for (long i = n - 1; i > 0; --i) {
      long r = col.uniform_int(static_cast<int>(i + 1));
      std::swap(out.Y.values(i, j), out.Y.values(r, j));
    }
  }
  return out;
}

HierarchyTruth gen_hierarchy(long n_per_leaf, long p, double frac_super,
                             double frac_sub, double super_beta,
                             double sub_beta, RngStream rng) {
  long n = 4 * n_per_leaf;
  HierarchyTruth out;
  out.Y = CategoricalMatrix::zeros(n, p, 2);
  out.leaf.resize(static_cast<std::size_t>(n));
  out.super.resize(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    int leaf = static_cast<int>(i / n_per_leaf) + 1;
    out.leaf[static_cast<std::size_t>(i)] = leaf;
    out.super[static_cast<std::size_t>(i)] = leaf <= 2 ? 1 : 2;
  }
  for (long j = 0; j < p; ++j) {
    RngStream col = rng.derive(static_cast<std::uint64_t>(j));
    double u = col.uniform();
    double theta[5];  // per leaf, 1-based
    if (u < frac_super) {
      double ta = col.beta(super_beta, super_beta);
      double tb = col.beta(super_beta, super_beta);
      theta[1] = theta[2] = ta;
      theta[3] = theta[4] = tb;
    } else if (u < frac_super + frac_sub) {
      int target = col.bernoulli(0.5) ? 1 : 2;
      double t1 = col.beta(sub_beta, sub_beta);
      double t2 = col.beta(sub_beta, sub_beta);
      double rest = col.beta(1.0, 1.0);
      if (target == 1) {
        theta[1] = t1;
        theta[2] = t2;
        theta[3] = theta[4] = rest;
      } else {
        theta[1] = theta[2] = rest;
        theta[3] = t1;
        theta[4] = t2;
      }
    } else {
      double t0 = col.beta(1.0, 1.0);
      theta[1] = theta[2] = theta[3] = theta[4] = t0;
    }
    for (long i = 0; i < n; ++i) {
      out.Y.values(i, j) =
          col.bernoulli(theta[out.leaf[static_cast<std::size_t>(i)]]) ? 1 : 0;
    }
  }
  return out;
}

IntegrationTruth gen_integration(long n_genes, long p_layers,
                                 const std::vector<long>& module_sizes,
                                 long supporters_per_module, double shift,
                                 RngStream rng) {
  const int K = static_cast<int>(module_sizes.size());
  if (static_cast<long>(K) * supporters_per_module > p_layers) {
    throw UsageError("gen_integration: not enough layers for the supporters");
  }
  IntegrationTruth out;
  out.K = K;
  out.C.assign(static_cast<std::size_t>(n_genes), 0);
  long at = 0;
  for (int k = 0; k < K; ++k) {
    for (long t = 0; t < module_sizes[static_cast<std::size_t>(k)]; ++t) {
      if (at >= n_genes) throw UsageError("gen_integration: modules exceed n");
      out.C[static_cast<std::size_t>(at++)] = k + 1;
    }
  }
  out.S.assign(static_cast<std::size_t>(p_layers * K), 0);
  const double sigma0 = 0.2;
  const double sigma_sig = 0.15;
  for (long d = 0; d < p_layers; ++d) {
    RngStream lay = rng.derive(static_cast<std::uint64_t>(d));
    int supports = 0;  // module index + 1, or 0
    if (d < static_cast<long>(K) * supporters_per_module) {
      supports = static_cast<int>(d / supporters_per_module) + 1;
      out.S[static_cast<std::size_t>(d * K + supports - 1)] = 1;
    }
    double theta0 = 0.05 * lay.normal();
    Eigen::MatrixXd z(n_genes, n_genes);
    for (long i = 0; i < n_genes; ++i) {
      z(i, i) = 0.0;
      for (long j = i + 1; j < n_genes; ++j) {
        int ci = out.C[static_cast<std::size_t>(i)];
        double y;
        if (ci > 0 && ci == out.C[static_cast<std::size_t>(j)] && ci == supports) {
          y = theta0 + shift + sigma_sig * lay.normal();
        } else {
          y = theta0 + sigma0 * lay.normal();
        }
        z(i, j) = y;
        z(j, i) = y;
      }
    }
    out.stack.layers.push_back(std::move(z));
    out.stack.background.push_back({theta0, sigma0 * sigma0});
    out.stack.sample_counts.push_back(50);
    out.stack.layer_ids.push_back("layer" + std::to_string(d + 1));
  }
  return out;
}

}  // namespace bcluster
